/*
 * Copyright 2026 The ModalLens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Reference subprocess provider: serves a linear model over the line protocol
// documented in modallens/attribution/remote_provider.h.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "modallens/attribution/provider.h"
#include "modallens/attribution/remote_provider.h"
#include "modallens/store/store.h"

int main(int argc, char** argv) {
  CLI::App app{"Linear model behind the modallens subprocess protocol"};
  std::string model_path;
  std::string schema_fp;
  std::size_t max_batch = 64;
  std::optional<double> fail_on;
  app.add_option("model", model_path, "linear model JSON")->required();
  app.add_option("--schema-fingerprint", schema_fp, "declared schema fingerprint");
  app.add_option("--max-batch", max_batch, "declared max batch size");
  app.add_option("--fail-on", fail_on,
                 "answer with an error when an input's first language cell equals this");
  CLI11_PARSE(app, argc, argv);

  using modallens::attribution::LinearProvider;
  std::optional<LinearProvider> model;
  try {
    model.emplace(LinearProvider::FromJson(modallens::ReadJsonFile(model_path)));
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  nlohmann::json hello = {{"protocol", modallens::attribution::kProviderProtocol},
                          {"max_batch", max_batch},
                          {"max_in_flight", 1}};
  if (!schema_fp.empty()) hello["schema_fingerprint"] = schema_fp;
  std::cout << hello.dump() << std::endl;

  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    nlohmann::json reply;
    try {
      const nlohmann::json request = nlohmann::json::parse(line);
      reply["batch_id"] = request.at("batch_id");
      nlohmann::json outputs = nlohmann::json::array();
      for (const nlohmann::json& input : request.at("inputs")) {
        const auto triple = modallens::attribution::TripleFromJson(input);
        const auto& language = triple[0];
        if (fail_on && language.rows() > 0 && language.cols() > 0 &&
            language(0, 0) == *fail_on) {
          throw std::runtime_error("refusing input with sentinel value");
        }
        outputs.push_back(model->PredictOne(triple));
      }
      reply["outputs"] = outputs;
    } catch (const std::exception& e) {
      reply["error"] = e.what();
    }
    std::cout << reply.dump() << std::endl;
  }
  return 0;
}
