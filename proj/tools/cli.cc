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

#include "tools/cli.h"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "modallens/pipeline/stages.h"
#include "modallens/service/http.h"
#include "modallens/service/service.h"

namespace modallens::cli {
namespace fs = std::filesystem;
using nlohmann::json;

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kProvider:
      return kExitProvider;
    case ErrorKind::kIncompleteUpstream:
    case ErrorKind::kNotReady:
    case ErrorKind::kMissingAttribution:
      return kExitUpstream;
    default:
      return kExitValidation;
  }
}

namespace {

service::HttpServer* g_server = nullptr;

void StopServer(int) {
  if (g_server != nullptr) g_server->Stop();
}

void Report(std::ostream& out, const pipeline::StageOutcome& o) {
  out << o.stage << ": " << (o.skipped ? "up to date" : "done") << " (" << o.fingerprint << ")";
  if (!o.skipped && !o.summary.is_null()) out << " " << o.summary.dump();
  out << "\n";
}

interactions::Thresholds ParseThresholds(const std::string& text) {
  std::vector<double> v;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t pos = 0;
      v.push_back(std::stod(part, &pos));
      if (pos != part.size()) v.clear(), v.resize(4);
    } catch (const std::exception&) {
      Throw(ErrorKind::kArgument, "--thresholds expects sig,dom,confl");
    }
  }
  if (v.size() != 3) Throw(ErrorKind::kArgument, "--thresholds expects sig,dom,confl");
  interactions::Thresholds th{v[0], v[1], v[2]};
  if (!th.Valid()) Throw(ErrorKind::kRange, "thresholds must lie strictly between 0 and 1");
  return th;
}

int Serve(const Store& store, const service::ServeOptions& options, std::ostream& err) {
  service::AnalysisService svc(store);
  service::HttpServer server(svc, options);
  const int port = server.Bind();
  err << "serving " << store.root().string() << " on http://" << options.host << ":" << port
      << "\n";
  err.flush();
  g_server = &server;
  std::signal(SIGINT, StopServer);
  std::signal(SIGTERM, StopServer);
  server.Listen();
  g_server = nullptr;
  return kExitOk;
}

// Maps a view name onto the service request that produces it.
struct ViewRequest {
  std::string method = "GET";
  std::string path;
  std::string body;
};

ViewRequest ViewFor(const std::string& view, const std::string& id, const std::string& body) {
  static const std::map<std::string, std::string> kPaths = {
      {"summary", "/summary"}, {"templates", "/templates"}, {"projection", "/projection"},
      {"metrics", "/metrics"}, {"meta", "/meta"}};
  if (view == "instance") {
    if (id.empty()) Throw(ErrorKind::kArgument, "--view instance needs --id");
    return {"GET", "/instances/" + id, ""};
  }
  if (view == "groups") {
    if (body.empty()) Throw(ErrorKind::kArgument, "--view groups needs --body");
    std::string text = body;
    if (text.front() == '@') text = ReadFile(text.substr(1));
    return {"POST", "/groups/query", text};
  }
  const auto it = kPaths.find(view);
  if (it == kPaths.end()) Throw(ErrorKind::kArgument, "unknown view `" + view + "`");
  return {"GET", it->second, ""};
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explain how multimodal sentiment models use language, audio and vision"};
  app.require_subcommand(1);
  std::string store_dir = Store::DefaultRoot().string();
  app.add_option("--store", store_dir, "artifact store directory")
      ->envname("MODALLENS_STORE")
      ->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate and snapshot the inputs");
  pipeline::IngestOptions ingest_opt;
  std::string schema_path, instances_path;
  ingest->add_option("--schema", schema_path, "feature schema JSON")->required();
  ingest->add_option("--instances", instances_path, "instances JSONL")->required();
  ingest->add_flag("--allow-invalid", ingest_opt.allow_invalid, "keep valid lines when some fail");

  // attribute
  auto* attribute = app.add_subcommand("attribute", "compute feature attributions");
  pipeline::AttributeOptions attr;
  std::string method = "auto", granularity = "feature";
  bool no_time_steps = false, quiet = false;
  attribute->add_option("--provider", attr.provider_spec,
                        "linear:<model.json>, mlp-toy[:seed], subprocess:<cmd> or http://host:port/path")
      ->required();
  attribute->add_option("--method", method, "auto, exact, kernel or linear")->capture_default_str();
  attribute->add_option("--granularity", granularity, "feature, time_step or cell")
      ->capture_default_str();
  attribute->add_option("--samples", attr.config.n_samples, "Kernel SHAP coalition budget")
      ->capture_default_str();
  attribute->add_option("--seed", attr.config.seed, "sampling seed")->capture_default_str();
  attribute->add_option("--background-size", attr.config.background_size,
                        "reference instances in the background (0 = all)")
      ->capture_default_str();
  attribute->add_flag("--zero-background", attr.config.zero_background, "absent means zero");
  attribute->add_flag("--no-time-steps", no_time_steps, "skip the per-time-step pass");
  attribute->add_option("--jobs", attr.config.jobs, "instances attributed in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  attribute->add_flag("--quiet", quiet, "no progress on stderr");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "label interactions and summarize groups");
  pipeline::AnalysisConfig analysis;
  std::string thresholds;
  analyze->add_option("--thresholds", thresholds, "sig,dom,confl; skips the threshold search");
  analyze->add_option("--grid-step", analysis.grid_step, "threshold search grid step")
      ->capture_default_str();

  // mine
  auto* mine = app.add_subcommand("mine", "mine influential feature templates");
  pipeline::MiningConfig mining;
  std::string sort = "support";
  mine->add_option("--min-support", mining.min_support, "minimum support fraction")
      ->capture_default_str();
  mine->add_option("--percentile", mining.percentile, "per-modality influence cutoff percentile")
      ->capture_default_str();
  mine->add_option("--sort", sort, "support, importance or error")->capture_default_str();

  // project
  auto* project = app.add_subcommand("project", "per-modality t-SNE projections");
  projection::ProjectionConfig proj;
  std::string language_input = "auto";
  const auto add_projection_flags = [&](CLI::App* cmd) {
    cmd->add_option("--perplexity", proj.tsne.perplexity, "t-SNE perplexity")->capture_default_str();
    cmd->add_option("--iters", proj.tsne.iterations, "t-SNE iterations")->capture_default_str();
    cmd->add_option("--tsne-seed", proj.tsne.seed, "t-SNE initialization seed")->capture_default_str();
    cmd->add_option("--heat-resolution", proj.heat_resolution, "heat grid cells per side")
        ->capture_default_str();
    cmd->add_option("--heat-bandwidth", proj.heat_bandwidth,
                    "heat kernel width as a fraction of the embedding extent")
        ->capture_default_str();
    cmd->add_option("--language-input", language_input, "auto, embedding or influential-words")
        ->capture_default_str();
  };
  add_projection_flags(project);

  // serve
  auto* serve = app.add_subcommand("serve", "start the query API");
  service::ServeOptions serve_opt;
  std::string static_dir;
  const auto add_serve_flags = [&](CLI::App* cmd) {
    cmd->add_option("--port", serve_opt.port, "TCP port (0 picks one)")->capture_default_str();
    cmd->add_option("--host", serve_opt.host, "bind address")->capture_default_str();
    cmd->add_option("--static-dir", static_dir, "UI bundle to serve at /");
  };
  add_serve_flags(serve);

  // export
  auto* exp = app.add_subcommand("export", "write a view payload to a file");
  std::string view, id, body, out_path;
  std::vector<std::string> params;
  exp->add_option("--view", view, "summary, groups, templates, projection, instance, metrics or meta")
      ->required();
  exp->add_option("--param", params, "query parameter key=value (repeatable)");
  exp->add_option("--id", id, "instance id for --view instance");
  exp->add_option("--body", body, "query JSON (or @file) for --view groups");
  exp->add_option("--out", out_path, "output file (stdout when omitted)");

  // demo
  auto* demo = app.add_subcommand("demo", "planted-interaction corpus through the whole pipeline");
  pipeline::DemoOptions demo_opt;
  bool no_serve = false;
  demo->add_option("--seed", demo_opt.seed, "corpus seed")->capture_default_str();
  demo->add_option("--per-class", demo_opt.per_class, "instances per interaction type")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  demo->add_option("--jobs", demo_opt.jobs, "attribution parallelism")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  demo->add_flag("--no-serve", no_serve, "print the store fingerprint instead of serving");
  add_serve_flags(demo);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    for (auto* sub : app.get_subcommands()) out << sub->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const Store store(store_dir);
    if (!static_dir.empty()) serve_opt.static_dir = fs::path(static_dir);
    if (const auto li = projection::ParseLanguageInput(language_input)) {
      proj.language_input = *li;
    } else {
      Throw(ErrorKind::kArgument, "unknown --language-input `" + language_input + "`");
    }

    if (ingest->parsed()) {
      ingest_opt.schema_path = schema_path;
      ingest_opt.instances_path = instances_path;
      Report(out, pipeline::RunIngest(store, ingest_opt));
    } else if (attribute->parsed()) {
      const auto m = attribution::ParseMethod(method);
      if (!m) Throw(ErrorKind::kArgument, "unknown --method `" + method + "`");
      const auto g = attribution::ParseGranularity(granularity);
      if (!g) Throw(ErrorKind::kArgument, "unknown --granularity `" + granularity + "`");
      attr.config.method = *m;
      attr.config.granularity = *g;
      attr.config.time_step_pass = !no_time_steps;
      if (!quiet) {
        attr.progress = [&err](std::size_t done, std::size_t total) {
          err << "\rattribute: " << done << "/" << total << std::flush;
          if (done == total) err << "\n";
        };
      }
      Report(out, pipeline::RunAttribute(store, attr));
    } else if (analyze->parsed()) {
      if (!thresholds.empty()) analysis.thresholds = ParseThresholds(thresholds);
      Report(out, pipeline::RunAnalyze(store, analysis));
    } else if (mine->parsed()) {
      const auto s = templates::ParseTemplateSort(sort);
      if (!s) Throw(ErrorKind::kArgument, "unknown --sort `" + sort + "`");
      mining.sort = *s;
      Report(out, pipeline::RunMine(store, mining));
    } else if (project->parsed()) {
      Report(out, pipeline::RunProject(store, proj));
    } else if (serve->parsed()) {
      return Serve(store, serve_opt, err);
    } else if (exp->parsed()) {
      std::map<std::string, std::string> query;
      for (const auto& p : params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) Throw(ErrorKind::kArgument, "--param expects key=value");
        query[p.substr(0, eq)] = p.substr(eq + 1);
      }
      const ViewRequest request = ViewFor(view, id, body);
      service::AnalysisService svc(store);
      const service::Response r = svc.Handle(request.method, request.path, query, request.body);
      if (r.status != 200) {
        const json e = json::parse(r.body)["error"];
        err << "error: " << e["message"].get<std::string>() << "\n";
        const std::string kind = e["kind"];
        for (int k = 0; k <= static_cast<int>(ErrorKind::kIo); ++k) {
          if (ErrorKindName(static_cast<ErrorKind>(k)) == kind) {
            return ExitCodeFor(static_cast<ErrorKind>(k));
          }
        }
        return kExitValidation;
      }
      if (out_path.empty()) {
        out << r.body << "\n";
      } else {
        WriteFileAtomic(out_path, r.body);
      }
    } else if (demo->parsed()) {
      demo_opt.projection = proj;
      for (const auto& o : pipeline::RunDemo(store, demo_opt)) Report(out, o);
      if (no_serve) {
        out << "store fingerprint: " << pipeline::StoreContentFingerprint(store) << "\n";
        return kExitOk;
      }
      out.flush();
      return Serve(store, serve_opt, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace modallens::cli
