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

// HTTP front end for AnalysisService. Every route goes through
// AnalysisService::Handle, so the bytes match `export`.

#ifndef MODALLENS_SERVICE_HTTP_H_
#define MODALLENS_SERVICE_HTTP_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "modallens/service/service.h"

namespace httplib {
class Server;
}

namespace modallens::service {

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  // Mounted at / when set (the UI bundle).
  std::optional<std::filesystem::path> static_dir;
};

class HttpServer {
 public:
  HttpServer(AnalysisService& service, ServeOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the port. IoError when the address is taken.
  int Bind();
  // Blocks until Stop().
  void Listen();
  void Stop();

 private:
  AnalysisService& service_;
  ServeOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace modallens::service

#endif  // MODALLENS_SERVICE_HTTP_H_
