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

#include "modallens/service/http.h"

#include <map>

#include "httplib.h"
#include "modallens/common/error.h"

namespace modallens::service {

HttpServer::HttpServer(AnalysisService& service, ServeOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  if (options_.static_dir) {
    if (!server_->set_mount_point("/", options_.static_dir->string())) {
      Throw(ErrorKind::kIo, "static directory " + options_.static_dir->string() + " does not exist");
    }
  }
  const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [key, value] : req.params) {
      if (!query.emplace(key, value).second) {
        res.status = 400;
        res.set_content(ErrorBody(ErrorKind::kArgument, "parameter `" + key + "` given twice"),
                        "application/json");
        return;
      }
    }
    const Response r = service_.Handle(req.method, req.path, query, req.body);
    res.status = r.status;
    if (req.path == "/templates" && r.status == 200) {
      res.set_header("X-Modallens-Cache", r.cache_hit ? "hit" : "miss");
    }
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, "application/json");
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind() {
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    Throw(ErrorKind::kIo, "cannot listen on " + options_.host + ":" + std::to_string(options_.port));
  }
  return port;
}

void HttpServer::Listen() { server_->listen_after_bind(); }

void HttpServer::Stop() {
  if (server_) server_->stop();
}

}  // namespace modallens::service
