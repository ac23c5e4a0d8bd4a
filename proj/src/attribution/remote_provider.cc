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

#include "modallens/attribution/remote_provider.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "httplib.h"
#include "modallens/common/error.h"

namespace modallens::attribution {

nlohmann::json MakeBatchRequest(std::uint64_t batch_id,
                                std::span<const FeatureTriple> batch) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const FeatureTriple& triple : batch) inputs.push_back(TripleToJson(triple));
  return {{"batch_id", batch_id}, {"inputs", std::move(inputs)}};
}

std::vector<double> ParseBatchResponse(const nlohmann::json& response,
                                       std::uint64_t batch_id, std::size_t expected) {
  if (!response.is_object() || !response.contains("batch_id")) {
    Throw(ErrorKind::kProvider, "response lacks batch_id");
  }
  if (response["batch_id"].get<std::uint64_t>() != batch_id) {
    Throw(ErrorKind::kProvider, "response batch_id " + response["batch_id"].dump() +
                                    " does not match request " + std::to_string(batch_id));
  }
  if (response.contains("error")) {
    Throw(ErrorKind::kProvider, "provider reported: " + response["error"].dump());
  }
  if (!response.contains("outputs") || !response["outputs"].is_array()) {
    Throw(ErrorKind::kProvider, "response lacks outputs");
  }
  std::vector<double> outputs;
  for (const nlohmann::json& v : response["outputs"]) {
    if (!v.is_number()) Throw(ErrorKind::kProvider, "non-numeric output");
    outputs.push_back(v.get<double>());
  }
  if (outputs.size() != expected) {
    Throw(ErrorKind::kProvider, "provider returned " + std::to_string(outputs.size()) +
                                    " outputs for " + std::to_string(expected) + " inputs");
  }
  return outputs;
}

SubprocessProvider::SubprocessProvider(std::string command,
                                       std::string expected_schema_fingerprint,
                                       std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  // A dead child must surface as a write error, not a signal.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
    Throw(ErrorKind::kProvider, "cannot create pipes: " + std::string(std::strerror(errno)));
  }
  pid_ = ::fork();
  if (pid_ < 0) Throw(ErrorKind::kProvider, "fork failed");
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);

  nlohmann::json handshake;
  try {
    handshake = nlohmann::json::parse(ReadLine());
  } catch (const nlohmann::json::exception& e) {
    Shutdown();
    Throw(ErrorKind::kProvider, "malformed handshake from `" + command_ + "`: " + e.what());
  } catch (...) {
    Shutdown();
    throw;
  }
  if (handshake.value("protocol", std::string()) != kProviderProtocol) {
    Shutdown();
    Throw(ErrorKind::kProvider, "`" + command_ + "` does not speak " + kProviderProtocol);
  }
  info_.kind = ProviderKind::kSubprocess;
  info_.max_batch = std::max<std::size_t>(1, handshake.value("max_batch", std::size_t{64}));
  info_.max_in_flight = std::max<std::size_t>(1, handshake.value("max_in_flight", std::size_t{1}));
  info_.schema_fingerprint = handshake.value("schema_fingerprint", std::string());
  if (!expected_schema_fingerprint.empty() && !info_.schema_fingerprint.empty() &&
      info_.schema_fingerprint != expected_schema_fingerprint) {
    Shutdown();
    Throw(ErrorKind::kProvider, "provider schema fingerprint " + info_.schema_fingerprint +
                                    " does not match " + expected_schema_fingerprint);
  }
}

SubprocessProvider::~SubprocessProvider() { Shutdown(); }

void SubprocessProvider::Shutdown() {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin asks the child to exit; give it a moment, then insist.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string SubprocessProvider::ReadLine() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto newline = read_buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = read_buffer_.substr(0, newline);
      read_buffer_.erase(0, newline + 1);
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      Throw(ErrorKind::kProvider, "timed out waiting for `" + command_ + "`");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) Throw(ErrorKind::kProvider, "`" + command_ + "` closed its output");
    read_buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void SubprocessProvider::WriteLine(const std::string& line) {
  std::string data = line + "\n";
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + written, data.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      Throw(ErrorKind::kProvider, "cannot write to `" + command_ +
                                      "`: " + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
}

std::vector<double> SubprocessProvider::Predict(std::span<const FeatureTriple> batch) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (pid_ < 0) Throw(ErrorKind::kProvider, "provider process is not running");
  const std::uint64_t id = next_batch_id_++;
  WriteLine(MakeBatchRequest(id, batch).dump());
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(ReadLine());
  } catch (const nlohmann::json::exception& e) {
    Throw(ErrorKind::kProvider, std::string("malformed response: ") + e.what());
  }
  return ParseBatchResponse(response, id, batch.size());
}

nlohmann::json SubprocessProvider::Describe() const {
  return {{"kind", "subprocess"},
          {"command", command_},
          {"schema_fingerprint", info_.schema_fingerprint}};
}

HttpProvider::HttpProvider(std::string url, std::size_t max_batch, std::size_t max_in_flight)
    : url_(std::move(url)), max_batch_(max_batch), max_in_flight_(max_in_flight) {
  constexpr std::string_view kScheme = "http://";
  if (url_.rfind(kScheme, 0) != 0) {
    Throw(ErrorKind::kArgument, "only http:// callback URLs are supported: " + url_);
  }
  std::string rest = url_.substr(kScheme.size());
  const auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    host_ = authority.substr(0, colon);
    port_ = std::stoi(authority.substr(colon + 1));
  } else {
    host_ = authority;
  }
  if (host_.empty()) Throw(ErrorKind::kArgument, "callback URL has no host: " + url_);
}

std::vector<double> HttpProvider::Predict(std::span<const FeatureTriple> batch) {
  std::uint64_t id;
  {
    std::lock_guard<std::mutex> lock(id_mutex_);
    id = next_batch_id_++;
  }
  httplib::Client client(host_, port_);
  client.set_read_timeout(60, 0);
  auto result = client.Post(path_, MakeBatchRequest(id, batch).dump(), "application/json");
  if (!result) {
    Throw(ErrorKind::kProvider, "POST " + url_ + " failed: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    Throw(ErrorKind::kProvider, "POST " + url_ + " returned status " +
                                    std::to_string(result->status));
  }
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::exception& e) {
    Throw(ErrorKind::kProvider, std::string("malformed response: ") + e.what());
  }
  return ParseBatchResponse(response, id, batch.size());
}

ProviderInfo HttpProvider::info() const {
  return {ProviderKind::kHttpCallback, max_batch_, max_in_flight_, ""};
}

}  // namespace modallens::attribution
