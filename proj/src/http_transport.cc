//
// Copyright 2026 The Perturbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// The only translation unit that includes cpp-httplib.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "perturbench/error.h"
#include "perturbench/gateway.h"

namespace perturbench {
namespace {

constexpr char kDefaultPath[] = "/v1/chat/completions";

class HttplibTransport : public Transport {
 public:
  HttplibTransport(const std::string& url, std::chrono::seconds timeout)
      : timeout_(timeout) {
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "endpoint '" + url + "' lacks a scheme");
    }
    const std::size_t slash = url.find('/', scheme + 3);
    base_ = url.substr(0, slash);
    path_ = slash == std::string::npos ? kDefaultPath : url.substr(slash);
    if (!httplib::Client(base_).is_valid()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "unsupported endpoint '" + url + "'");
    }
  }

  HttpResponse Post(const std::string& body,
                    const std::string& bearer_token) override {
    httplib::Headers headers;
    if (!bearer_token.empty()) {
      headers.emplace("Authorization", "Bearer " + bearer_token);
    }
    // One client per request: httplib::Client is not safe to share across
    // threads.
    httplib::Client client(base_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      throw Error(ErrorCode::kTransportError,
                  base_ + path_ + ": " + httplib::to_string(result.error()));
    }
    return {result->status, result->body};
  }

 private:
  std::string base_;
  std::string path_;
  std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<Transport> MakeHttpTransport(const std::string& url,
                                             std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(url, timeout);
}

}  // namespace perturbench
