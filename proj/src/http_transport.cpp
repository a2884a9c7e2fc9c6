// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "vmsched/error.hpp"
#include "vmsched/gateway.hpp"

namespace vmsched {

namespace {

class HttplibTransport : public ChatTransport {
 public:
  std::optional<HttpReply> post(const std::string& url, const std::string& body,
                                const std::map<std::string, std::string>& headers,
                                std::chrono::milliseconds timeout) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "endpoint is not a URL: " + url);
    const auto path_begin = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_begin);
    const std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        h.emplace(k, v);
      }
    }
    auto res = client.Post(path, h, body, content_type);
    if (!res) return std::nullopt;
    return HttpReply{res->status, res->body};
  }
};

}  // namespace

std::unique_ptr<ChatTransport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

}  // namespace vmsched
