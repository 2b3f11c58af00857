// Copyright 2026 The subtag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "http_client.h"

#include <httplib.h>

#include "subtag/error.h"

namespace subtag::http {

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InputError("endpoint \"" + url + "\" has no scheme");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http") {
    throw InputError("endpoint \"" + url + "\" must use plain http");
  }
  const auto host_begin = scheme_end + 3;
  const auto path_begin = url.find('/', host_begin);
  Endpoint ep;
  ep.origin = url.substr(0, path_begin);
  if (ep.origin.size() <= host_begin) {
    throw InputError("endpoint \"" + url + "\" has no host");
  }
  if (path_begin != std::string::npos) {
    ep.base_path = url.substr(path_begin);
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  return ep;
}

nlohmann::json post_json(const Endpoint& endpoint, const std::string& route,
                         const nlohmann::json& body, double timeout_seconds,
                         std::size_t batch_index) {
  httplib::Client client(endpoint.origin);
  const auto secs = static_cast<time_t>(timeout_seconds);
  const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  const auto path = endpoint.base_path + route;
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + endpoint.origin + path + " failed (batch " +
                             std::to_string(batch_index) +
                             "): " + httplib::to_string(res.error()),
                         batch_index);
  }
  if (res->status < 200 || res->status >= 300) {
    std::string detail = res->body;
    const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_object() && parsed.contains("error") && parsed["error"].is_string()) {
      detail = parsed["error"].get<std::string>();
    }
    throw TransportError("POST " + endpoint.origin + path + " returned HTTP " +
                             std::to_string(res->status) + " (batch " +
                             std::to_string(batch_index) + "): " + detail,
                         batch_index);
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw ProtocolError("POST " + endpoint.origin + path + " returned a non-JSON body");
  }
  return parsed;
}

}  // namespace subtag::http
