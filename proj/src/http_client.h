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

#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

namespace subtag::http {

/// "http://host:port/prefix" split into the pieces cpp-httplib wants.
struct Endpoint {
  std::string origin;       // scheme://host[:port]
  std::string base_path;    // "" or "/prefix" without trailing slash
};

/// Throws InputError for anything other than an http URL with a host.
Endpoint parse_endpoint(const std::string& url);

/// POSTs `body` to `base_path + route` and returns the parsed response.
/// Connection failures and non-2xx responses raise TransportError tagged
/// with `batch_index`; an unparseable body raises ProtocolError.
nlohmann::json post_json(const Endpoint& endpoint, const std::string& route,
                         const nlohmann::json& body, double timeout_seconds,
                         std::size_t batch_index);

}  // namespace subtag::http
