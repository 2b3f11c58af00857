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
#include <stdexcept>
#include <string>

namespace subtag {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kInput,      // malformed or inconsistent user input
  kFormat,     // bad magic/version or truncated binary file
  kTransport,  // remote endpoint unreachable or non-2xx
  kProtocol,   // remote response does not match the wire contract
  kInvariant,  // internal consistency check failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::kInput, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::kFormat, what) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what)
      : Error(ErrorKind::kProtocol, what) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what)
      : Error(ErrorKind::kInvariant, what) {}
};

/// Remote call failed. `batch_index` is the 0-based batch that failed, when
/// the call was part of a batched sequence.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::size_t batch_index = 0)
      : Error(ErrorKind::kTransport, what), batch_index_(batch_index) {}

  std::size_t batch_index() const noexcept { return batch_index_; }

 private:
  std::size_t batch_index_;
};

}  // namespace subtag
