//  Copyright 2026 The dccf Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace dccf {

/// Two operands that must share a resolution do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or unwritable file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corrupt, truncated or otherwise malformed file content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss or gradient became non-finite during fitting.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int iteration, std::string channel)
      : std::runtime_error(what), iteration_(iteration), channel_(std::move(channel)) {}

  int iteration() const { return iteration_; }
  const std::string& channel() const { return channel_; }

 private:
  int iteration_;
  std::string channel_;
};

}  // namespace dccf
