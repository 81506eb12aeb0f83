// Copyright 2026 The qnd-povm Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace qnd {

// Invalid quantum numbers, unreachable outcomes, parameters outside a
// formula's domain.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Caller broke an operation's contract (e.g. passed an unnormalized state).
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what)
      : std::invalid_argument(what) {}
};

// A configured computational cap was hit before the requested accuracy.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, double captured_mass)
      : std::runtime_error(what), captured_mass_(captured_mass) {}

  double captured_mass() const noexcept { return captured_mass_; }

 private:
  double captured_mass_;
};

}  // namespace qnd
