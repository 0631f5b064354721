// Copyright 2026 The pulseforge Authors
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

namespace pulseforge {

/// Base class for all library errors. `exit_code()` follows the CLI contract:
/// 1 input error, 2 infeasible model, 3 non-convergence.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Malformed input: bad parameters, schema violations, out-of-range values.
class InputError : public Error {
   public:
    using Error::Error;
};

/// The physical model cannot be satisfied (e.g. no clocked ΔBz exists).
class InfeasibleError : public Error {
   public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class ConvergenceError : public Error {
   public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

}  // namespace pulseforge
