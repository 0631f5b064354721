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

#include <vector>

namespace pulseforge {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes and weights for E[f(X)], X ~ N(0, 1) (probabilists' Hermite).
QuadratureRule gauss_hermite(int n);

/// Gauss–Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

}  // namespace pulseforge
