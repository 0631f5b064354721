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

#include "pulseforge/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pulseforge/error.hpp"

namespace pulseforge {

namespace {

// Golub–Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
// orthogonal polynomial family.
QuadratureRule golub_welsch(int n, double mu0, double (*offdiag)(int)) {
    if (n < 1) throw InputError("quadrature order must be at least 1");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; k++) jac(k, k - 1) = jac(k - 1, k) = offdiag(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int k = 0; k < n; k++) {
        r.nodes[k] = es.eigenvalues()(k);
        double v = es.eigenvectors()(0, k);
        r.weights[k] = mu0 * v * v;
    }
    return r;
}

}  // namespace

QuadratureRule gauss_hermite(int n) {
    return golub_welsch(n, 1.0, [](int k) { return std::sqrt(static_cast<double>(k)); });
}

QuadratureRule gauss_legendre(int n) {
    return golub_welsch(n, 2.0, [](int k) {
        double kk = k;
        return kk / std::sqrt(4 * kk * kk - 1);
    });
}

}  // namespace pulseforge
