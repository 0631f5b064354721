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

#include "pulseforge/unitary.hpp"

#include <algorithm>

namespace pulseforge {

namespace {

constexpr double kTraceTieTol = 1e-12;
constexpr double kAxisTol = 1e-9;

}  // namespace

Unitary2::Unitary2() : m_{1.0, 0.0, 0.0, 1.0} {}

Unitary2::Unitary2(const std::array<cplx, 4> &m) : m_(m) {
    cplx tr = m_[0] + m_[3];
    double a = std::abs(tr);
    if (a > kTraceTieTol) {
        cplx phase = std::conj(tr) / a;
        for (auto &e : m_) e *= phase;
    } else {
        degenerate_ = true;
    }
}

Unitary2 Unitary2::from_su2(const Su2 &u) {
    const cplx i(0, 1);
    return Unitary2({cplx(u.w, 0) - i * u.v.z, -i * u.v.x - u.v.y, -i * u.v.x + u.v.y, cplx(u.w, 0) + i * u.v.z});
}

Su2 Unitary2::to_su2() const {
    // Remove the determinant phase, then read off U = w − i v·σ.
    cplx det = m_[0] * m_[3] - m_[1] * m_[2];
    cplx root = std::sqrt(det);
    std::array<cplx, 4> s;
    for (int k = 0; k < 4; k++) s[k] = m_[k] / root;
    Su2 q;
    q.w = 0.5 * std::real(s[0] + s[3]);
    q.v.x = -0.5 * std::imag(s[1] + s[2]);
    q.v.y = 0.5 * std::real(s[2] - s[1]);
    q.v.z = -0.5 * std::imag(s[0] - s[3]);
    if (q.w < 0) q = {-q.w, -q.v};
    return q;
}

Unitary2 Unitary2::operator*(const Unitary2 &o) const {
    const auto &a = m_;
    const auto &b = o.m_;
    return Unitary2({a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
                     a[2] * b[1] + a[3] * b[3]});
}

Unitary2 Unitary2::adjoint() const {
    return Unitary2({std::conj(m_[0]), std::conj(m_[2]), std::conj(m_[1]), std::conj(m_[3])});
}

double frobenius_distance(const Unitary2 &a, const Unitary2 &b) {
    double s = 0;
    for (int k = 0; k < 4; k++) s += std::norm(a.matrix()[k] - b.matrix()[k]);
    return std::sqrt(s);
}

double unitarity_defect(const std::array<cplx, 4> &m) {
    cplx p00 = std::conj(m[0]) * m[0] + std::conj(m[2]) * m[2] - 1.0;
    cplx p01 = std::conj(m[0]) * m[1] + std::conj(m[2]) * m[3];
    cplx p11 = std::conj(m[1]) * m[1] + std::conj(m[3]) * m[3] - 1.0;
    return std::sqrt(std::norm(p00) + 2 * std::norm(p01) + std::norm(p11));
}

RotationDecomposition decompose_rotation(const Su2 &u) {
    Su2 q = u.w < 0 ? Su2{-u.w, -u.v} : u;
    RotationDecomposition d;
    double s = q.v.norm();
    d.angle = 2 * std::atan2(s, q.w);
    if (s < kAxisTol) {
        d.degenerate = true;
        d.axis = {0, 0, 1};
    } else {
        d.axis = q.v * (1.0 / s);
    }
    return d;
}

RotationDecomposition decompose_rotation(const Unitary2 &u) { return decompose_rotation(u.to_su2()); }

Unitary2 rotation_unitary(const Vec3 &axis, double angle) { return Unitary2::from_su2(Su2::rotation(axis, angle)); }

}  // namespace pulseforge
