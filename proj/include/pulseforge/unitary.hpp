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

#include <array>
#include <cmath>
#include <complex>

namespace pulseforge {

using cplx = std::complex<double>;

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double dot(const Vec3 &o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3 &o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    double operator[](int k) const { return k == 0 ? x : (k == 1 ? y : z); }
    bool operator==(const Vec3 &) const = default;
};

/// Element of SU(2) in quaternion form, U = w·I − i(v·σ).
///
/// All propagators of the qubit Hamiltonian are products of such factors, so
/// propagation works in this representation and only converts to a complex
/// matrix at the API boundary.
struct Su2 {
    double w = 1;
    Vec3 v{};

    /// Rotation of the Bloch sphere by `angle` about the unit vector `axis`.
    static Su2 rotation(const Vec3 &axis, double angle) {
        double n = axis.norm();
        double s = std::sin(angle / 2) / n;
        return {std::cos(angle / 2), axis * s};
    }

    Su2 operator*(const Su2 &o) const { return {w * o.w - v.dot(o.v), o.v * w + v * o.w + v.cross(o.v)}; }
    Su2 adjoint() const { return {w, -v}; }
    double norm2() const { return w * w + v.dot(v); }

    /// Re Tr(A†B)/2 for two SU(2) elements; the trace itself is real.
    double overlap(const Su2 &o) const { return w * o.w + v.dot(o.v); }

    /// Row z of the SO(3) matrix: components of U†σ_zU in the Pauli basis.
    Vec3 heisenberg_z() const {
        return {2 * (v.x * v.z - w * v.y), 2 * (v.y * v.z + w * v.x), w * w - v.x * v.x - v.y * v.y + v.z * v.z};
    }

    /// Image of a Bloch vector under U(·)U†.
    Vec3 rotate(const Vec3 &r) const {
        // r' = r + 2w(v×r) + 2v×(v×r)
        Vec3 t = v.cross(r) * 2.0;
        return r + t * w + v.cross(t);
    }
};

/// 2×2 complex unitary, row-major, stored with canonical global phase
/// (Tr U real and non-negative whenever |Tr U| > 1e-12).
class Unitary2 {
   public:
    Unitary2();
    /// Canonicalizes the phase of an arbitrary unitary matrix.
    explicit Unitary2(const std::array<cplx, 4> &m);
    static Unitary2 from_su2(const Su2 &u);
    static Unitary2 identity() { return Unitary2(); }

    const std::array<cplx, 4> &matrix() const { return m_; }
    cplx operator()(int r, int c) const { return m_[2 * r + c]; }
    cplx trace() const { return m_[0] + m_[3]; }

    /// Traceless SU(2) representative with the same rotation, w ≥ 0.
    Su2 to_su2() const;

    Unitary2 operator*(const Unitary2 &o) const;
    Unitary2 adjoint() const;

    /// True when the trace was too small to fix the phase.
    bool phase_degenerate() const { return degenerate_; }

   private:
    std::array<cplx, 4> m_;
    bool degenerate_ = false;
};

/// Frobenius distance between matrices after phase canonicalization.
double frobenius_distance(const Unitary2 &a, const Unitary2 &b);
/// ‖U†U − I‖_F on the raw matrix.
double unitarity_defect(const std::array<cplx, 4> &m);

struct RotationDecomposition {
    double angle = 0;  ///< φ in [0, π] after canonical phase stripping
    Vec3 axis{0, 0, 1};
    bool degenerate = false;  ///< sin(φ/2) < 1e-9; axis set to +z by convention
};

RotationDecomposition decompose_rotation(const Unitary2 &u);
RotationDecomposition decompose_rotation(const Su2 &u);
/// exp(−i angle n·σ/2)
Unitary2 rotation_unitary(const Vec3 &axis, double angle);

}  // namespace pulseforge
