#pragma once

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace dhmt {

using Complex = std::complex<double>;
/// Fiber of the rank-2 spinor bundle over a surface.
using SpinorValue = Eigen::Vector2cd;
using SpinorMatrix = Eigen::Matrix2cd;

/// Clifford action of the orthonormal frame {e1, e2} on 2-component spinors.
///
/// gamma[0] = i sigma_1, gamma[1] = i sigma_2. Both are skew-Hermitian and
/// satisfy gamma_a gamma_b + gamma_b gamma_a = -2 delta_ab.
struct CliffordFrame {
  std::array<SpinorMatrix, 2> gamma;

  static const CliffordFrame& standard() {
    static const CliffordFrame frame = [] {
      const Complex i(0.0, 1.0);
      CliffordFrame f;
      f.gamma[0] << 0.0, i, i, 0.0;
      f.gamma[1] << 0.0, 1.0, -1.0, 0.0;
      return f;
    }();
    return frame;
  }
};

inline const SpinorMatrix& gamma(int alpha) { return CliffordFrame::standard().gamma[alpha]; }

/// gamma_alpha psi, alpha in {0, 1} for e1, e2.
inline SpinorValue clifford_multiply(int alpha, const SpinorValue& psi) { return gamma(alpha) * psi; }

/// Hermitian product, conjugate-linear in the first slot.
inline Complex spinor_inner(const SpinorValue& psi, const SpinorValue& chi) { return psi.dot(chi); }

}  // namespace dhmt
