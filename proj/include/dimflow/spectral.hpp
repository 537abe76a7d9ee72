#pragma once

#include <Eigen/Dense>

#include "dimflow/common.hpp"
#include "dimflow/graph.hpp"

namespace dimflow {

/// Dense Hermitian eigendecomposition of the full Hamiltonian.
/// Eigenvalues ascending, eigenvector columns orthonormal.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  /// Spectral norm of H (largest |eigenvalue|).
  double norm() const {
    return eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  }
};

inline Spectrum eigendecompose(const ValidatedGraph& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g.hamiltonian);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigendecomposition did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Modal coefficients C_{i,k} = v_{i,k} (v_k . c(0)), so that
/// c_i(t) = sum_k C_{i,k} e^{-i lambda_k t - Gamma t / 2}.
struct ModalTable {
  Eigen::MatrixXcd coefficients;  // N sites x N modes
};

inline ModalTable modal_coefficients(const Spectrum& spec,
                                     const Eigen::VectorXcd& initial) {
  Eigen::VectorXcd weights = spec.eigenvectors.transpose() * initial;
  ModalTable t;
  t.coefficients = spec.eigenvectors * weights.asDiagonal();
  return t;
}

inline ModalTable modal_coefficients(const ValidatedGraph& g,
                                     const Eigen::VectorXcd& initial) {
  return modal_coefficients(eigendecompose(g), initial);
}

/// Reference propagation by spectral decomposition (the ground truth).
/// Returns an N x times.size() matrix of amplitudes.
inline Eigen::MatrixXcd propagate(const ValidatedGraph& g,
                                  const Eigen::VectorXcd& initial,
                                  const std::vector<double>& times) {
  Spectrum spec = eigendecompose(g);
  ModalTable table = modal_coefficients(spec, initial);
  const int n = g.num_sites;
  Eigen::MatrixXcd out(n, times.size());
  for (std::size_t t = 0; t < times.size(); ++t) {
    const double tv = times[t];
    if (!std::isfinite(tv) || tv < 0.0)
      throw ValidationError("propagation times must be finite and non-negative");
    Eigen::VectorXcd phases(n);
    for (int k = 0; k < n; ++k)
      phases(k) = std::exp(cplx(-g.gamma * tv / 2, -spec.eigenvalues(k) * tv));
    out.col(t) = table.coefficients * phases;
  }
  return out;
}

}  // namespace dimflow
