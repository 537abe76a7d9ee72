#pragma once

// Test-only reference implementations, independent of the library's
// decomposition path: a step-doubling RK4 integrator of the site equations,
// the closed-form trimer flow functions, and small analytic efficiency values.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "dimflow/common.hpp"

namespace reference {

using dimflow::cplx;

/// Classic RK4 on dc/dt = (-iH - Gamma/2) c, fixed step.
inline Eigen::VectorXcd rk4(const Eigen::MatrixXd& h, double gamma,
                            Eigen::VectorXcd c, double t_end, int steps) {
  const Eigen::MatrixXcd a =
      cplx(0, -1) * h.cast<cplx>() -
      (gamma / 2) * Eigen::MatrixXcd::Identity(h.rows(), h.cols());
  const double dt = t_end / steps;
  for (int n = 0; n < steps; ++n) {
    Eigen::VectorXcd k1 = a * c;
    Eigen::VectorXcd k2 = a * (c + (dt / 2) * k1);
    Eigen::VectorXcd k3 = a * (c + (dt / 2) * k2);
    Eigen::VectorXcd k4 = a * (c + dt * k3);
    c += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return c;
}

/// Step-doubling driver: halve the step until two consecutive grids agree
/// below `tol`.
inline Eigen::VectorXcd integrate(const Eigen::MatrixXd& h, double gamma,
                                  const Eigen::VectorXcd& c0, double t_end,
                                  double tol = 1e-10) {
  int steps = 256;
  Eigen::VectorXcd prev = rk4(h, gamma, c0, t_end, steps);
  for (int level = 0; level < 12; ++level) {
    steps *= 2;
    Eigen::VectorXcd next = rk4(h, gamma, c0, t_end, steps);
    if ((next - prev).cwiseAbs().maxCoeff() < tol) return next;
    prev = next;
  }
  throw std::runtime_error("reference integrator did not reach tolerance");
}

/// Closed-form s-domain flows of the trimer (independent oracle for
/// solve_flows); gamma enters by the s -> s + gamma/2 shift.
struct TrimerFlows {
  cplx f1, f2, f3;
};

inline TrimerFlows trimer_flows(double ja, double jb, double jc, double gamma,
                                cplx s_in) {
  const cplx s = s_in + gamma / 2;
  const cplx g = 2.0 * (s * s * s + (ja * ja + jb * jb + jc * jc) * s -
                        cplx(0, 2) * ja * jb * jc);
  TrimerFlows f;
  f.f1 = s * (ja * ja - jc * jc) / g;
  f.f2 = (s * jc * jb - cplx(0, 1) * ja * (s * s + 2 * jb * jb)) / g;
  f.f3 = -(s * ja * jb - cplx(0, 1) * jc * (s * s + 2 * jb * jb)) / g;
  return f;
}

/// Gamma-integrated population of the damped two-level oscillation
/// c_2(t) = -i sin(2Jt) e^{-Gamma t/2}: eta = 1/2 - G^2 / (2(G^2 + 16 J^2)).
inline double two_level_eta(double coupling, double gamma) {
  return 0.5 - gamma * gamma / (2 * (gamma * gamma + 16 * coupling * coupling));
}

/// Closed-loop triangle with equal couplings, excitation on site 1: the
/// projector split (lambda = 2J once, -J twice) gives
/// eta_2 = 2/9 - (2/9) G^2 / (G^2 + 9 J^2).
inline double equal_triangle_eta2(double coupling, double gamma) {
  return 2.0 / 9.0 -
         (2.0 / 9.0) * gamma * gamma / (gamma * gamma + 9 * coupling * coupling);
}

}  // namespace reference
