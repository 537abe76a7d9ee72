#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "dimflow/common.hpp"
#include "dimflow/graph.hpp"
#include "dimflow/modes.hpp"
#include "dimflow/spectral.hpp"

namespace dimflow {

/// Transfer efficiency split per site:
///   eta_i = sum_m |C_i^(m)|^2
///         + 2 sum_{m<n} Re(C_i^(m)* C_i^(n)) / (1 + ((l_m - l_n)/Gamma)^2),
/// with eigenvalue pairs closer than 1e-9*||H|| treated as exactly degenerate
/// (interference factor 1).
struct EfficiencyReport {
  Eigen::VectorXd eta;
  Eigen::VectorXd noninterfering;
  Eigen::VectorXd interfering;
  Eigen::MatrixXd mode_weight;  // |C_i^(m)|^2, modes x sites
  Eigen::VectorXd lambdas;      // mode eigenvalues, ascending
};

/// Eq.-21 core over modal data (rows of `coeff` are modes, columns sites).
inline EfficiencyReport modal_efficiency(const Eigen::VectorXd& lambdas,
                                         const Eigen::MatrixXcd& coeff,
                                         double gamma, double spectral_norm) {
  if (!(gamma > 0.0)) throw ValidationError("efficiency requires Gamma > 0");
  const int modes = static_cast<int>(lambdas.size());
  const int sites = static_cast<int>(coeff.cols());
  const double degenerate = 1e-9 * spectral_norm;

  EfficiencyReport r;
  r.lambdas = lambdas;
  r.noninterfering = Eigen::VectorXd::Zero(sites);
  r.interfering = Eigen::VectorXd::Zero(sites);
  r.mode_weight = Eigen::MatrixXd::Zero(modes, sites);
  for (int m = 0; m < modes; ++m)
    for (int i = 0; i < sites; ++i) {
      r.mode_weight(m, i) = std::norm(coeff(m, i));
      r.noninterfering(i) += r.mode_weight(m, i);
    }
  for (int m = 0; m < modes; ++m)
    for (int n = m + 1; n < modes; ++n) {
      const double gap = lambdas(m) - lambdas(n);
      const double factor =
          std::abs(gap) <= degenerate ? 1.0 : 1.0 / (1.0 + (gap / gamma) * (gap / gamma));
      for (int i = 0; i < sites; ++i)
        r.interfering(i) +=
            2.0 * factor * std::real(std::conj(coeff(m, i)) * coeff(n, i));
    }
  r.eta = r.noninterfering + r.interfering;
  return r;
}

/// Efficiency from the spectral reference (ModalTable).
inline EfficiencyReport oracle_efficiency(const ValidatedGraph& g,
                                          const Eigen::VectorXcd& initial,
                                          double gamma) {
  Spectrum spec = eigendecompose(g);
  ModalTable table = modal_coefficients(spec, initial);
  // table is sites x modes; core wants modes x sites
  return modal_efficiency(spec.eigenvalues, table.coefficients.transpose(),
                          gamma, spec.norm());
}

/// Efficiency from the decomposition's mode set (clusters as modes).
inline EfficiencyReport efficiency(const ValidatedGraph& g,
                                   const Eigen::VectorXcd& initial, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("efficiency requires Gamma > 0");
  ModeSet set = build_mode_set(g, initial, gamma);
  const int modes = static_cast<int>(set.modes.size());
  Eigen::VectorXd lambdas(modes);
  Eigen::MatrixXcd coeff(modes, g.num_sites);
  for (int m = 0; m < modes; ++m) {
    lambdas(m) = set.modes[m].pole.lambda;
    coeff.row(m) = set.modes[m].site_coefficient.transpose();
  }
  return modal_efficiency(lambdas, coeff, gamma, set.spectral_norm);
}

// ---------------------------------------------------------------------------
// Trimer closed forms
// ---------------------------------------------------------------------------

/// (beta, alpha) parametrization: J_a = (1+beta) J, J_c = (1-beta) J,
/// J_b = alpha J. Source site 1, traps 2 and 3.
struct TrimerParams {
  double beta = 0.0;
  double alpha = 0.0;
  double coupling = 1.0;  // J
  double gamma = 0.0;

  double ja() const { return (1 + beta) * coupling; }
  double jb() const { return alpha * coupling; }
  double jc() const { return (1 - beta) * coupling; }
};

/// Closed-form modal data for the trimer. Eigenvalues come from the cubic
///   kappa = sqrt((Ja^2+Jb^2+Jc^2)/3),
///   theta = arg(Ja Jb Jc + i sqrt(kappa^6 - (Ja Jb Jc)^2)),
/// in the sign convention of c_i(t) = sum_m C_i^(m) e^{-i lambda_m t}:
///   C_1 = (l^2 - Jb^2)/D,  C_2 = (Ja l + Jb Jc)/D,  C_3 = (Jc l + Ja Jb)/D,
/// D = (l_m - l_m2)(l_m - l_m3). flow_coeff holds the per-mode coefficients
/// of the three independent flows (the residues of the flow functions).
struct TrimerModes {
  double kappa = 0.0;
  double theta = 0.0;
  std::array<double, 3> lambda{};                 // path order m = 1, 2, 3
  std::array<std::array<cplx, 3>, 3> coeff{};     // [mode][site]
  std::array<std::array<cplx, 3>, 3> flow_coeff{}; // [mode][flow f1,f2,f3]
  bool degenerate = false;
};

inline TrimerModes trimer_modes(const TrimerParams& p) {
  const double ja = p.ja(), jb = p.jb(), jc = p.jc();
  const double sum_sq = ja * ja + jb * jb + jc * jc;
  if (sum_sq <= 0.0) throw ValidationError("trimer couplings are all zero");
  TrimerModes out;
  out.kappa = std::sqrt(sum_sq / 3.0);
  const double prod = ja * jb * jc;
  const double disc = std::max(std::pow(out.kappa, 6) - prod * prod, 0.0);
  out.theta = std::atan2(std::sqrt(disc), prod);

  // cubic roots in the e^{+i lambda t} bookkeeping, negated into ours;
  // the m-order of the cosine branches is kept (it indexes the paths)
  std::array<double, 3> roots = {
      -2 * out.kappa * std::cos(out.theta / 3.0),
      2 * out.kappa * std::cos((out.theta - M_PI) / 3.0),
      2 * out.kappa * std::cos((out.theta + M_PI) / 3.0)};
  for (int m = 0; m < 3; ++m) out.lambda[m] = -roots[m];

  double min_gap = std::numeric_limits<double>::infinity();
  for (int m = 0; m < 3; ++m)
    min_gap = std::min(min_gap, std::abs(out.lambda[m] - out.lambda[(m + 1) % 3]));
  if (min_gap <= 1e-9 * out.kappa) {
    out.degenerate = true;
    return out;  // coefficients undefined per mode; use the contour path
  }

  for (int m = 0; m < 3; ++m) {
    const double l = out.lambda[m];
    const double l2 = out.lambda[(m + 1) % 3], l3 = out.lambda[(m + 2) % 3];
    const double denom = (l - l2) * (l - l3);
    out.coeff[m] = {cplx((l * l - jb * jb) / denom),
                    cplx((ja * l + jb * jc) / denom),
                    cplx((jc * l + ja * jb) / denom)};
    // residues of the flow functions at s = -i l (Gamma folds in via the
    // s -> s + Gamma/2 shift and does not move the residues)
    const double lp = -l;  // e^{+i lambda t} root paired with this mode
    out.flow_coeff[m] = {
        cplx(0, -0.5) * (ja * ja - jc * jc) * lp / denom,
        cplx(0, -0.5) * (jb * jc * lp + ja * (lp * lp - 2 * jb * jb)) / denom,
        cplx(0, +0.5) * (jb * ja * lp + jc * (lp * lp - 2 * jb * jb)) / denom};
  }
  return out;
}

// ---------------------------------------------------------------------------
// (beta, alpha) sweep grids
// ---------------------------------------------------------------------------

struct SweepCell {
  double beta = 0.0;
  double alpha = 0.0;
  double eta2 = 0.0;
  double noninterfering = 0.0;
  double interfering = 0.0;
  std::array<double, 3> mode_weight{};  // |C_2^(m)|^2; cluster values zero-padded
  bool degenerate = false;
};

struct SweepGrid {
  std::vector<double> betas;
  std::vector<double> alphas;
  double gamma = 0.0;
  double coupling = 1.0;
  std::vector<SweepCell> cells;  // row-major, beta outer

  const SweepCell& at(std::size_t ib, std::size_t ia) const {
    return cells[ib * alphas.size() + ia];
  }
};

/// Efficiency toward site 2 over a (beta, alpha) grid. Non-degenerate cells
/// use the closed forms; degenerate cells fall back to the contour-residue
/// path (mode weights are then per cluster, ascending, zero-padded).
inline SweepGrid sweep(double beta_lo, double beta_hi, int nb, double alpha_lo,
                       double alpha_hi, int na, double gamma, double coupling = 1.0) {
  if (nb < 2 || na < 2) throw ValidationError("sweep needs at least 2 samples per axis");
  if (!(gamma > 0.0)) throw ValidationError("sweep requires Gamma > 0");
  SweepGrid grid;
  grid.gamma = gamma;
  grid.coupling = coupling;
  for (int i = 0; i < nb; ++i)
    grid.betas.push_back(beta_lo + (beta_hi - beta_lo) * i / (nb - 1));
  for (int j = 0; j < na; ++j)
    grid.alphas.push_back(alpha_lo + (alpha_hi - alpha_lo) * j / (na - 1));

  for (double beta : grid.betas) {
    for (double alpha : grid.alphas) {
      TrimerParams p{beta, alpha, coupling, gamma};
      SweepCell cell;
      cell.beta = beta;
      cell.alpha = alpha;
      TrimerModes modes = trimer_modes(p);
      if (!modes.degenerate) {
        Eigen::VectorXd lambdas(3);
        Eigen::MatrixXcd coeff(3, 3);
        for (int m = 0; m < 3; ++m) {
          lambdas(m) = modes.lambda[m];
          for (int i = 0; i < 3; ++i) coeff(m, i) = modes.coeff[m][i];
        }
        EfficiencyReport rep =
            modal_efficiency(lambdas, coeff, gamma, lambdas.cwiseAbs().maxCoeff());
        cell.eta2 = rep.eta(1);
        cell.noninterfering = rep.noninterfering(1);
        cell.interfering = rep.interfering(1);
        for (int m = 0; m < 3; ++m) cell.mode_weight[m] = rep.mode_weight(m, 1);
      } else {
        cell.degenerate = true;
        ValidatedGraph g = validate(make_trimer(beta, alpha, coupling, gamma));
        EfficiencyReport rep = efficiency(g, g.initial, gamma);
        cell.eta2 = rep.eta(1);
        cell.noninterfering = rep.noninterfering(1);
        cell.interfering = rep.interfering(1);
        for (int m = 0; m < rep.mode_weight.rows() && m < 3; ++m)
          cell.mode_weight[m] = rep.mode_weight(m, 1);
      }
      grid.cells.push_back(cell);
    }
  }
  return grid;
}

}  // namespace dimflow
