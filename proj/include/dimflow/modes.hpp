#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dimflow/common.hpp"
#include "dimflow/decomposition.hpp"
#include "dimflow/graph.hpp"
#include "dimflow/spectral.hpp"

namespace dimflow {

/// One pole of the flow functions. lambda = i (s_p + Gamma/2) is the matching
/// Hamiltonian eigenvalue; degenerate eigenvalues collapse into one pole with
/// multiplicity > 1. resonance_coincident marks poles that sit on a local
/// propagator singularity (where det M need not vanish).
struct Pole {
  cplx location;
  double lambda = 0.0;
  int multiplicity = 1;
  bool resonance_coincident = false;
};

struct Mode {
  Pole pole;
  Eigen::VectorXcd flow_residue;           // chi, 2M slots
  Eigen::VectorXcd subsystem_coefficient;  // residue of c^(S), 2M slots
  Eigen::VectorXcd site_coefficient;       // C_{i,k} = n_i * subsystem value, N sites
};

struct ModeSet {
  std::vector<Mode> modes;  // ascending lambda
  std::vector<std::string> warnings;
  double spectral_norm = 0.0;
};

namespace detail {

struct PoleGeometry {
  std::vector<Pole> poles;
  std::vector<double> cluster_radius;
  std::vector<std::string> warnings;
  double scale = 0.0;
};

/// Cluster the spectrum at 1e-9*||H||, pick a contour radius per cluster:
/// half the distance to the nearest other cluster or non-coincident local
/// resonance, capped at 0.1*(1+||H||).
inline PoleGeometry pole_geometry(const ValidatedGraph& g, double gamma,
                                  const Spectrum& spectrum) {
  PoleGeometry geo;
  geo.scale = spectrum.norm();
  const double cluster_tol = 1e-9 * geo.scale;

  // eigenvalues ascending: chain-cluster by consecutive gap
  const auto& lam = spectrum.eigenvalues;
  std::vector<double> centers;
  std::vector<int> mult;
  for (int k = 0; k < lam.size(); ++k) {
    if (k > 0 && lam(k) - lam(k - 1) <= cluster_tol) {
      centers.back() = (centers.back() * mult.back() + lam(k)) / (mult.back() + 1);
      mult.back()++;
    } else {
      centers.push_back(lam(k));
      mult.push_back(1);
    }
  }

  MatchingAssembler assembler(g, Eigen::VectorXcd::Unit(g.num_sites, 0), gamma);
  const std::vector<double> resonances = assembler.resonance_lambdas();
  const double coincide_tol = std::max(1e-12 * std::max(1.0, geo.scale), 1e-14);

  for (std::size_t c = 0; c < centers.size(); ++c) {
    Pole p;
    p.lambda = centers[c];
    p.location = cplx(-gamma / 2, -centers[c]);
    p.multiplicity = mult[c];
    double pole_gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.size(); ++j)
      if (j != c) pole_gap = std::min(pole_gap, std::abs(centers[c] - centers[j]));
    double dist = pole_gap;
    for (double r : resonances) {
      const double d = std::abs(centers[c] - r);
      if (d < coincide_tol)
        p.resonance_coincident = true;  // enclosed on purpose; see find_poles
      else
        dist = std::min(dist, d);
    }
    const double radius = std::min(0.5 * dist, 0.1 * (1.0 + geo.scale));
    if (!(radius >= 1e-8))
      throw NumericalError("no admissible contour radius >= 1e-8 around pole lambda = " +
                           format_double(centers[c]));
    if (pole_gap > cluster_tol && pole_gap <= 1e-4 * geo.scale)
      geo.warnings.push_back("near-degenerate pole pair around lambda = " +
                             format_double(centers[c]) + " (gap " +
                             format_double(pole_gap) + "); contour radius shrunk");
    geo.poles.push_back(p);
    geo.cluster_radius.push_back(radius);
  }
  return geo;
}

/// Trapezoid contour integrals of the flows and subsystem amplitudes around
/// one pole: (1/2 pi i) closed-integral f(s) ds. Starts at 64 nodes and keeps
/// doubling while the change against the embedded half rule exceeds the
/// tolerance; previously evaluated nodes are reused.
///
/// Nodes sit at distance >= radius from every other singular point, but for
/// near-degenerate pole pairs that distance (and so the conditioning of the
/// per-node solves) shrinks with the gap. The solves here use a backward-error
/// bound, and the convergence tolerance carries a conditioning-derived noise
/// floor; tight-gap accuracy degrades gracefully and the mode set is warned.
struct ContourResult {
  Eigen::VectorXcd chi;
  Eigen::VectorXcd amp;
};

inline ContourResult contour_residues(const MatchingAssembler& assembler,
                                      cplx center, double radius) {
  const int dim = assembler.dimension();
  Eigen::MatrixXcd m(dim, dim);
  Eigen::VectorXcd b(dim);

  // per-node contributions g_j = value(s_j) * (s_j - center); R_n = mean g_j
  std::vector<Eigen::VectorXcd> gflow, gamp;
  double noise = 0.0;
  auto eval_node = [&](double theta) {
    const cplx offset = radius * cplx(std::cos(theta), std::sin(theta));
    const cplx s = center + offset;
    assembler.build(s, m, b);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    Eigen::VectorXcd f = lu.solve(b);
    const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    const double resid = (m * f - b).norm();
    if (!(resid <= 1e-12 * std::max(b.norm() + norm1 * f.norm(), 1e-300)))
      throw NumericalError("contour node solve unstable at s = (" +
                           format_double(s.real()) + ", " +
                           format_double(s.imag()) + ")");
    const double rcond = std::max(lu.rcond(), 1e-300);
    noise = std::max(noise, 1e-16 / rcond * f.cwiseAbs().maxCoeff() * radius);
    gflow.push_back(f * offset);
    gamp.push_back(assembler.amplitudes(s, f) * offset);
  };

  const double two_pi = 2.0 * M_PI;
  int n = 64;
  for (int j = 0; j < n; ++j) eval_node(two_pi * j / n);

  auto mean_of = [&](const std::vector<Eigen::VectorXcd>& gs, int stride) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(dim);
    int count = 0;
    for (std::size_t j = 0; j < gs.size(); j += stride) {
      acc += gs[j];
      ++count;
    }
    return Eigen::VectorXcd(acc / double(count));
  };

  // Storage order after doubling keeps level-n nodes at even positions, so a
  // stride-2 pass is always the embedded half rule.
  for (;;) {
    Eigen::VectorXcd full_chi = mean_of(gflow, 1), half_chi = mean_of(gflow, 2);
    Eigen::VectorXcd full_amp = mean_of(gamp, 1), half_amp = mean_of(gamp, 2);
    const double change =
        std::max((full_chi - half_chi).cwiseAbs().maxCoeff(),
                 (full_amp - half_amp).cwiseAbs().maxCoeff());
    const double mag = std::max({1.0, full_chi.cwiseAbs().maxCoeff(),
                                 full_amp.cwiseAbs().maxCoeff()});
    if (change <= std::max(1e-11 * mag, 4.0 * noise)) return {full_chi, full_amp};
    if (n >= 4096)
      throw NumericalError("contour quadrature did not converge around s = (" +
                           format_double(center.real()) + ", " +
                           format_double(center.imag()) + ")");
    std::vector<Eigen::VectorXcd> old_flow = std::move(gflow);
    std::vector<Eigen::VectorXcd> old_amp = std::move(gamp);
    gflow.clear();
    gamp.clear();
    for (int j = 0; j < n; ++j) eval_node(two_pi * (2 * j + 1) / (2 * n));
    std::vector<Eigen::VectorXcd> mid_flow = std::move(gflow);
    std::vector<Eigen::VectorXcd> mid_amp = std::move(gamp);
    gflow.clear();
    gamp.clear();
    for (int j = 0; j < n; ++j) {
      gflow.push_back(std::move(old_flow[j]));
      gamp.push_back(std::move(old_amp[j]));
      gflow.push_back(std::move(mid_flow[j]));
      gamp.push_back(std::move(mid_amp[j]));
    }
    n *= 2;
  }
}

}  // namespace detail

/// Determinant of the assembled matching system at s (consistency probe).
inline cplx determinant(const ValidatedGraph& g, double gamma, cplx s) {
  MatchingAssembler a(g, Eigen::VectorXcd::Unit(g.num_sites, 0), gamma);
  Eigen::MatrixXcd m;
  Eigen::VectorXcd b;
  a.build(s, m, b);
  return Eigen::PartialPivLU<Eigen::MatrixXcd>(m).determinant();
}

/// Pole set from the spectrum (lambda_k = i (s_p + Gamma/2)), each cluster
/// cross-checked against the matching matrix: either sigma_min(M) dips by 10x
/// moving from the contour radius down to ~1e-6 of it, or a local-propagator
/// singularity coincides with the pole (then det M need not vanish there).
inline std::vector<Pole> find_poles(const ValidatedGraph& g, double gamma) {
  if (g.num_edges < 1) throw ValidationError("find_poles requires a graph with edges");
  Spectrum spectrum = eigendecompose(g);
  detail::PoleGeometry geo = detail::pole_geometry(g, gamma, spectrum);

  MatchingAssembler a(g, Eigen::VectorXcd::Unit(g.num_sites, 0), gamma);
  Eigen::MatrixXcd m;
  Eigen::VectorXcd b;
  auto sigma_min_est = [&](cplx s) {
    a.build(s, m, b);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    // rcond = 1 / (||M||_1 ||M^-1||_1 est), so rcond * ||M||_1 ~ sigma_min
    return lu.rcond() * m.cwiseAbs().colwise().sum().maxCoeff();
  };

  for (std::size_t c = 0; c < geo.poles.size(); ++c) {
    Pole& p = geo.poles[c];
    if (p.resonance_coincident) continue;
    const double far = geo.cluster_radius[c];
    const double near = std::max(far * 1e-6, 1e-12 * (1.0 + geo.scale));
    const double s_far = sigma_min_est(p.location + far);
    const double s_near = sigma_min_est(p.location + near);
    if (!(s_near <= 0.1 * s_far))
      throw NumericalError(
          "pole cross-check failed at lambda = " + format_double(p.lambda) +
          ": sigma_min(M) does not dip (" + format_double(s_near) + " vs " +
          format_double(s_far) + ") and no local singularity explains it");
  }
  return geo.poles;
}

/// chi = residue of the flow vector at the pole, by contour integration.
inline Eigen::VectorXcd flow_residues(const ValidatedGraph& g,
                                      const Eigen::VectorXcd& initial,
                                      double gamma, const Pole& pole) {
  Spectrum spectrum = eigendecompose(g);
  detail::PoleGeometry geo = detail::pole_geometry(g, gamma, spectrum);
  MatchingAssembler a(g, initial, gamma);
  for (std::size_t c = 0; c < geo.poles.size(); ++c)
    if (std::abs(geo.poles[c].lambda - pole.lambda) <= 1e-9 * std::max(1.0, geo.scale))
      return detail::contour_residues(a, geo.poles[c].location, geo.cluster_radius[c]).chi;
  throw ValidationError("pole lambda = " + format_double(pole.lambda) +
                        " is not a pole of this graph");
}

/// Per-site coefficients C_{i,k} for one pole. Away from local-resonance
/// coincidences this is C^(S) = U^(S)(s_p) chi^(S) per edge (the initial-value
/// term is regular there); otherwise the residue of c^(S) is integrated
/// directly. Cross-subsystem agreement is enforced at 1e-8.
inline Eigen::VectorXcd modal_vectors(const ValidatedGraph& g,
                                      const Eigen::VectorXcd& initial,
                                      double gamma, const Pole& pole,
                                      const Eigen::VectorXcd& chi) {
  const std::vector<Subsystem> subs = enumerate_subsystems(g);
  Eigen::VectorXcd per_slot(2 * g.num_edges);
  if (!pole.resonance_coincident) {
    for (std::size_t k = 0; k < subs.size(); ++k) {
      const Eigen::Matrix2cd u = local_propagator(subs[k], gamma, pole.location);
      per_slot.segment<2>(2 * k) = u * chi.segment<2>(2 * k);
    }
  } else {
    Spectrum spectrum = eigendecompose(g);
    detail::PoleGeometry geo = detail::pole_geometry(g, gamma, spectrum);
    MatchingAssembler a(g, initial, gamma);
    bool found = false;
    for (std::size_t c = 0; c < geo.poles.size(); ++c)
      if (std::abs(geo.poles[c].lambda - pole.lambda) <= 1e-9 * std::max(1.0, geo.scale)) {
        per_slot = detail::contour_residues(a, geo.poles[c].location,
                                            geo.cluster_radius[c]).amp;
        found = true;
        break;
      }
    if (!found)
      throw ValidationError("pole lambda = " + format_double(pole.lambda) +
                            " is not a pole of this graph");
  }

  Eigen::VectorXcd site_coeff = Eigen::VectorXcd::Zero(g.num_sites);
  Eigen::VectorXd seen = Eigen::VectorXd::Zero(g.num_sites);
  for (std::size_t k = 0; k < subs.size(); ++k) {
    for (int half = 0; half < 2; ++half) {
      const int site = half ? subs[k].site_second : subs[k].site_first;
      const cplx full = double(g.degree[site]) * per_slot(2 * k + half);
      if (!seen(site)) {
        site_coeff(site) = full;
        seen(site) = 1.0;
      } else if (std::abs(full - site_coeff(site)) > 1e-8 * std::max(1.0, std::abs(full))) {
        throw NumericalError("modal coefficient disagrees across subsystems at site " +
                             std::to_string(g.site_ids[site]) + ", pole lambda = " +
                             format_double(pole.lambda));
      }
    }
  }
  return site_coeff;
}

/// Full modal description: poles, flow residues and coefficients, computed
/// with one contour pass per pole.
inline ModeSet build_mode_set(const ValidatedGraph& g,
                              const Eigen::VectorXcd& initial, double gamma) {
  Spectrum spectrum = eigendecompose(g);
  detail::PoleGeometry geo = detail::pole_geometry(g, gamma, spectrum);
  MatchingAssembler a(g, initial, gamma);

  ModeSet set;
  set.spectral_norm = geo.scale;
  set.warnings = geo.warnings;
  for (std::size_t c = 0; c < geo.poles.size(); ++c) {
    detail::ContourResult res =
        detail::contour_residues(a, geo.poles[c].location, geo.cluster_radius[c]);
    Mode mode;
    mode.pole = geo.poles[c];
    mode.flow_residue = res.chi;
    mode.subsystem_coefficient = res.amp;
    mode.site_coefficient = Eigen::VectorXcd::Zero(g.num_sites);
    // first incident subsystem wins; agreement is a tested invariant
    Eigen::VectorXd seen = Eigen::VectorXd::Zero(g.num_sites);
    for (int q = 0; q < a.dimension(); ++q) {
      const int site = a.layout().slot_site[q][1];
      if (!seen(site)) {
        mode.site_coefficient(site) = double(g.degree[site]) * res.amp(q);
        seen(site) = 1.0;
      }
    }
    set.modes.push_back(std::move(mode));
  }
  return set;
}

/// Reconstruct c_i(t) = sum_k C_{i,k} e^{-i lambda_k t - Gamma t/2} from the
/// decomposition's mode set. N x times matrix, same layout as propagate().
inline Eigen::MatrixXcd reconstruct(const ModeSet& set, int num_sites,
                                    double gamma, const std::vector<double>& times) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(num_sites, times.size());
  for (std::size_t t = 0; t < times.size(); ++t) {
    const double tv = times[t];
    for (const Mode& mode : set.modes)
      out.col(t) += mode.site_coefficient *
                    std::exp(cplx(-gamma * tv / 2, -mode.pole.lambda * tv));
  }
  return out;
}

inline Eigen::MatrixXcd reconstruct(const ValidatedGraph& g,
                                    const Eigen::VectorXcd& initial, double gamma,
                                    const std::vector<double>& times) {
  return reconstruct(build_mode_set(g, initial, gamma), g.num_sites, gamma, times);
}

}  // namespace dimflow
