#pragma once

#include <array>
#include <vector>

#include "dimflow/common.hpp"
#include "dimflow/decomposition.hpp"
#include "dimflow/modes.hpp"

namespace dimflow {

/// One (mode, site, edge) cell of the flow-vector chart. The component-wise
/// inner product u . chi equals the subsystem modal coefficient for the site
/// (multiply by the site degree for the full-system coefficient). phase is a
/// per-mode unit complex factor for 2D rendering; raw values stay unrotated.
struct ChartEntry {
  int mode = 0;
  double lambda = 0.0;
  long site_id = 0;
  int edge = 0;
  std::array<cplx, 2> u{};    // studied site's own matrix element first
  std::array<cplx, 2> chi{};  // studied site's flow residue first
  cplx inner_product{};
  cplx phase{1.0, 0.0};
  bool u_singular = false;    // pole sits on this subsystem's resonance
};

/// Local-response vector at a pole: [u_11, u_12] if the site is the first
/// slot, [u_22, u_21] otherwise. Depends only on the subsystem and the pole.
inline std::array<cplx, 2> u_vector(const Subsystem& sub, double gamma,
                                    const Pole& pole, int site) {
  const Eigen::Matrix2cd u = local_propagator(sub, gamma, pole.location);
  if (site == sub.site_first) return {u(0, 0), u(0, 1)};
  if (site == sub.site_second) return {u(1, 1), u(1, 0)};
  throw ValidationError("site is not part of the subsystem");
}

/// Perturbing-source vector [chi_i, chi_j] with the studied site first.
inline std::array<cplx, 2> chi_vector(const Mode& mode, const Subsystem& sub,
                                      int site) {
  const cplx first = mode.flow_residue(2 * sub.edge);
  const cplx second = mode.flow_residue(2 * sub.edge + 1);
  if (site == sub.site_first) return {first, second};
  if (site == sub.site_second) return {second, first};
  throw ValidationError("site is not part of the subsystem");
}

/// All modes x incident (site, edge) pairs. Entries whose pole coincides with
/// the subsystem's local resonance are marked singular (no finite u there);
/// their inner product is taken from the subsystem coefficient instead.
inline std::vector<ChartEntry> chart(const ValidatedGraph& g, const ModeSet& set,
                                     double gamma) {
  const std::vector<Subsystem> subs = enumerate_subsystems(g);
  std::vector<ChartEntry> entries;
  for (std::size_t k = 0; k < set.modes.size(); ++k) {
    const Mode& mode = set.modes[k];
    const std::size_t mode_begin = entries.size();
    cplx largest_u = 0.0;
    for (const Subsystem& sub : subs) {
      for (int half = 0; half < 2; ++half) {
        const int site = half ? sub.site_second : sub.site_first;
        ChartEntry e;
        e.mode = static_cast<int>(k);
        e.lambda = mode.pole.lambda;
        e.site_id = g.site_ids[site];
        e.edge = sub.edge;
        e.chi = chi_vector(mode, sub, site);
        const cplx sb = mode.pole.location + cplx(gamma / 2, sub.eps_bar);
        if (std::abs(sub.omega_sq + sb * sb) < 1e-12 * std::max(1.0, sub.omega_sq)) {
          e.u_singular = true;
          e.inner_product = mode.subsystem_coefficient(2 * sub.edge + half);
        } else {
          e.u = u_vector(sub, gamma, mode.pole, site);
          e.inner_product = e.u[0] * e.chi[0] + e.u[1] * e.chi[1];
          for (const cplx& c : e.u)
            if (std::abs(c) > std::abs(largest_u)) largest_u = c;
        }
        entries.push_back(e);
      }
    }
    // common display phase per mode: largest u-component rotated to the
    // positive real axis
    cplx phase(1.0, 0.0);
    if (std::abs(largest_u) > 0.0) phase = std::conj(largest_u) / std::abs(largest_u);
    for (std::size_t j = mode_begin; j < entries.size(); ++j) entries[j].phase = phase;
  }
  return entries;
}

inline std::vector<ChartEntry> chart(const ValidatedGraph& g,
                                     const Eigen::VectorXcd& initial, double gamma) {
  return chart(g, build_mode_set(g, initial, gamma), gamma);
}

}  // namespace dimflow
