#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dimflow/common.hpp"
#include "dimflow/graph.hpp"

namespace dimflow {

/// One edge promoted to a two-level system. Off-diagonal couplings carry the
/// partner site's connectivity: H_local = ((eps_i, n_j J), (n_i J, eps_j)).
struct Subsystem {
  int edge = 0;
  int site_first = 0;   // dense index of the first slot
  int site_second = 0;
  int deg_first = 0;    // n_i
  int deg_second = 0;   // n_j
  double coupling = 0.0;
  double eps_first = 0.0;
  double eps_second = 0.0;
  double eps_bar = 0.0;    // (eps_i + eps_j)/2
  double delta = 0.0;      // (eps_i - eps_j)/2
  double omega_sq = 0.0;   // delta^2 + n_i n_j J^2

  Eigen::Matrix2d local_hamiltonian() const {
    Eigen::Matrix2d h;
    h << eps_first, deg_second * coupling, deg_first * coupling, eps_second;
    return h;
  }
};

inline std::vector<Subsystem> enumerate_subsystems(const ValidatedGraph& g) {
  if (g.num_edges < 1) throw ValidationError("decomposition requires at least one edge");
  if (g.has_isolated_site)
    throw ValidationError("graph has isolated sites; decomposition is defined over edges only");
  std::vector<Subsystem> subs;
  subs.reserve(g.num_edges);
  for (int k = 0; k < g.num_edges; ++k) {
    Subsystem s;
    s.edge = k;
    s.site_first = g.edge_sites[k][0];
    s.site_second = g.edge_sites[k][1];
    s.deg_first = g.degree[s.site_first];
    s.deg_second = g.degree[s.site_second];
    s.coupling = g.edge_coupling[k];
    s.eps_first = g.hamiltonian(s.site_first, s.site_first);
    s.eps_second = g.hamiltonian(s.site_second, s.site_second);
    s.eps_bar = 0.5 * (s.eps_first + s.eps_second);
    s.delta = 0.5 * (s.eps_first - s.eps_second);
    s.omega_sq = s.delta * s.delta +
                 s.deg_first * s.deg_second * s.coupling * s.coupling;
    subs.push_back(s);
  }
  return subs;
}

/// Local s-domain propagator ((s + Gamma/2) I + i H_local)^{-1}:
///   U(s) = ((sb - i delta, -i n_j J), (-i n_i J, sb + i delta)) / (Om^2 + sb^2)
/// with sb = s + i eps_bar + Gamma/2. Decoherence enters as eps_bar -> eps_bar - i Gamma/2.
inline Eigen::Matrix2cd local_propagator(const Subsystem& sub, double gamma, cplx s) {
  const cplx sb = s + cplx(gamma / 2, sub.eps_bar);
  const cplx denom = sub.omega_sq + sb * sb;
  if (std::abs(denom) < 1e-12 * std::max(1.0, sub.omega_sq))
    throw NumericalError("local propagator singular at s = (" +
                         format_double(s.real()) + ", " + format_double(s.imag()) +
                         ") for edge " + std::to_string(sub.edge));
  Eigen::Matrix2cd u;
  u << sb - cplx(0, sub.delta), cplx(0, -sub.deg_second * sub.coupling),
       cplx(0, -sub.deg_first * sub.coupling), sb + cplx(0, sub.delta);
  return u / denom;
}

/// Similarity transform D H_local D^{-1} with D = diag(sqrt n_i, sqrt n_j);
/// restores exact symmetry (both off-diagonals sqrt(n_i n_j) J). Diagnostic only.
inline std::pair<Eigen::Matrix2d, Eigen::Vector2d> symmetrize(const Subsystem& sub) {
  const double off = std::sqrt(double(sub.deg_first) * sub.deg_second) * sub.coupling;
  Eigen::Matrix2d h;
  h << sub.eps_first, off, off, sub.eps_second;
  Eigen::Vector2d d(std::sqrt(double(sub.deg_first)), std::sqrt(double(sub.deg_second)));
  return {h, d};
}

/// Index map for the 2M flow unknowns: slot 2k is edge k's first site,
/// slot 2k+1 its second, edges in id order.
struct FlowLayout {
  std::vector<std::array<int, 2>> slot_site;  // per slot: {edge, dense site}
  std::vector<std::vector<int>> site_slots;   // per site: incident slots, edge order

  static FlowLayout from(const ValidatedGraph& g) {
    FlowLayout l;
    l.site_slots.assign(g.num_sites, {});
    for (int k = 0; k < g.num_edges; ++k) {
      l.slot_site.push_back({k, g.edge_sites[k][0]});
      l.slot_site.push_back({k, g.edge_sites[k][1]});
    }
    for (int i = 0; i < g.num_sites; ++i)
      for (int e : g.incident_edges[i]) l.site_slots[i].push_back(slot(g, e, i));
    return l;
  }

  static int slot(const ValidatedGraph& g, int edge, int site) {
    return 2 * edge + (g.edge_sites[edge][0] == site ? 0 : 1);
  }

  int slots() const { return static_cast<int>(slot_site.size()); }
};

struct RowInfo {
  enum Kind { matching, junction } kind = matching;
  int site = 0;    // dense index
  int edge_s = -1; // matching rows: the two paired subsystems
  int edge_t = -1;
};

/// The 2M x 2M linear system M(s) f = b at one complex s. Matching rows first
/// (sites ascending, chained pairs of incident subsystems in edge order),
/// then one junction row per site.
struct MatchingSystem {
  cplx s;
  Eigen::MatrixXcd matrix;
  Eigen::VectorXcd rhs;
  std::vector<RowInfo> rows;
  int matching_rows = 0;
  int junction_rows = 0;
};

/// Precomputed assembly plan; fills M(s), b(s) into caller-owned storage so
/// contour sweeps can reuse allocations.
class MatchingAssembler {
 public:
  MatchingAssembler(const ValidatedGraph& g, const Eigen::VectorXcd& initial,
                    double gamma)
      : gamma_(gamma),
        subs_(enumerate_subsystems(g)),
        layout_(FlowLayout::from(g)) {
    if (initial.size() != g.num_sites)
      throw ValidationError("initial amplitude vector has wrong length");
    // per-subsystem initial amplitudes c_i(0)/n_i in slot order
    slot_initial_.resize(layout_.slots());
    for (int q = 0; q < layout_.slots(); ++q) {
      const int site = layout_.slot_site[q][1];
      slot_initial_(q) = initial(site) / double(g.degree[site]);
    }
    // matching rows: chain per site, sites ascending
    for (int i = 0; i < g.num_sites; ++i) {
      const auto& inc = g.incident_edges[i];
      for (std::size_t k = 0; k + 1 < inc.size(); ++k)
        rows_.push_back({RowInfo::matching, i, inc[k], inc[k + 1]});
    }
    matching_rows_ = static_cast<int>(rows_.size());
    for (int i = 0; i < g.num_sites; ++i)
      rows_.push_back({RowInfo::junction, i, -1, -1});
  }

  int dimension() const { return layout_.slots(); }
  const std::vector<Subsystem>& subsystems() const { return subs_; }
  const FlowLayout& layout() const { return layout_; }
  const std::vector<RowInfo>& rows() const { return rows_; }
  int matching_row_count() const { return matching_rows_; }
  double gamma() const { return gamma_; }

  /// Eigenvalue-plane coordinates eps_bar +/- Omega where each local
  /// propagator is singular (s = -i lambda - Gamma/2 on the pole line).
  std::vector<double> resonance_lambdas() const {
    std::vector<double> out;
    for (const auto& sub : subs_) {
      const double om = std::sqrt(sub.omega_sq);
      out.push_back(sub.eps_bar + om);
      out.push_back(sub.eps_bar - om);
    }
    return out;
  }

  void build(cplx s, Eigen::MatrixXcd& m, Eigen::VectorXcd& b) const {
    const int dim = dimension();
    m.setZero(dim, dim);
    b.setZero(dim);
    std::vector<Eigen::Matrix2cd> us;
    us.reserve(subs_.size());
    for (const auto& sub : subs_) us.push_back(local_propagator(sub, gamma_, s));

    int r = 0;
    for (const auto& row : rows_) {
      if (row.kind == RowInfo::matching) {
        // c_i^(S) - c_i^(T) = 0 expanded in flow unknowns; initial-condition
        // terms move to the right-hand side.
        const int es = row.edge_s, et = row.edge_t;
        const int sigma = (subs_[es].site_first == row.site) ? 0 : 1;
        const int tau = (subs_[et].site_first == row.site) ? 0 : 1;
        for (int a = 0; a < 2; ++a) {
          m(r, 2 * es + a) += us[es](sigma, a);
          m(r, 2 * et + a) -= us[et](tau, a);
          b(r) -= us[es](sigma, a) * slot_initial_(2 * es + a);
          b(r) += us[et](tau, a) * slot_initial_(2 * et + a);
        }
      } else {
        for (int q : layout_.site_slots[row.site]) m(r, q) = 1.0;
      }
      ++r;
    }
  }

  /// Subsystem amplitudes c^(S)(s) = U^(S)(s) [f^(S) + c^(S)(0)], slot order.
  Eigen::VectorXcd amplitudes(cplx s, const Eigen::VectorXcd& flows) const {
    Eigen::VectorXcd out(dimension());
    for (std::size_t k = 0; k < subs_.size(); ++k) {
      const Eigen::Matrix2cd u = local_propagator(subs_[k], gamma_, s);
      Eigen::Vector2cd v(flows(2 * k) + slot_initial_(2 * k),
                         flows(2 * k + 1) + slot_initial_(2 * k + 1));
      out.segment<2>(2 * k) = u * v;
    }
    return out;
  }

  const Eigen::VectorXcd& slot_initial() const { return slot_initial_; }

 private:
  double gamma_;
  std::vector<Subsystem> subs_;
  FlowLayout layout_;
  Eigen::VectorXcd slot_initial_;
  std::vector<RowInfo> rows_;
  int matching_rows_ = 0;
};

inline MatchingSystem assemble(const ValidatedGraph& g,
                               const Eigen::VectorXcd& initial, double gamma,
                               cplx s) {
  MatchingAssembler a(g, initial, gamma);
  MatchingSystem sys;
  sys.s = s;
  sys.rows = a.rows();
  sys.matching_rows = a.matching_row_count();
  sys.junction_rows = static_cast<int>(a.rows().size()) - a.matching_row_count();
  a.build(s, sys.matrix, sys.rhs);
  return sys;
}

namespace detail {

inline Eigen::VectorXcd solve_matching(const Eigen::MatrixXcd& m,
                                       const Eigen::VectorXcd& b, cplx s) {
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
  Eigen::VectorXcd f = lu.solve(b);
  const double resid = (m * f - b).norm();
  if (!(resid <= 1e-10 * std::max(b.norm(), 1e-300))) {
    throw NumericalError(
        "matching system (near-)singular at s = (" + format_double(s.real()) +
        ", " + format_double(s.imag()) + "); residual " + format_double(resid) +
        ", rcond " + format_double(lu.rcond()));
  }
  return f;
}

}  // namespace detail

/// Solve M(s) f = b for the 2M flow functions at one complex s.
inline Eigen::VectorXcd solve_flows(const ValidatedGraph& g,
                                    const Eigen::VectorXcd& initial,
                                    double gamma, cplx s) {
  MatchingAssembler a(g, initial, gamma);
  Eigen::MatrixXcd m;
  Eigen::VectorXcd b;
  a.build(s, m, b);
  return detail::solve_matching(m, b, s);
}

/// Per-subsystem amplitudes at s, slot order (solves the flows internally).
inline Eigen::VectorXcd subsystem_amplitudes(const ValidatedGraph& g,
                                             const Eigen::VectorXcd& initial,
                                             double gamma, cplx s) {
  MatchingAssembler a(g, initial, gamma);
  Eigen::MatrixXcd m;
  Eigen::VectorXcd b;
  a.build(s, m, b);
  return a.amplitudes(s, detail::solve_matching(m, b, s));
}

}  // namespace dimflow
