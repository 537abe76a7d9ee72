#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dimflow/charts.hpp"
#include "dimflow/common.hpp"
#include "dimflow/decomposition.hpp"
#include "dimflow/efficiency.hpp"
#include "dimflow/graph.hpp"
#include "dimflow/modes.hpp"
#include "dimflow/spectral.hpp"

namespace dimflow {

/// Erdos-Renyi (p = 0.5) graph conditioned on connectedness, N in [2, 8],
/// couplings in [0.2, 2], energies in [-1, 1], random normalized complex
/// initial state. Deterministic for a given generator state.
inline GraphSpec random_connected_graph(Rng& rng, double gamma) {
  for (;;) {
    const int n = rng.uniform_int(2, 8);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.5) pairs.push_back({i, j});
    // connectivity check
    std::vector<int> comp(n, -1);
    std::vector<int> stack = {0};
    comp[0] = 0;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (const auto& [a, b] : pairs) {
        int w = -1;
        if (a == v && comp[b] < 0) w = b;
        if (b == v && comp[a] < 0) w = a;
        if (w >= 0) {
          comp[w] = 0;
          stack.push_back(w);
        }
      }
    }
    if (std::count(comp.begin(), comp.end(), 0) != n) continue;

    GraphSpec spec;
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      spec.sites.push_back({i + 1, rng.uniform(-1.0, 1.0)});
      cplx amp(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      spec.initial[i + 1] = amp;
      norm2 += std::norm(amp);
    }
    if (norm2 <= 1e-6) continue;
    for (auto& [id, amp] : spec.initial) amp /= std::sqrt(norm2);
    for (const auto& [a, b] : pairs)
      spec.edges.push_back({a + 1, b + 1, rng.uniform(0.2, 2.0)});
    spec.gamma = gamma;
    return spec;
  }
}

struct VerifyOptions {
  std::uint64_t seed = 42;
  int count = 50;
  bool corrupt_matching = false;  // test hook: perturb one matching-row entry
};

struct VerifyReport {
  bool ok = true;
  int graphs_checked = 0;
  int checks_run = 0;
  double max_reconstruction_deviation = 0.0;
  double max_eta_sum_error = 0.0;
  std::vector<std::string> failures;
  std::string offending_graph;  // serialized document of the first failure

  void fail(const std::string& what, const GraphSpec& spec) {
    ok = false;
    failures.push_back(what);
    if (offending_graph.empty()) offending_graph = serialize_graph(spec);
  }
};

/// Invariant suite over `count` seeded random connected graphs: structural
/// row counts and sparsity, junction and matching conditions of the solved
/// flows, s-domain oracle equivalence, pole/residue consistency,
/// reconstruction against the spectral reference, efficiency normalization.
inline VerifyReport run_verification(const VerifyOptions& opts) {
  if (opts.count < 1) throw ValidationError("verification count must be >= 1");
  VerifyReport report;
  Rng rng(opts.seed);

  for (int trial = 0; trial < opts.count; ++trial) {
    const double gamma = (trial % 2 == 0) ? 0.0 : rng.uniform(0.01, 0.5);
    GraphSpec spec = random_connected_graph(rng, gamma);
    ValidatedGraph g = validate(spec);
    const std::string tag = "graph " + std::to_string(trial) + " (N=" +
                            std::to_string(g.num_sites) + ", M=" +
                            std::to_string(g.num_edges) + "): ";
    auto check = [&](bool cond, const std::string& what) {
      ++report.checks_run;
      if (!cond) report.fail(tag + what, spec);
    };

    // -- structure
    MatchingAssembler assembler(g, g.initial, gamma);
    int expected_matching = 0;
    for (int i = 0; i < g.num_sites; ++i)
      expected_matching += std::max(g.degree[i] - 1, 0);
    check(assembler.matching_row_count() == expected_matching,
          "matching row count != sum(deg-1)");
    check(static_cast<int>(assembler.rows().size()) ==
              expected_matching + g.num_sites,
          "total rows != matching + junction");
    check(assembler.dimension() == 2 * g.num_edges, "system is not 2M x 2M");

    Spectrum spectrum = eigendecompose(g);
    const double scale = std::max(spectrum.norm(), 1e-12);
    Eigen::MatrixXcd m;
    Eigen::VectorXcd b;

    // -- sampled-s checks
    for (int probe = 0; probe < 20; ++probe) {
      const cplx s(rng.uniform(0.15, 1.0), rng.uniform(-scale - 1, scale + 1));
      assembler.build(s, m, b);
      if (opts.corrupt_matching && assembler.matching_row_count() > 0)
        m(0, 0) += 1e-3;  // deliberate defect, must trip the matching check

      if (probe == 0) {  // row structure is s-independent; scan once
        for (int r = 0; r < m.rows(); ++r) {
          const RowInfo& row = assembler.rows()[r];
          int nonzeros = 0;
          bool ones = true;
          for (int c = 0; c < m.cols(); ++c) {
            if (m(r, c) != cplx(0, 0)) {
              ++nonzeros;
              if (m(r, c) != cplx(1, 0)) ones = false;
            }
          }
          if (row.kind == RowInfo::matching) {
            check(nonzeros <= 4, "matching row " + std::to_string(r) +
                                     " has more than 4 nonzeros");
          } else {
            check(ones && nonzeros == g.degree[row.site],
                  "junction row " + std::to_string(r) + " is not a 0/1 degree row");
            check(b(r) == cplx(0, 0), "junction rhs entry nonzero");
          }
        }
      }

      Eigen::VectorXcd flows;
      try {
        flows = detail::solve_matching(m, b, s);
      } catch (const NumericalError& e) {
        report.fail(tag + e.what(), spec);
        break;
      }
      const double fscale = std::max(1.0, flows.cwiseAbs().maxCoeff());
      for (int i = 0; i < g.num_sites; ++i) {
        cplx sum = 0;
        for (int q : assembler.layout().site_slots[i]) sum += flows(q);
        check(std::abs(sum) <= 1e-12 * fscale,
              "junction sum violated at site " + std::to_string(g.site_ids[i]));
        if (g.degree[i] == 1)
          check(std::abs(flows(assembler.layout().site_slots[i][0])) <= 1e-12 * fscale,
                "leaf flow not forced to zero");
      }

      const Eigen::VectorXcd amps = assembler.amplitudes(s, flows);
      Eigen::VectorXcd full(g.num_sites);
      full.setZero();
      Eigen::VectorXd seen = Eigen::VectorXd::Zero(g.num_sites);
      bool matching_ok = true;
      for (int q = 0; q < assembler.dimension(); ++q) {
        const int site = assembler.layout().slot_site[q][1];
        if (!seen(site)) {
          full(site) = amps(q);
          seen(site) = 1.0;
        } else if (std::abs(amps(q) - full(site)) > 1e-10) {
          matching_ok = false;
        }
      }
      check(matching_ok, "matching condition violated: subsystem amplitudes "
                         "disagree across a shared site (matching row defect)");

      // s-domain oracle: n_i c_i^(S)(s) = ((s + Gamma/2) I + i H)^{-1} c(0)
      Eigen::MatrixXcd resolvent =
          (s + gamma / 2) * Eigen::MatrixXcd::Identity(g.num_sites, g.num_sites) +
          cplx(0, 1) * g.hamiltonian;
      Eigen::VectorXcd oracle = resolvent.partialPivLu().solve(g.initial);
      for (int i = 0; i < g.num_sites; ++i)
        full(i) *= double(g.degree[i]);
      check((full - oracle).cwiseAbs().maxCoeff() <= 1e-8,
            "s-domain amplitudes disagree with the resolvent");
      if (!report.ok && opts.corrupt_matching) break;
    }
    if (opts.corrupt_matching) continue;  // structural negative control only

    // -- poles and residues
    std::vector<Pole> poles;
    try {
      poles = find_poles(g, gamma);
    } catch (const NumericalError& e) {
      report.fail(tag + e.what(), spec);
      continue;
    }
    int mult_total = 0;
    for (const Pole& p : poles) mult_total += p.multiplicity;
    check(mult_total == g.num_sites, "pole multiplicities do not sum to N");
    {
      int k = 0;
      bool biject = true;
      for (const Pole& p : poles)
        for (int r = 0; r < p.multiplicity; ++r, ++k)
          if (std::abs(p.lambda - spectrum.eigenvalues(k)) > 1e-9 * std::max(1.0, scale))
            biject = false;
      check(biject, "pole set does not match the spectrum");
    }

    ModeSet set = build_mode_set(g, g.initial, gamma);
    Eigen::VectorXcd completeness = Eigen::VectorXcd::Zero(g.num_sites);
    for (const Mode& mode : set.modes) {
      completeness += mode.site_coefficient;
      for (int i = 0; i < g.num_sites; ++i) {
        cplx jsum = 0;
        for (int q : assembler.layout().site_slots[i]) jsum += mode.flow_residue(q);
        check(std::abs(jsum) <= 1e-9,
              "residue junction sum violated at site " + std::to_string(g.site_ids[i]));
      }
      for (int q = 0; q < assembler.dimension(); ++q) {
        const int site = assembler.layout().slot_site[q][1];
        check(std::abs(double(g.degree[site]) * mode.subsystem_coefficient(q) -
                       mode.site_coefficient(site)) <= 1e-8,
              "modal coefficient disagrees across subsystems");
      }
    }
    check((completeness - g.initial).cwiseAbs().maxCoeff() <= 1e-9,
          "mode coefficients do not sum to the initial state");

    // -- reconstruction vs the spectral reference on t in [0, 20]
    std::vector<double> times;
    for (int t = 0; t <= 80; ++t) times.push_back(20.0 * t / 80);
    Eigen::MatrixXcd reference = propagate(g, g.initial, times);
    Eigen::MatrixXcd rebuilt = reconstruct(set, g.num_sites, gamma, times);
    const double deviation = (reference - rebuilt).cwiseAbs().maxCoeff();
    report.max_reconstruction_deviation =
        std::max(report.max_reconstruction_deviation, deviation);
    check(deviation <= 1e-8, "reconstruction deviates from the reference by " +
                                 format_double(deviation));

    if (gamma == 0.0) {
      double worst = 0.0;
      for (std::size_t t = 0; t < times.size(); ++t)
        worst = std::max(worst, std::abs(reference.col(t).squaredNorm() -
                                         g.initial.squaredNorm()));
      check(worst <= 1e-10, "norm not conserved at Gamma = 0");
    } else {
      EfficiencyReport from_oracle = oracle_efficiency(g, g.initial, gamma);
      EfficiencyReport from_modes = efficiency(g, g.initial, gamma);
      const double norm2 = g.initial.squaredNorm();
      report.max_eta_sum_error = std::max(
          report.max_eta_sum_error, std::abs(from_oracle.eta.sum() - norm2));
      check(std::abs(from_oracle.eta.sum() - norm2) <= 1e-10,
            "oracle efficiencies do not sum to 1");
      check(std::abs(from_modes.eta.sum() - norm2) <= 1e-8,
            "decomposition efficiencies do not sum to 1");
      check((from_oracle.eta - from_modes.eta).cwiseAbs().maxCoeff() <= 1e-8,
            "efficiency routes disagree");
    }
    ++report.graphs_checked;
  }
  return report;
}

}  // namespace dimflow
