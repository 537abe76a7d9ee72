// Command-line front end: load or generate graphs, run evolutions, emit
// pole/flow/chart/efficiency data, and run the randomized verification suite.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dimflow/dimflow.hpp"

namespace {

using namespace dimflow;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct GraphSourceFlags {
  std::string path;
  std::string builtin;
  int n = 4;
  double coupling = 1.0;
  double beta = 0.0;
  double alpha = 1.0;
  std::vector<double> diamond_j = {kUnset, kUnset, kUnset, kUnset, kUnset};
  double gamma = -1.0;  // <0 means "not set": keep the document's value
};

void add_graph_flags(CLI::App* cmd, GraphSourceFlags& flags) {
  auto* file = cmd->add_option("--graph", flags.path, "graph document to load");
  auto* name = cmd->add_option("--builtin", flags.builtin,
                               "builtin family: diamond|trimer|path|cycle|star|complete");
  file->excludes(name);
  cmd->add_option("--n", flags.n, "site count for path/cycle/star/complete");
  cmd->add_option("--J", flags.coupling, "coupling unit J");
  cmd->add_option("--beta", flags.beta, "trimer asymmetry");
  cmd->add_option("--alpha", flags.alpha, "trimer inter-trap coupling scale");
  cmd->add_option("--Ja", flags.diamond_j[0], "diamond edge a coupling");
  cmd->add_option("--Jb", flags.diamond_j[1], "diamond edge b coupling");
  cmd->add_option("--Jc", flags.diamond_j[2], "diamond edge c coupling");
  cmd->add_option("--Jd", flags.diamond_j[3], "diamond edge d coupling");
  cmd->add_option("--Je", flags.diamond_j[4], "diamond edge e coupling");
  cmd->add_option("--gamma", flags.gamma, "decoherence rate (overrides the document)");
}

ValidatedGraph load_graph(const GraphSourceFlags& flags) {
  if (flags.path.empty() == flags.builtin.empty())
    throw ValidationError("exactly one of --graph or --builtin is required");
  GraphSpec spec;
  if (!flags.path.empty()) {
    std::ifstream in(flags.path, std::ios::binary);
    if (!in) throw IoError("cannot read graph file '" + flags.path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    spec = parse_graph(buf.str());
  } else {
    BuiltinOptions o;
    o.n = flags.n;
    o.coupling = flags.coupling;
    o.beta = flags.beta;
    o.alpha = flags.alpha;
    o.gamma = std::max(flags.gamma, 0.0);
    for (int k = 0; k < 5; ++k)  // explicit per-edge flags win over --J
      o.diamond_j[k] = std::isnan(flags.diamond_j[k]) ? flags.coupling : flags.diamond_j[k];
    spec = builtin_graph(flags.builtin, o);
  }
  if (flags.gamma >= 0.0) spec.gamma = flags.gamma;
  return validate(spec);
}

std::vector<double> time_grid(double tmax, int steps) {
  if (!(tmax > 0.0)) throw ValidationError("--tmax must be > 0");
  if (steps < 2) throw ValidationError("--steps must be >= 2");
  std::vector<double> t(steps);
  for (int k = 0; k < steps; ++k) t[k] = tmax * k / (steps - 1);
  return t;
}

cplx parse_complex(const std::string& text) {
  std::istringstream in(text);
  double re = 0, im = 0;
  char comma = 0;
  if (!(in >> re)) throw ValidationError("bad complex value '" + text + "'");
  if (in >> comma) {
    if (comma != ',' || !(in >> im))
      throw ValidationError("bad complex value '" + text + "' (want re,im)");
  }
  return {re, im};
}

int run(int argc, char** argv) {
  CLI::App app{"dimerized edge decomposition of quantum evolution on graphs"};
  app.require_subcommand(1);

  GraphSourceFlags flags;
  std::string out_path;
  std::string format_name = "csv";
  double tmax = 10.0;
  int steps = 1001;
  std::vector<std::string> s_samples;
  std::string grid_spec = "201x201";
  std::uint64_t seed = 42;
  int count = 50;
  bool corrupt = false;

  auto add_output_flags = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "output file (default: stdout)");
    cmd->add_option("--format", format_name, "csv | structured-text")
        ->check(CLI::IsMember({"csv", "structured-text", "text"}));
  };

  CLI::App* info = app.add_subcommand("info", "graph summary and matching-system structure");
  add_graph_flags(info, flags);

  CLI::App* evolve = app.add_subcommand("evolve", "time evolution, reference and decomposition");
  add_graph_flags(evolve, flags);
  add_output_flags(evolve);
  evolve->add_option("--tmax", tmax, "end of the time grid");
  evolve->add_option("--steps", steps, "number of time samples");

  CLI::App* poles = app.add_subcommand("poles", "pole set of the flow functions");
  add_graph_flags(poles, flags);
  add_output_flags(poles);

  CLI::App* flows = app.add_subcommand("flows", "flow functions at sampled s points");
  add_graph_flags(flows, flags);
  add_output_flags(flows);
  flows->add_option("--s", s_samples, "complex sample 're,im' (repeatable)");

  CLI::App* chart_cmd = app.add_subcommand("chart", "per-mode u/chi vector chart");
  add_graph_flags(chart_cmd, flags);
  add_output_flags(chart_cmd);

  CLI::App* eff = app.add_subcommand("efficiency", "transfer efficiency per site");
  add_graph_flags(eff, flags);
  add_output_flags(eff);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "trimer efficiency over a (beta, alpha) grid");
  add_output_flags(sweep_cmd);
  sweep_cmd->add_option("--grid", grid_spec, "grid resolution NBxNA (default 201x201)");
  double sweep_j = 1.0, sweep_gamma = 0.01;
  sweep_cmd->add_option("--J", sweep_j, "coupling unit J");
  sweep_cmd->add_option("--gamma", sweep_gamma, "decoherence rate");

  CLI::App* verify = app.add_subcommand("verify", "randomized invariant suite");
  verify->add_option("--seed", seed, "random seed");
  verify->add_option("--count", count, "number of random graphs");
  verify->add_flag("--corrupt", corrupt, "")->group("");  // test hook

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the flag error
    return rc == 0 ? 0 : 1;
  }
  const OutputFormat format = parse_format(format_name == "text" ? "structured-text" : format_name);

  if (info->parsed()) {
    ValidatedGraph g = load_graph(flags);
    std::ostringstream out;
    out << "N=" << g.num_sites << " M=" << g.num_edges;
    if (g.num_edges > 0 && !g.has_isolated_site) {
      MatchingAssembler a(g, g.initial, g.gamma);
      const int matching = a.matching_row_count();
      const int junction = static_cast<int>(a.rows().size()) - matching;
      out << " rows=" << a.dimension() << " (" << matching << " matching + "
          << junction << " junction)";
    }
    std::cout << out.str() << "\n";
    std::cout << "gamma=" << format_double(g.gamma) << "\n";
    for (int i = 0; i < g.num_sites; ++i)
      std::cout << "site " << g.site_ids[i] << ": degree=" << g.degree[i]
                << " energy=" << format_double(g.hamiltonian(i, i)) << "\n";
    if (g.num_edges > 0 && !g.has_isolated_site) {
      // sparsity check at a probe point clear of the pole line Re(s) <= 0
      MatchingAssembler a(g, g.initial, g.gamma);
      Eigen::MatrixXcd m;
      Eigen::VectorXcd b;
      a.build(cplx(0.5, 0.25), m, b);
      int worst = 0;
      for (int r = 0; r < a.matching_row_count(); ++r) {
        int nz = 0;
        for (int c = 0; c < m.cols(); ++c)
          if (m(r, c) != cplx(0, 0)) ++nz;
        worst = std::max(worst, nz);
      }
      std::cout << "matching row sparsity: max " << worst << " nonzeros (limit 4)\n";
      if (worst > 4) throw NumericalError("matching row sparsity bound violated");
    }
    if (g.has_isolated_site)
      std::cout << "note: isolated sites present; decomposition unavailable, "
                   "reference propagator only\n";
    return 0;
  }

  if (evolve->parsed()) {
    ValidatedGraph g = load_graph(flags);
    const std::vector<double> times = time_grid(tmax, steps);
    Eigen::MatrixXcd reference = propagate(g, g.initial, times);
    Table table;
    if (g.num_edges > 0 && !g.has_isolated_site) {
      Eigen::MatrixXcd rebuilt = reconstruct(g, g.initial, g.gamma, times);
      const double dev = (reference - rebuilt).cwiseAbs().maxCoeff();
      std::cerr << "max |reference - decomposition| = " << format_double(dev) << "\n";
      table = evolve_table(g, times, reference, rebuilt);
    } else {
      std::cerr << "decomposition unavailable (no edges or isolated sites); "
                   "reference columns only\n";
      table = evolve_table(g, times, reference, reference);
    }
    write_table(out_path, table, format);
    return 0;
  }

  if (poles->parsed()) {
    ValidatedGraph g = load_graph(flags);
    write_table(out_path, poles_table(find_poles(g, g.gamma)), format);
    return 0;
  }

  if (flows->parsed()) {
    ValidatedGraph g = load_graph(flags);
    std::vector<cplx> samples;
    for (const std::string& text : s_samples) samples.push_back(parse_complex(text));
    if (samples.empty()) samples.push_back(cplx(0.5, 0.0));
    std::vector<Eigen::VectorXcd> values;
    for (cplx s : samples) values.push_back(solve_flows(g, g.initial, g.gamma, s));
    write_table(out_path, flows_table(g, FlowLayout::from(g), samples, values), format);
    return 0;
  }

  if (chart_cmd->parsed()) {
    ValidatedGraph g = load_graph(flags);
    ModeSet set = build_mode_set(g, g.initial, g.gamma);
    for (const std::string& w : set.warnings) std::cerr << "warning: " << w << "\n";
    write_table(out_path, chart_table(chart(g, set, g.gamma)), format);
    return 0;
  }

  if (eff->parsed()) {
    ValidatedGraph g = load_graph(flags);
    if (!(g.gamma > 0.0))
      throw ValidationError("efficiency requires --gamma > 0");
    EfficiencyReport from_modes = efficiency(g, g.initial, g.gamma);
    EfficiencyReport from_oracle = oracle_efficiency(g, g.initial, g.gamma);
    const double delta = (from_modes.eta - from_oracle.eta).cwiseAbs().maxCoeff();
    std::cerr << "decomposition vs spectral reference: max |delta eta| = "
              << format_double(delta) << "\n";
    if (from_modes.lambdas.size() < g.num_sites)
      std::cerr << "note: degenerate eigenvalue cluster(s); cluster-summed "
                   "weights reported\n";
    if (delta > 1e-8)
      throw NumericalError("efficiency routes disagree beyond 1e-8");
    write_table(out_path, efficiency_table(g, from_modes), format);
    return 0;
  }

  if (sweep_cmd->parsed()) {
    const auto xpos = grid_spec.find('x');
    if (xpos == std::string::npos)
      throw ValidationError("--grid wants NBxNA, e.g. 201x201");
    const int nb = std::stoi(grid_spec.substr(0, xpos));
    const int na = std::stoi(grid_spec.substr(xpos + 1));
    SweepGrid grid = sweep(-2.0, 2.0, nb, 0.0, 2.0, na, sweep_gamma, sweep_j);
    double best = -1.0;
    std::size_t best_cell = 0;
    for (std::size_t c = 0; c < grid.cells.size(); ++c)
      if (grid.cells[c].eta2 > best) {
        best = grid.cells[c].eta2;
        best_cell = c;
      }
    std::cerr << "max eta2 = " << format_double(best) << " at (beta, alpha) = ("
              << format_double(grid.cells[best_cell].beta) << ", "
              << format_double(grid.cells[best_cell].alpha) << ")\n";
    write_table(out_path, sweep_table(grid), format);
    return 0;
  }

  if (verify->parsed()) {
    VerifyOptions opts;
    opts.seed = seed;
    opts.count = count;
    opts.corrupt_matching = corrupt;
    const auto start = std::chrono::steady_clock::now();
    VerifyReport report = run_verification(opts);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "graphs checked: " << report.graphs_checked << "\n"
              << "checks run: " << report.checks_run << "\n"
              << "max reconstruction deviation: "
              << format_double(report.max_reconstruction_deviation) << "\n"
              << "max |sum eta - 1|: " << format_double(report.max_eta_sum_error) << "\n"
              << "elapsed: " << format_double(elapsed) << " s\n";
    if (!report.ok) {
      std::cout << "FAILED checks:\n";
      for (const std::string& f : report.failures) std::cout << "  " << f << "\n";
      std::cout << "offending graph:\n" << report.offending_graph;
      return 2;
    }
    std::cout << "all invariants hold\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dimflow::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dimflow::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const dimflow::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
