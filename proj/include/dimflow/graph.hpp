#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dimflow/common.hpp"

namespace dimflow {

struct SiteSpec {
  long id = 0;
  double energy = 0.0;
};

struct EdgeSpec {
  long a = 0;
  long b = 0;
  double coupling = 0.0;  // J
};

/// Raw graph data model: sites with energies, weighted undirected edges,
/// a uniform decoherence rate and an initial amplitude per site.
/// Edge order is significant: the position in `edges` is the edge id used
/// everywhere downstream (subsystem order, flow-slot layout).
struct GraphSpec {
  std::vector<SiteSpec> sites;
  std::vector<EdgeSpec> edges;
  double gamma = 0.0;
  std::map<long, cplx> initial;  // site id -> c_i(0)
};

/// GraphSpec plus everything derived: dense indices (sorted by site id),
/// degrees, the full Hamiltonian and the dense initial vector.
struct ValidatedGraph {
  GraphSpec spec;
  int num_sites = 0;   // N
  int num_edges = 0;   // M
  std::vector<long> site_ids;              // dense index -> id (ascending)
  std::unordered_map<long, int> site_index; // id -> dense index
  std::vector<int> degree;                 // n_i per dense index
  std::vector<std::array<int, 2>> edge_sites;  // dense endpoints, input slot order
  std::vector<double> edge_coupling;
  std::vector<std::vector<int>> incident_edges;  // per site, ascending edge id
  Eigen::MatrixXd hamiltonian;
  Eigen::VectorXcd initial;
  double gamma = 0.0;
  bool has_isolated_site = false;

  int index(long id) const {
    auto it = site_index.find(id);
    if (it == site_index.end())
      throw ValidationError("unknown site id " + std::to_string(id));
    return it->second;
  }
};

namespace detail {

inline void check_spec_invariants(const GraphSpec& spec) {
  if (spec.sites.empty()) throw ValidationError("graph has no sites");
  std::set<long> ids;
  for (const auto& s : spec.sites) {
    if (!std::isfinite(s.energy))
      throw ValidationError("site " + std::to_string(s.id) + ": non-finite energy");
    if (!ids.insert(s.id).second)
      throw ValidationError("duplicate site id " + std::to_string(s.id));
  }
  std::set<std::pair<long, long>> seen;
  for (std::size_t k = 0; k < spec.edges.size(); ++k) {
    const auto& e = spec.edges[k];
    const std::string where = "edge " + std::to_string(k) + " (" +
                              std::to_string(e.a) + "," + std::to_string(e.b) + ")";
    if (e.a == e.b) throw ValidationError(where + ": self-loop");
    if (!ids.count(e.a) || !ids.count(e.b))
      throw ValidationError(where + ": dangling endpoint");
    if (!std::isfinite(e.coupling))
      throw ValidationError(where + ": non-finite coupling");
    auto key = std::minmax(e.a, e.b);
    if (!seen.insert(key).second) throw ValidationError(where + ": duplicate edge");
  }
  if (!(spec.gamma >= 0.0) || !std::isfinite(spec.gamma))
    throw ValidationError("gamma must be a finite number >= 0");
  double norm2 = 0.0;
  for (const auto& [id, amp] : spec.initial) {
    if (!ids.count(id))
      throw ValidationError("initial amplitude refers to unknown site id " + std::to_string(id));
    if (!std::isfinite(amp.real()) || !std::isfinite(amp.imag()))
      throw ValidationError("non-finite initial amplitude on site " + std::to_string(id));
    norm2 += std::norm(amp);
  }
  if (!spec.initial.empty() && norm2 <= 0.0)
    throw ValidationError("initial amplitude vector has zero norm");
}

}  // namespace detail

/// Check all GraphSpec invariants and compute the derived structure.
inline ValidatedGraph validate(const GraphSpec& spec) {
  detail::check_spec_invariants(spec);

  ValidatedGraph g;
  g.spec = spec;
  std::sort(g.spec.sites.begin(), g.spec.sites.end(),
            [](const SiteSpec& x, const SiteSpec& y) { return x.id < y.id; });
  g.num_sites = static_cast<int>(g.spec.sites.size());
  g.num_edges = static_cast<int>(g.spec.edges.size());
  g.gamma = spec.gamma;

  for (int i = 0; i < g.num_sites; ++i) {
    g.site_ids.push_back(g.spec.sites[i].id);
    g.site_index.emplace(g.spec.sites[i].id, i);
  }
  g.degree.assign(g.num_sites, 0);
  g.incident_edges.assign(g.num_sites, {});
  g.hamiltonian = Eigen::MatrixXd::Zero(g.num_sites, g.num_sites);
  for (int i = 0; i < g.num_sites; ++i)
    g.hamiltonian(i, i) = g.spec.sites[i].energy;
  for (int k = 0; k < g.num_edges; ++k) {
    const auto& e = g.spec.edges[k];
    int ia = g.site_index.at(e.a), ib = g.site_index.at(e.b);
    g.edge_sites.push_back({ia, ib});
    g.edge_coupling.push_back(e.coupling);
    g.degree[ia]++;
    g.degree[ib]++;
    g.incident_edges[ia].push_back(k);
    g.incident_edges[ib].push_back(k);
    g.hamiltonian(ia, ib) += e.coupling;
    g.hamiltonian(ib, ia) += e.coupling;
  }
  for (int i = 0; i < g.num_sites; ++i)
    if (g.degree[i] == 0) g.has_isolated_site = true;

  g.initial = Eigen::VectorXcd::Zero(g.num_sites);
  if (spec.initial.empty()) {
    g.initial(0) = 1.0;  // unit amplitude on the lowest site id
    g.spec.initial[g.site_ids[0]] = 1.0;
  } else {
    for (const auto& [id, amp] : spec.initial) g.initial(g.site_index.at(id)) = amp;
  }
  if (g.initial.norm() <= 0.0)
    throw ValidationError("initial amplitude vector has zero norm");
  return g;
}

// ---------------------------------------------------------------------------
// Builtin families
// ---------------------------------------------------------------------------

/// Canonical diamond (2-fan): sites 1..4, edges a..e =
/// (1,2),(2,3),(3,4),(4,1),(2,4); initial excitation on site 1.
inline GraphSpec make_diamond(double ja = 1, double jb = 1, double jc = 1,
                              double jd = 1, double je = 1, double gamma = 0) {
  GraphSpec s;
  for (long i = 1; i <= 4; ++i) s.sites.push_back({i, 0.0});
  s.edges = {{1, 2, ja}, {2, 3, jb}, {3, 4, jc}, {4, 1, jd}, {2, 4, je}};
  s.gamma = gamma;
  s.initial[1] = 1.0;
  return s;
}

/// Source-trap-trap triangle: J_a=(1+beta)J on 1-2, J_b=alpha*J on 2-3,
/// J_c=(1-beta)J on 3-1; initial excitation on site 1.
inline GraphSpec make_trimer(double beta, double alpha, double coupling = 1,
                             double gamma = 0) {
  GraphSpec s;
  for (long i = 1; i <= 3; ++i) s.sites.push_back({i, 0.0});
  s.edges = {{1, 2, (1 + beta) * coupling},
             {2, 3, alpha * coupling},
             {3, 1, (1 - beta) * coupling}};
  s.gamma = gamma;
  s.initial[1] = 1.0;
  return s;
}

inline GraphSpec make_path(int n, double coupling = 1, double gamma = 0) {
  if (n < 2) throw ValidationError("path requires n >= 2");
  GraphSpec s;
  for (long i = 1; i <= n; ++i) s.sites.push_back({i, 0.0});
  for (long i = 1; i < n; ++i) s.edges.push_back({i, i + 1, coupling});
  s.gamma = gamma;
  s.initial[1] = 1.0;
  return s;
}

inline GraphSpec make_cycle(int n, double coupling = 1, double gamma = 0) {
  if (n < 3) throw ValidationError("cycle requires n >= 3");
  GraphSpec s = make_path(n, coupling, gamma);
  s.edges.push_back({static_cast<long>(n), 1, coupling});
  return s;
}

inline GraphSpec make_star(int n, double coupling = 1, double gamma = 0) {
  if (n < 2) throw ValidationError("star requires n >= 2");
  GraphSpec s;
  for (long i = 1; i <= n; ++i) s.sites.push_back({i, 0.0});
  for (long i = 2; i <= n; ++i) s.edges.push_back({1, i, coupling});
  s.gamma = gamma;
  s.initial[1] = 1.0;
  return s;
}

inline GraphSpec make_complete(int n, double coupling = 1, double gamma = 0) {
  if (n < 2) throw ValidationError("complete graph requires n >= 2");
  GraphSpec s;
  for (long i = 1; i <= n; ++i) s.sites.push_back({i, 0.0});
  for (long i = 1; i <= n; ++i)
    for (long j = i + 1; j <= n; ++j) s.edges.push_back({i, j, coupling});
  s.gamma = gamma;
  s.initial[1] = 1.0;
  return s;
}

struct BuiltinOptions {
  int n = 0;             // size for path/cycle/star/complete
  double coupling = 1.0;  // J
  double beta = 0.0;      // trimer asymmetry
  double alpha = 1.0;     // trimer inter-trap scale
  double gamma = 0.0;
  std::array<double, 5> diamond_j = {1, 1, 1, 1, 1};
};

inline GraphSpec builtin_graph(const std::string& name, const BuiltinOptions& o) {
  const auto& dj = o.diamond_j;
  if (name == "diamond") return make_diamond(dj[0], dj[1], dj[2], dj[3], dj[4], o.gamma);
  if (name == "trimer") return make_trimer(o.beta, o.alpha, o.coupling, o.gamma);
  if (name == "path") return make_path(o.n, o.coupling, o.gamma);
  if (name == "cycle") return make_cycle(o.n, o.coupling, o.gamma);
  if (name == "star") return make_star(o.n, o.coupling, o.gamma);
  if (name == "complete") return make_complete(o.n, o.coupling, o.gamma);
  throw ValidationError("unknown builtin graph '" + name + "'");
}

// ---------------------------------------------------------------------------
// File format (JSON document; see README for the schema)
// ---------------------------------------------------------------------------

namespace detail {

inline double require_number(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number())
    throw ValidationError(where + ": expected a number, got " + std::string(j.type_name()));
  return j.get<double>();
}

inline long require_integer(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer())
    throw ValidationError(where + ": expected an integer, got " + j.dump());
  return j.get<long>();
}

inline void reject_unknown_keys(const nlohmann::json& obj,
                                const std::set<std::string>& allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ValidationError(where + ": unknown field '" + it.key() + "'");
}

}  // namespace detail

/// Parse the graph document. Missing gamma defaults to 0; missing initial
/// defaults to unit amplitude on the lowest site id (applied in validate()).
inline GraphSpec parse_graph(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed graph document: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("graph document: top level must be an object");
  detail::reject_unknown_keys(doc, {"sites", "edges", "gamma", "initial"}, "graph document");
  if (!doc.contains("sites") || !doc["sites"].is_array())
    throw ValidationError("graph document: missing 'sites' array");
  if (!doc.contains("edges") || !doc["edges"].is_array())
    throw ValidationError("graph document: missing 'edges' array");

  GraphSpec spec;
  int k = 0;
  for (const auto& js : doc["sites"]) {
    const std::string where = "/sites/" + std::to_string(k++);
    if (!js.is_object()) throw ValidationError(where + ": expected an object");
    detail::reject_unknown_keys(js, {"id", "energy"}, where);
    if (!js.contains("id")) throw ValidationError(where + ": missing 'id'");
    SiteSpec s;
    s.id = detail::require_integer(js["id"], where + "/id");
    s.energy = js.contains("energy") ? detail::require_number(js["energy"], where + "/energy") : 0.0;
    spec.sites.push_back(s);
  }
  k = 0;
  for (const auto& je : doc["edges"]) {
    const std::string where = "/edges/" + std::to_string(k++);
    if (!je.is_object()) throw ValidationError(where + ": expected an object");
    detail::reject_unknown_keys(je, {"a", "b", "J"}, where);
    if (!je.contains("a") || !je.contains("b") || !je.contains("J"))
      throw ValidationError(where + ": needs fields 'a', 'b', 'J'");
    EdgeSpec e;
    e.a = detail::require_integer(je["a"], where + "/a");
    e.b = detail::require_integer(je["b"], where + "/b");
    e.coupling = detail::require_number(je["J"], where + "/J");
    spec.edges.push_back(e);
  }
  if (doc.contains("gamma")) spec.gamma = detail::require_number(doc["gamma"], "/gamma");
  if (doc.contains("initial")) {
    const auto& init = doc["initial"];
    if (!init.is_object()) throw ValidationError("/initial: expected an object of id -> [re, im]");
    for (auto it = init.begin(); it != init.end(); ++it) {
      const std::string where = "/initial/" + it.key();
      long id;
      try {
        std::size_t pos = 0;
        id = std::stol(it.key(), &pos);
        if (pos != it.key().size()) throw std::invalid_argument("");
      } catch (...) {
        throw ValidationError(where + ": key is not a site id");
      }
      const auto& v = it.value();
      if (!v.is_array() || v.size() != 2)
        throw ValidationError(where + ": expected [re, im]");
      spec.initial[id] = cplx(detail::require_number(v[0], where + "[0]"),
                              detail::require_number(v[1], where + "[1]"));
    }
  }
  detail::check_spec_invariants(spec);
  return spec;
}

/// Byte-stable serializer: sorted keys, 17-significant-digit floats,
/// two-space indent. parse(serialize(x)) == x on the data model.
inline std::string serialize_graph(const GraphSpec& spec) {
  std::ostringstream out;
  out << "{\n  \"edges\": [";
  for (std::size_t k = 0; k < spec.edges.size(); ++k) {
    const auto& e = spec.edges[k];
    out << (k ? "," : "") << "\n    {\"J\": " << format_double(e.coupling)
        << ", \"a\": " << e.a << ", \"b\": " << e.b << "}";
  }
  out << (spec.edges.empty() ? "" : "\n  ") << "],\n";
  out << "  \"gamma\": " << format_double(spec.gamma) << ",\n";
  out << "  \"initial\": {";
  std::size_t k = 0;
  for (const auto& [id, amp] : spec.initial) {  // std::map: ids ascending
    out << (k++ ? "," : "") << "\n    \"" << id << "\": [" << format_double(amp.real())
        << ", " << format_double(amp.imag()) << "]";
  }
  out << (spec.initial.empty() ? "" : "\n  ") << "},\n";
  auto sites = spec.sites;
  std::sort(sites.begin(), sites.end(),
            [](const SiteSpec& x, const SiteSpec& y) { return x.id < y.id; });
  out << "  \"sites\": [";
  for (std::size_t i = 0; i < sites.size(); ++i) {
    out << (i ? "," : "") << "\n    {\"energy\": " << format_double(sites[i].energy)
        << ", \"id\": " << sites[i].id << "}";
  }
  out << (sites.empty() ? "" : "\n  ") << "]\n}\n";
  return out.str();
}

}  // namespace dimflow
