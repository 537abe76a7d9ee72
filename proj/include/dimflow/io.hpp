#pragma once

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dimflow/charts.hpp"
#include "dimflow/common.hpp"
#include "dimflow/efficiency.hpp"
#include "dimflow/modes.hpp"

namespace dimflow {

enum class OutputFormat { csv, structured_text };

inline OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "structured-text" || name == "text") return OutputFormat::structured_text;
  throw ValidationError("unknown output format '" + name + "'");
}

/// Rows of already-formatted cells; rendered as CSV (comma separator, '.'
/// decimal, mandatory header) or as an aligned text table.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out, OutputFormat format) const {
    if (format == OutputFormat::csv) {
      for (std::size_t c = 0; c < header.size(); ++c)
        out << (c ? "," : "") << header[c];
      out << "\n";
      for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
          out << (c ? "," : "") << row[c];
        out << "\n";
      }
    } else {
      std::vector<std::size_t> width(header.size());
      for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
      for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c)
          width[c] = std::max(width[c], row[c].size());
      out << "#";
      for (std::size_t c = 0; c < header.size(); ++c)
        out << " " << std::setw(static_cast<int>(width[c])) << std::left << header[c];
      out << "\n";
      for (const auto& row : rows) {
        out << " ";
        for (std::size_t c = 0; c < row.size(); ++c)
          out << " " << std::setw(static_cast<int>(width[c])) << std::left << row[c];
        out << "\n";
      }
    }
  }
};

inline void write_table(const std::string& path, const Table& table,
                        OutputFormat format) {
  if (path.empty() || path == "-") {
    table.write(std::cout, format);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file '" + path + "'");
  table.write(out, format);
  if (!out.good()) throw IoError("write failed for '" + path + "'");
}

inline Table poles_table(const std::vector<Pole>& poles) {
  Table t;
  t.header = {"index", "lambda", "s_re", "s_im", "multiplicity", "resonance_flag"};
  for (std::size_t k = 0; k < poles.size(); ++k) {
    const Pole& p = poles[k];
    t.rows.push_back({std::to_string(k), format_double(p.lambda),
                      format_double(p.location.real()),
                      format_double(p.location.imag()),
                      std::to_string(p.multiplicity),
                      p.resonance_coincident ? "1" : "0"});
  }
  return t;
}

inline Table evolve_table(const ValidatedGraph& g, const std::vector<double>& times,
                          const Eigen::MatrixXcd& reference,
                          const Eigen::MatrixXcd& rebuilt) {
  Table t;
  t.header = {"t"};
  for (long id : g.site_ids) {
    const std::string tag = std::to_string(id);
    t.header.push_back("oracle_re_" + tag);
    t.header.push_back("oracle_im_" + tag);
    t.header.push_back("decomp_re_" + tag);
    t.header.push_back("decomp_im_" + tag);
  }
  t.header.push_back("norm");
  t.header.push_back("deviation");
  for (std::size_t c = 0; c < times.size(); ++c) {
    std::vector<std::string> row = {format_double(times[c])};
    double dev = 0.0;
    for (int i = 0; i < g.num_sites; ++i) {
      row.push_back(format_double(reference(i, c).real()));
      row.push_back(format_double(reference(i, c).imag()));
      row.push_back(format_double(rebuilt(i, c).real()));
      row.push_back(format_double(rebuilt(i, c).imag()));
      dev = std::max(dev, std::abs(reference(i, c) - rebuilt(i, c)));
    }
    row.push_back(format_double(reference.col(c).norm()));
    row.push_back(format_double(dev));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table flows_table(const ValidatedGraph& g, const FlowLayout& layout,
                         const std::vector<cplx>& samples,
                         const std::vector<Eigen::VectorXcd>& flows) {
  Table t;
  t.header = {"s_re", "s_im", "edge", "site", "flow_re", "flow_im"};
  for (std::size_t k = 0; k < samples.size(); ++k)
    for (int q = 0; q < layout.slots(); ++q)
      t.rows.push_back({format_double(samples[k].real()),
                        format_double(samples[k].imag()),
                        std::to_string(layout.slot_site[q][0]),
                        std::to_string(g.site_ids[layout.slot_site[q][1]]),
                        format_double(flows[k](q).real()),
                        format_double(flows[k](q).imag())});
  return t;
}

inline Table chart_table(const std::vector<ChartEntry>& entries) {
  Table t;
  t.header = {"mode_index", "lambda", "site", "edge",
              "u1_re", "u1_im", "u2_re", "u2_im",
              "chi1_re", "chi1_im", "chi2_re", "chi2_im",
              "C_re", "C_im", "phase_re", "phase_im"};
  for (const ChartEntry& e : entries)
    t.rows.push_back({std::to_string(e.mode), format_double(e.lambda),
                      std::to_string(e.site_id), std::to_string(e.edge),
                      format_double(e.u[0].real()), format_double(e.u[0].imag()),
                      format_double(e.u[1].real()), format_double(e.u[1].imag()),
                      format_double(e.chi[0].real()), format_double(e.chi[0].imag()),
                      format_double(e.chi[1].real()), format_double(e.chi[1].imag()),
                      format_double(e.inner_product.real()),
                      format_double(e.inner_product.imag()),
                      format_double(e.phase.real()), format_double(e.phase.imag())});
  return t;
}

inline Table efficiency_table(const ValidatedGraph& g, const EfficiencyReport& rep) {
  Table t;
  t.header = {"site", "eta", "noninterf", "interf"};
  for (long m = 0; m < rep.mode_weight.rows(); ++m)
    t.header.push_back("mode" + std::to_string(m + 1) + "_sq");
  for (int i = 0; i < g.num_sites; ++i) {
    std::vector<std::string> row = {std::to_string(g.site_ids[i]),
                                    format_double(rep.eta(i)),
                                    format_double(rep.noninterfering(i)),
                                    format_double(rep.interfering(i))};
    for (long m = 0; m < rep.mode_weight.rows(); ++m)
      row.push_back(format_double(rep.mode_weight(m, i)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table sweep_table(const SweepGrid& grid) {
  Table t;
  t.header = {"beta", "alpha", "eta2", "noninterf", "interf",
              "c2m1_sq", "c2m2_sq", "c2m3_sq"};
  for (const SweepCell& c : grid.cells)
    t.rows.push_back({format_double(c.beta), format_double(c.alpha),
                      format_double(c.eta2), format_double(c.noninterfering),
                      format_double(c.interfering),
                      format_double(c.mode_weight[0]),
                      format_double(c.mode_weight[1]),
                      format_double(c.mode_weight[2])});
  return t;
}

}  // namespace dimflow
