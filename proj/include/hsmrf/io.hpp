#pragma once

#include "hsmrf/error.hpp"
#include "hsmrf/evaluate.hpp"
#include "hsmrf/genealogy.hpp"
#include "hsmrf/grid.hpp"
#include "hsmrf/sampler.hpp"

#include "json.hpp"

#include <Eigen/Core>

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace hsmrf {

using json = nlohmann::json;

/// Shortest text that reads back to the same double (at most 17 digits).
inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

inline double parse_double(const std::string &s, const std::string &context) {
  const char *begin = s.c_str();
  char *end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw InputError(context + ": '" + s + "' is not a number");
  return v;
}

inline std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::ofstream open_output(const std::filesystem::path &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw RuntimeError("cannot write " + path.string());
  return out;
}

inline void write_text_file(const std::filesystem::path &path, const std::string &text) {
  auto out = open_output(path);
  out << text;
  if (!out)
    throw RuntimeError("failed writing " + path.string());
}

/// Comma-separated table with a header row. No quoting: fields never
/// contain commas here.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw InputError("csv: missing column '" + name + "'");
  }

  bool has_column(const std::string &name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
  }

  std::vector<double> numeric_column(const std::string &name) const {
    const std::size_t c = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto &r : rows) out.push_back(parse_double(r[c], "csv column " + name));
    return out;
  }
};

inline std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(std::istream &in) {
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw InputError("csv: row " + std::to_string(t.rows.size() + 1) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty())
    throw InputError("csv: empty file");
  return t;
}

inline CsvTable read_csv_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open " + path.string());
  return read_csv(in);
}

/// Posterior draws: iter, chain, theta_1..theta_H, eta, loglik, ll_1..ll_U.
inline void write_posterior_csv(std::ostream &os, const std::vector<PosteriorChain> &chains) {
  if (chains.empty())
    throw InputError("write_posterior_csv: no chains");
  const Eigen::Index H = chains.front().theta.cols();
  const Eigen::Index U = chains.front().pointwise.cols();
  os << "iter,chain";
  for (Eigen::Index h = 1; h <= H; ++h) os << ",theta_" << h;
  os << ",eta,loglik";
  for (Eigen::Index u = 1; u <= U; ++u) os << ",ll_" << u;
  os << '\n';
  for (const auto &c : chains) {
    for (Eigen::Index r = 0; r < c.theta.rows(); ++r) {
      os << r << ',' << c.chain;
      for (Eigen::Index h = 0; h < H; ++h) os << ',' << format_double(c.theta(r, h));
      os << ',' << format_double(std::sqrt(c.eta2[r])) << ',' << format_double(c.loglik[r]);
      for (Eigen::Index u = 0; u < U; ++u) os << ',' << format_double(c.pointwise(r, u));
      os << '\n';
    }
  }
}

inline std::vector<PosteriorChain> read_posterior_csv(std::istream &in) {
  const CsvTable t = read_csv(in);
  int H = 0, U = 0;
  for (const auto &name : t.header) {
    if (name.rfind("theta_", 0) == 0) ++H;
    else if (name.rfind("ll_", 0) == 0) ++U;
  }
  if (H == 0)
    throw InputError("posterior csv: no theta_ columns");
  const std::size_t c_chain = t.column_index("chain"), c_eta = t.column_index("eta"),
                    c_ll = t.column_index("loglik");
  std::vector<std::size_t> c_theta(H), c_pw(U);
  for (int h = 0; h < H; ++h) c_theta[h] = t.column_index("theta_" + std::to_string(h + 1));
  for (int u = 0; u < U; ++u) c_pw[u] = t.column_index("ll_" + std::to_string(u + 1));

  std::map<int, std::vector<std::size_t>> by_chain;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    by_chain[static_cast<int>(parse_double(t.rows[r][c_chain], "chain"))].push_back(r);

  std::vector<PosteriorChain> out;
  for (const auto &[id, rows] : by_chain) {
    PosteriorChain c;
    c.chain = id;
    const auto n = static_cast<Eigen::Index>(rows.size());
    c.theta.resize(n, H);
    c.eta2.resize(n);
    c.loglik.resize(n);
    c.pointwise.resize(n, U);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto &row = t.rows[rows[static_cast<std::size_t>(i)]];
      for (int h = 0; h < H; ++h) c.theta(i, h) = parse_double(row[c_theta[h]], "theta");
      const double eta = parse_double(row[c_eta], "eta");
      c.eta2[i] = eta * eta;
      c.loglik[i] = parse_double(row[c_ll], "loglik");
      for (int u = 0; u < U; ++u) c.pointwise(i, u) = parse_double(row[c_pw[u]], "ll");
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// True field on a grid: cell, start, end, theta.
inline void write_truth_csv(std::ostream &os, const Grid &grid, const Eigen::VectorXd &theta) {
  os << "cell,start,end,theta\n";
  for (int h = 0; h < grid.cells(); ++h)
    os << h + 1 << ',' << format_double(grid.boundaries[h]) << ',' << format_double(grid.boundaries[h + 1])
       << ',' << format_double(theta[h]) << '\n';
}

inline Eigen::VectorXd read_truth_csv(std::istream &in) {
  const auto col = read_csv(in).numeric_column("theta");
  return Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Eigen::Index>(col.size()));
}

/// Tip ages (backward time, 0 = most recent) as label,time.
inline void write_dates_csv(std::ostream &os, const Tree &tree) {
  os << "label,time\n";
  for (int i : tree.tips()) os << tree.nodes[i].label << ',' << format_double(tree.nodes[i].age) << '\n';
}

inline json grid_json(const Grid &g) {
  return {{"cells", g.cells()}, {"boundaries", g.boundaries}, {"final_cell_open", g.final_cell_open}};
}

inline json vector_json(const Eigen::VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json metrics_json(const Metrics &m) {
  json j = {{"MCIW", m.MCIW}, {"MASV", m.MASV}, {"p_eff", m.p_eff}, {"WAIC", m.WAIC}};
  if (m.MAD) j["MAD"] = *m.MAD;
  if (m.Envelope) j["Env"] = *m.Envelope;
  if (m.TMASV) j["TMASV"] = *m.TMASV;
  return j;
}

inline json summary_json(const FitSummary &s) {
  return {{"median", vector_json(s.median)},
          {"lower", vector_json(s.lower)},
          {"upper", vector_json(s.upper)},
          {"metrics", metrics_json(s.metrics)}};
}

} // namespace hsmrf
