#ifndef BII_IO_CSV_HPP
#define BII_IO_CSV_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bii/core.hpp"
#include "bii/mcmc/chain.hpp"
#include "bii/models/macroparasite.hpp"

namespace bii::io {

/// Write to a sibling temporary file, then rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    // from_chars rejects "inf"/"nan" spellings produced by some writers.
    if (s == "inf" || s == "Inf") return kInf;
    if (s == "-inf" || s == "-Inf") return kNegInf;
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    throw ValidationError(where + ": not a number: '" + s + "'");
  }
  return v;
}

/// Header row plus numeric rows.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ValidationError("missing CSV column '" + name + "'");
  }
};

inline Table read_table(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, path.string() + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ValidationError(path.string() + ": missing header row");
  return t;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Scalar observations: column `y`, or the only column.
inline Sample read_sample(const std::filesystem::path& path) {
  const Table t = read_table(path);
  const std::size_t c = t.header.size() == 1 ? 0 : t.column("y");
  Sample out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) out.push_back(r[c]);
  if (out.empty()) throw ValidationError(path.string() + ": no observations");
  return out;
}

inline std::string sample_csv(const Sample& y) {
  std::string s = "y\n";
  for (double v : y) s += format_double(v) + "\n";
  return s;
}

/// Host records with columns m,l,t.
inline HostData read_hosts(const std::filesystem::path& path) {
  const Table t = read_table(path);
  const std::size_t cm = t.column("m");
  const std::size_t cl = t.column("l");
  const std::size_t ct = t.column("t");
  HostData out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    HostRecord h{static_cast<int>(r[cm]), static_cast<int>(r[cl]), r[ct]};
    if (static_cast<double>(h.matured) != r[cm] || static_cast<double>(h.larvae) != r[cl])
      throw ValidationError(path.string() + ": m and l must be integers (row " + std::to_string(i + 1) + ")");
    if (h.matured < 0 || h.matured > h.larvae || !(h.time > 0.0))
      throw ValidationError(path.string() + ": need 0 <= m <= l and t > 0 (row " + std::to_string(i + 1) + ")");
    out.push_back(h);
  }
  if (out.empty()) throw ValidationError(path.string() + ": no hosts");
  return out;
}

inline std::string hosts_csv(const HostData& d) {
  std::string s = "m,l,t\n";
  for (const auto& h : d) s += std::to_string(h.matured) + "," + std::to_string(h.larvae) + "," + format_double(h.time) + "\n";
  return s;
}

/// Covariate design with columns l,t.
inline Design read_design(const std::filesystem::path& path) {
  const Table t = read_table(path);
  const std::size_t cl = t.column("l");
  const std::size_t ct = t.column("t");
  Design out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    DesignRow row{static_cast<int>(r[cl]), r[ct]};
    if (static_cast<double>(row.larvae) != r[cl] || row.larvae < 0 || !(row.time > 0.0))
      throw ValidationError(path.string() + ": need integer l >= 0 and t > 0 (row " + std::to_string(i + 1) + ")");
    out.push_back(row);
  }
  if (out.empty()) throw ValidationError(path.string() + ": empty design");
  return out;
}

inline std::string chain_csv(const Chain& chain) {
  std::string s = "iter,accepted";
  for (std::size_t j = 0; j < chain.dim(); ++j) s += ",theta_" + std::to_string(j + 1);
  for (std::size_t j = 0; j < chain.aux_dim(); ++j) s += ",aux_" + std::to_string(j + 1);
  s += ",rho_or_loglik\n";
  for (std::size_t r = 0; r < chain.size(); ++r) {
    s += std::to_string(chain.iteration(r));
    s += chain.accepted(r) ? ",1" : ",0";
    for (std::size_t j = 0; j < chain.dim(); ++j) s += "," + format_double(chain.theta(r, j));
    for (std::size_t j = 0; j < chain.aux_dim(); ++j) s += "," + format_double(chain.summary(r, j));
    s += "," + format_double(chain.cached(r)) + "\n";
  }
  return s;
}

/// Rebuild a chain from its CSV. Transition counts are taken from the
/// stored rows.
inline Chain read_chain(const std::filesystem::path& path) {
  const Table t = read_table(path);
  require(t.header.size() >= 3 && t.header[0] == "iter" && t.header[1] == "accepted" &&
              t.header.back() == "rho_or_loglik",
          path.string() + ": not a chain CSV (expected iter,accepted,...,rho_or_loglik)");
  std::size_t d = 0;
  std::size_t k = 0;
  for (std::size_t i = 2; i + 1 < t.header.size(); ++i) {
    if (t.header[i].rfind("theta_", 0) == 0) ++d;
    else if (t.header[i].rfind("aux_", 0) == 0) ++k;
    else throw ValidationError(path.string() + ": unexpected column '" + t.header[i] + "'");
  }
  require(d >= 1, path.string() + ": no theta columns");
  Chain chain(d, k);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    Theta th(static_cast<Eigen::Index>(d));
    Vector s(static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < d; ++j) th[static_cast<Eigen::Index>(j)] = row[2 + j];
    for (std::size_t j = 0; j < k; ++j) s[static_cast<Eigen::Index>(j)] = row[2 + d + j];
    const bool acc = row[1] != 0.0;
    chain.push(static_cast<std::size_t>(row[0]), th, acc, s, row.back());
    if (r > 0) chain.count(acc);
  }
  return chain;
}

}  // namespace bii::io

#endif  // BII_IO_CSV_HPP
