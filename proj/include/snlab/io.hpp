// Text and JSON I/O: permutation-set files, function tables, and run reports.
//
// Set files are line based.  A line holds either a header `n=<k>`, a comment
// starting at `#`, or one permutation in image form ("3 1 2") or cycle form
// ("(1 3 2)").  The header must precede the first permutation; a caller-side
// n hint substitutes for a missing header but loses to a conflicting one.
//
// Function files are CSV: the same `n=<k>` header, then `rank,value` lines.
// Ranks may appear in any order; omitted ranks stay zero.
//
// Reports are JSON with a fixed split: everything time- or host-dependent
// lives in `header`, the payload lives in `body`.  Two runs with equal
// configuration must produce byte-identical bodies.
#pragma once

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "experiments.hpp"

namespace snlab {

using Json = nlohmann::ordered_json;

struct ParseError : std::runtime_error {
  int line = 0;

  ParseError(const std::string& msg, int line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

namespace detail {

inline std::string strip_line(const std::string& raw) {
  std::string s = raw;
  const std::size_t hash = s.find('#');
  if (hash != std::string::npos) s.erase(hash);
  const char* ws = " \t\r\n";
  const std::size_t a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

// Returns -1 when the line is not a header.
inline int parse_n_header(const std::string& line, int line_no) {
  if (line.rfind("n=", 0) != 0) return -1;
  const std::string tail = line.substr(2);
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(tail, &used);
  } catch (const std::exception&) {
    throw ParseError("bad n header '" + line + "'", line_no);
  }
  if (used != tail.size() || value < 1) throw ParseError("bad n header '" + line + "'", line_no);
  return value;
}

}  // namespace detail

inline RankSet load_set(const std::string& path, int n_hint = 0) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);

  int n = 0;
  RankSet out;
  bool have_elements = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::strip_line(raw);
    if (line.empty()) continue;

    const int header = detail::parse_n_header(line, line_no);
    if (header > 0) {
      if (have_elements) throw ParseError("n header after permutations", line_no);
      if (n_hint > 0 && header != n_hint)
        throw ParseError("n header " + std::to_string(header) + " conflicts with requested n " +
                             std::to_string(n_hint),
                         line_no);
      if (n > 0 && header != n) throw ParseError("duplicate n header disagrees", line_no);
      n = header;
      continue;
    }

    if (n == 0) {
      if (n_hint > 0)
        n = n_hint;
      else
        throw ParseError("permutation before n is known; add an 'n=<k>' header", line_no);
    }
    if (!have_elements) {
      out = RankSet::empty(n);
      have_elements = true;
    }
    try {
      out.insert(perm_rank(parse_perm(line, n)));
    } catch (const std::exception& err) {
      throw ParseError(std::string("bad permutation: ") + err.what(), line_no);
    }
  }
  if (!have_elements) out = RankSet::empty(n > 0 ? n : n_hint);
  return out;
}

inline void save_set(const std::string& path, const RankSet& A) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "n=" << A.n << "\n";
  const PermTable& T = perm_table(A.n);
  for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = A.bits.find_next(r))
    out << perm_to_string(T.get(static_cast<std::uint32_t>(r))) << "\n";
}

inline GroupFunction load_function(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);

  int n = 0;
  GroupFunction f;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::strip_line(raw);
    if (line.empty()) continue;

    const int header = detail::parse_n_header(line, line_no);
    if (header > 0) {
      if (n > 0) throw ParseError("duplicate n header", line_no);
      n = header;
      f = GroupFunction::zero(n);
      continue;
    }
    if (n == 0) throw ParseError("value before 'n=<k>' header", line_no);

    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected 'rank,value'", line_no);
    try {
      std::size_t used = 0;
      const std::string rank_part = line.substr(0, comma);
      const long long rank = std::stoll(rank_part, &used);
      if (used != rank_part.size()) throw std::invalid_argument("trailing junk after rank");
      if (rank < 0 || rank >= static_cast<long long>(f.v.size()))
        throw std::invalid_argument("rank out of range");
      const std::string value_part = line.substr(comma + 1);
      const double value = std::stod(value_part, &used);
      if (used != value_part.size()) throw std::invalid_argument("trailing junk after value");
      f.v[static_cast<std::size_t>(rank)] = value;
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& err) {
      throw ParseError(std::string("bad value line: ") + err.what(), line_no);
    }
  }
  if (n == 0) throw ParseError("function file is missing the 'n=<k>' header", 0);
  return f;
}

inline void save_function(const std::string& path, const GroupFunction& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "n=" << f.n << "\n";
  char buf[64];
  for (std::size_t r = 0; r < f.v.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g", r, f.v[r]);
    out << buf << "\n";
  }
}

inline std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

inline Json make_report(const std::string& kind) {
  Json report;
  report["header"] = Json{{"tool", "snlab"}, {"schema", 1}, {"kind", kind},
                          {"written_at", iso8601_utc_now()}};
  report["body"] = Json::object();
  return report;
}

// The body alone; what determinism checks compare across runs.
inline std::string report_body_str(const Json& report) { return report.at("body").dump(2); }

inline void save_report(const std::string& path, const Json& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << report.dump(2) << "\n";
}

inline Json load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  Json report;
  in >> report;
  return report;
}

}  // namespace snlab
