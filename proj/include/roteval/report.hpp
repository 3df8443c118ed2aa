#pragma once

// CSV emission and the joined human-readable report. Statistics CSVs carry
// full-precision values (shortest round-trip form) so downstream stages can
// re-derive everything; the report rounds to 3 decimals at emission only.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roteval/aggregation.hpp"
#include "roteval/common.hpp"
#include "roteval/reliability.hpp"

namespace roteval {

// Shortest representation that round-trips the exact double.
inline std::string fmt_exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline std::string fmt3(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Stats CSV: group,n,RE,VE0,VEbar,MA,delta

struct StatsRow {
  std::string group;
  long n = 0;
  double re = 0, ve0 = 0, ve_bar = 0, ma = 0, delta = 0;
};

inline std::vector<StatsRow> stats_rows(const std::vector<ObservedStats>& stats) {
  std::vector<StatsRow> rows;
  for (const auto& s : stats)
    rows.push_back({s.group, s.n, s.re(), s.ve0(), s.ve_bar(), s.ma(), delta(s.ve0(), s.re())});
  if (auto macro = macro_average(stats))
    rows.push_back({macro->group, macro->n, macro->re, macro->ve0, macro->ve_bar, macro->ma,
                    delta(macro->ve0, macro->re)});
  return rows;
}

inline void write_stats_csv(const std::vector<StatsRow>& rows, std::ostream& out) {
  out << "group,n,RE,VE0,VEbar,MA,delta\n";
  for (const auto& r : rows)
    out << r.group << "," << r.n << "," << fmt_exact(r.re) << "," << fmt_exact(r.ve0) << ","
        << fmt_exact(r.ve_bar) << "," << fmt_exact(r.ma) << "," << fmt_exact(r.delta) << "\n";
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double(const std::string& s, int line) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    fail(errc::malformed_record, "csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace detail

inline std::vector<StatsRow> read_stats_csv(std::istream& in) {
  std::vector<StatsRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("group,", 0) == 0) continue;  // header
    auto f = detail::split_csv_line(line);
    if (f.size() < 6)
      fail(errc::malformed_record, "csv line " + std::to_string(lineno) + ": expected 7 columns");
    StatsRow r;
    r.group = f[0];
    r.n = std::strtol(f[1].c_str(), nullptr, 10);
    r.re = detail::parse_double(f[2], lineno);
    r.ve0 = detail::parse_double(f[3], lineno);
    r.ve_bar = detail::parse_double(f[4], lineno);
    r.ma = detail::parse_double(f[5], lineno);
    r.delta = f.size() > 6 ? detail::parse_double(f[6], lineno) : delta(r.ve0, r.re);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Solve CSV: group,classification,theta,r,g,a_adj,residual,discriminant

struct SolveRow {
  std::string group;
  SolveClass classification = SolveClass::no_solution;
  int n_solutions = 0;
  std::optional<ReliabilityParams> params;
  double residual = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> discriminant;
  bool inconsistent = false;  // rejected by the convexity guard
};

inline SolveRow solve_row_for(const std::string& group, double re, double ve_bar, double ma,
                              const SolveOptions& opts = {}, Selection sel = Selection::max_theta) {
  SolveRow row;
  row.group = group;
  try {
    SolveResult res = solve(re, ve_bar, ma, opts);
    row.classification = res.classification;
    row.n_solutions = static_cast<int>(res.solutions.size());
    row.discriminant = res.discriminant;
    if (res.classification == SolveClass::degenerate) return row;
    if (const Solution* s = res.selected(sel)) {
      row.params = s->params;
      row.residual = s->residual;
    }
  } catch (const error& e) {
    if (e.code() != errc::inconsistent_stats) throw;
    row.inconsistent = true;
  }
  return row;
}

inline std::string classification_label(const SolveRow& row) {
  if (row.inconsistent) return "Inconsistent";
  if (row.classification == SolveClass::multiple)
    return "Multiple(" + std::to_string(row.n_solutions) + ")";
  return solve_class_name(row.classification);
}

inline void write_solve_csv(const std::vector<SolveRow>& rows, std::ostream& out) {
  out << "group,classification,theta,r,g,a_adj,residual,discriminant\n";
  for (const auto& r : rows) {
    out << r.group << "," << classification_label(r) << ",";
    if (r.params) {
      out << fmt_exact(r.params->theta) << "," << fmt_exact(r.params->r) << ","
          << fmt_exact(r.params->g) << "," << fmt_exact(r.params->a_adj()) << ","
          << fmt_exact(r.residual) << ",";
    } else {
      out << "-,-,-,-,-,";
    }
    out << (r.discriminant ? fmt_exact(*r.discriminant) : "-") << "\n";
  }
}

inline std::vector<SolveRow> read_solve_csv(std::istream& in) {
  std::vector<SolveRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("group,", 0) == 0) continue;
    auto f = detail::split_csv_line(line);
    if (f.size() < 8)
      fail(errc::malformed_record, "csv line " + std::to_string(lineno) + ": expected 8 columns");
    SolveRow r;
    r.group = f[0];
    const std::string& c = f[1];
    if (c == "Inconsistent") {
      r.inconsistent = true;
    } else if (c == "Unique") {
      r.classification = SolveClass::unique;
    } else if (c.rfind("Multiple", 0) == 0) {
      r.classification = SolveClass::multiple;
    } else if (c == "Degenerate") {
      r.classification = SolveClass::degenerate;
    } else if (c == "Boundary") {
      r.classification = SolveClass::boundary;
    } else if (c == "Approximate") {
      r.classification = SolveClass::approximate;
    } else {
      r.classification = SolveClass::no_solution;
    }
    if (f[2] != "-") {
      ReliabilityParams p;
      p.theta = detail::parse_double(f[2], lineno);
      p.r = detail::parse_double(f[3], lineno);
      p.g = detail::parse_double(f[4], lineno);
      r.params = p;
      r.residual = detail::parse_double(f[6], lineno);
    }
    if (f[7] != "-") r.discriminant = detail::parse_double(f[7], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report: stats joined with solutions, 3-decimal rounding at emission.

struct ReportRow {
  StatsRow stats;
  const SolveRow* solution = nullptr;  // may be null when no solve row exists
};

inline std::vector<ReportRow> join_report(const std::vector<StatsRow>& stats,
                                          const std::vector<SolveRow>& solutions) {
  std::map<std::string, const SolveRow*> by_group;
  for (const auto& s : solutions) by_group[s.group] = &s;
  std::vector<ReportRow> rows;
  for (const auto& s : stats) {
    auto it = by_group.find(s.group);
    rows.push_back({s, it == by_group.end() ? nullptr : it->second});
  }
  return rows;
}

inline void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
  out << "group,n,RE,VE0,VEbar,MA,delta,theta,r,g,a_adj,classification\n";
  for (const auto& row : rows) {
    const StatsRow& s = row.stats;
    out << s.group << "," << s.n << "," << fmt3(s.re) << "," << fmt3(s.ve0) << ","
        << fmt3(s.ve_bar) << "," << fmt3(s.ma) << "," << fmt3(s.delta) << ",";
    if (row.solution && row.solution->params) {
      const auto& p = *row.solution->params;
      out << fmt3(p.theta) << "," << fmt3(p.r) << "," << fmt3(p.g) << "," << fmt3(p.a_adj());
    } else {
      out << "-,-,-,-";
    }
    out << "," << (row.solution ? classification_label(*row.solution) : "-") << "\n";
  }
}

inline std::string render_report_table(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  auto cell = [&](const std::string& s, int w) {
    out << std::setw(w) << s;
  };
  out << std::left;
  cell("group", 26);
  out << std::right;
  for (const char* h : {"n", "RE", "VE0", "VEbar", "MA", "delta", "theta", "r", "g", "A_adj"})
    cell(h, 9);
  cell("  class", 14);
  out << "\n";
  for (const auto& row : rows) {
    const StatsRow& s = row.stats;
    out << std::left;
    cell(s.group, 26);
    out << std::right;
    cell(std::to_string(s.n), 9);
    for (double v : {s.re, s.ve0, s.ve_bar, s.ma, s.delta}) cell(fmt3(v), 9);
    if (row.solution && row.solution->params) {
      const auto& p = *row.solution->params;
      for (double v : {p.theta, p.r, p.g, p.a_adj()}) cell(fmt3(v), 9);
    } else {
      for (int i = 0; i < 4; ++i) cell("-", 9);
    }
    cell(row.solution ? "  " + classification_label(*row.solution) : "  -", 14);
    out << "\n";
  }
  return out.str();
}

}  // namespace roteval
