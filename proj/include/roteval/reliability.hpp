#pragma once

// Mixture-model reliability solver.
//
// A model either knows a question (probability theta) or guesses; known
// questions are answered correctly with probability r, guessed ones with
// probability g, independently across the four orientations. The observable
// statistics are
//
//   RE     = theta r^4 + (1-theta) g^4        (all four correct)
//   VE-bar = theta r   + (1-theta) g          (mean per-rotation accuracy)
//   MA     = theta (1-r)^4 + (1-theta)(1-g)^4 (all four wrong)
//
// solve() inverts the system on the ordered domain g < VE-bar < r, where
// theta = (VE-bar - g)/(r - g). Eliminating theta turns the RE equation into
// a cubic in r that is strictly increasing on (g, inf), so r = R(g) is
// unique per g; substituting into the MA equation leaves a one-variable
// residual E(g) whose roots in (0, VE-bar) are scanned and bisected. A cubic
// interpolated through the denominator-cleared residual provides a
// discriminant-based uniqueness certificate, and an exhaustive grid oracle
// offers an independent cross-check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "roteval/common.hpp"

namespace roteval {

struct ForwardStats {
  double re = 0;
  double ve_bar = 0;
  double ma = 0;
};

inline double pow4(double x) {
  double x2 = x * x;
  return x2 * x2;
}

inline ForwardStats forward(double theta, double r, double g) {
  for (double v : {theta, r, g})
    if (!(v >= 0.0 && v <= 1.0)) fail(errc::input_out_of_range, "forward() expects [0,1] inputs");
  return {theta * pow4(r) + (1 - theta) * pow4(g),
          theta * r + (1 - theta) * g,
          theta * pow4(1 - r) + (1 - theta) * pow4(1 - g)};
}

struct ReliabilityParams {
  double theta = 0;
  double r = 0;
  double g = 0;

  double a_adj() const { return theta * r; }
};

inline double adjusted_accuracy(const ReliabilityParams& p) { return p.theta * p.r; }

// ---------------------------------------------------------------------------
// One-variable reduction

namespace detail {

// cubic(r) = r^3 + g r^2 + g^2 r + g^3, the cleared secant slope of x^4.
inline double secant_cubic(double r, double g) {
  return ((r + g) * r + g * g) * r + g * g * g;
}

// Unique root r > g of secant_cubic(r, g) = rhs, unbounded above. The cubic
// is increasing and convex on [g, inf) and cbrt(rhs) sits at or above the
// root, so Newton from there converges monotonically.
inline std::optional<double> solve_r_unbounded(double g, double re, double ve_bar) {
  double w = ve_bar - g;
  if (w <= 0) return std::nullopt;
  double rhs = (re - pow4(g)) / w;
  if (rhs <= 4 * g * g * g) return std::nullopt;  // no root above g
  double x = std::cbrt(rhs);
  double ftol = 1e-13 * std::max(1.0, std::abs(rhs));
  for (int i = 0; i < 60; ++i) {
    double f = secant_cubic(x, g) - rhs;
    if (std::abs(f) <= ftol) break;
    double df = (3 * x + 2 * g) * x + g * g;
    double next = std::max(g, x - f / df);
    if (next == x) break;
    x = next;
  }
  return x;
}

}  // namespace detail

// The unique r in (g, 1] with r^3 + g r^2 + g^2 r + g^3 = (re - g^4)/(ve_bar - g),
// found to |f(r)| <= 1e-12. nullopt when the right-hand side falls outside
// the cubic's range on (g, 1] in either direction.
inline std::optional<double> solve_r_given_g(double g, double re, double ve_bar) {
  if (!(g >= 0.0 && g < ve_bar))
    fail(errc::precondition_violated, "solve_r_given_g needs 0 <= g < ve_bar");
  double rhs = (re - pow4(g)) / (ve_bar - g);
  if (rhs > detail::secant_cubic(1.0, g)) return std::nullopt;  // above range at r = 1
  return detail::solve_r_unbounded(g, re, ve_bar);               // below-range gives nullopt
}

namespace detail {

// E(g): difference of the two secant slopes once r is eliminated. Uses the
// unbounded r-branch so the function stays continuous when the solution has
// r close to 1; admissibility (r <= 1) is re-checked at accepted roots.
inline std::optional<double> secant_residual_ext(double g, double re, double ve_bar, double ma) {
  std::optional<double> r = solve_r_unbounded(g, re, ve_bar);
  if (!r) return std::nullopt;
  double R = *r;
  return (pow4(1 - R) - pow4(1 - g)) / (R - g) - (ma - pow4(1 - g)) / (ve_bar - g);
}

}  // namespace detail

// E(g) on the (g, 1] branch; nullopt propagates NoRoot.
inline std::optional<double> secant_residual(double g, double re, double ve_bar, double ma) {
  if (!(g > 0.0 && g < ve_bar))
    fail(errc::precondition_violated, "secant_residual needs 0 < g < ve_bar");
  std::optional<double> r = solve_r_given_g(g, re, ve_bar);
  if (!r) return std::nullopt;
  double R = *r;
  return (pow4(1 - R) - pow4(1 - g)) / (R - g) - (ma - pow4(1 - g)) / (ve_bar - g);
}

// ---------------------------------------------------------------------------
// solve()

enum class SolveClass { unique, multiple, degenerate, no_solution, boundary, approximate };

inline const char* solve_class_name(SolveClass c) {
  switch (c) {
    case SolveClass::unique: return "Unique";
    case SolveClass::multiple: return "Multiple";
    case SolveClass::degenerate: return "Degenerate";
    case SolveClass::no_solution: return "NoSolution";
    case SolveClass::boundary: return "Boundary";
    case SolveClass::approximate: return "Approximate";
  }
  return "NoSolution";
}

struct Solution {
  ReliabilityParams params;
  double residual = 0;  // max abs residual over the three forward equations
};

enum class Selection { max_theta, fail };

struct SolveResult {
  SolveClass classification = SolveClass::no_solution;
  std::vector<Solution> solutions;                 // ordered representatives, g ascending
  std::optional<double> discriminant;              // uniqueness certificate when computed

  // Single-answer view. Multiple roots yield the max-theta representative
  // under Selection::max_theta and nothing under Selection::fail.
  const Solution* selected(Selection sel = Selection::max_theta) const {
    if (classification == SolveClass::unique || classification == SolveClass::approximate)
      return &solutions.front();
    if (classification == SolveClass::multiple && sel == Selection::max_theta) {
      const Solution* best = &solutions.front();
      for (const auto& s : solutions)
        if (s.params.theta > best->params.theta) best = &s;
      return best;
    }
    return nullptr;
  }
};

struct SolveOptions {
  int scan_nodes = 10000;          // uniform nodes for the E(g) sign scan
  double epsilon = 1e-9;           // open-interval guard at 0 and ve_bar
  double bisect_tol = 1e-12;       // bisection width on g
  double dedupe_tol = 1e-8;        // roots closer than this collapse
  double residual_tol = 1e-9;      // forward-residual acceptance, exact inputs
  double degenerate_tol = 1e-9;    // |re - ve^4|, |ma - (1-ve)^4| band
  double jensen_tol = 1e-9;        // InconsistentStats margin
  bool reconcile = false;          // accept 3-decimal-rounded inputs
  double reconcile_tol = 2e-3;     // residual acceptance in reconcile mode
  int oracle_resolution = 500;     // grid used by the reconcile fallback
  bool compute_certificate = true;
};

// ---------------------------------------------------------------------------
// Grid oracle: exhaustive search over ordered (theta, r, g), used both as a
// reconcile fallback and as an independent cross-check of solve().

struct OracleFit {
  ReliabilityParams params;
  double ssq = std::numeric_limits<double>::infinity();
  double residual_max = std::numeric_limits<double>::infinity();
  bool ambiguous = false;  // near-optimal cells spread beyond 2 grid steps
};

inline OracleFit oracle_grid_solve(double re, double ve_bar, double ma, int resolution = 500) {
  if (resolution < 100) fail(errc::precondition_violated, "oracle resolution must be >= 100");
  const int n = resolution;
  const double step = 1.0 / n;

  std::vector<double> x4(n + 1), u4(n + 1);
  for (int i = 0; i <= n; ++i) {
    double v = i * step;
    x4[i] = pow4(v);
    u4[i] = pow4(1 - v);
  }

  struct Best {
    double ssq = std::numeric_limits<double>::infinity();
    int it = 0, ir = 0, ig = 0;
  };

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned workers = std::min<unsigned>(hw, 8);
  std::vector<Best> bests(workers);
  auto run = [&](unsigned worker) {
    Best& best = bests[worker];
    for (int ig = static_cast<int>(worker); ig <= n; ig += static_cast<int>(workers)) {
      double g = ig * step;
      for (int ir = ig; ir <= n; ++ir) {
        double r = ir * step;
        double dre = x4[ir] - x4[ig];
        double dve = r - g;
        double dma = u4[ir] - u4[ig];
        for (int it = 0; it <= n; ++it) {
          double theta = it * step;
          double e1 = theta * dre + x4[ig] - re;
          double e2 = theta * dve + g - ve_bar;
          double e3 = theta * dma + u4[ig] - ma;
          double ssq = e1 * e1 + e2 * e2 + e3 * e3;
          if (ssq < best.ssq) best = {ssq, it, ir, ig};
        }
      }
    }
  };
  {
    std::vector<std::thread> pool;
    for (unsigned wkr = 1; wkr < workers; ++wkr) pool.emplace_back(run, wkr);
    run(0);
    for (auto& t : pool) t.join();
  }
  Best best;
  for (const auto& b : bests) {
    if (b.ssq < best.ssq ||
        (b.ssq == best.ssq && std::array{b.ig, b.ir, b.it} < std::array{best.ig, best.ir, best.it}))
      best = b;
  }

  OracleFit fit;
  fit.params = {best.it * step, best.ir * step, best.ig * step};
  fit.ssq = best.ssq;
  ForwardStats f = forward(fit.params.theta, fit.params.r, fit.params.g);
  fit.residual_max =
      std::max({std::abs(f.re - re), std::abs(f.ve_bar - ve_bar), std::abs(f.ma - ma)});

  // Ambiguity pass: any cell essentially tied with the optimum but far away
  // marks a ridge (the degenerate r = g case has a whole theta line of ties).
  const double tie = best.ssq + 1e-12;
  std::vector<char> amb(workers, 0);
  auto scan_amb = [&](unsigned worker) {
    for (int ig = static_cast<int>(worker); ig <= n && !amb[worker]; ig += static_cast<int>(workers)) {
      double g = ig * step;
      for (int ir = ig; ir <= n && !amb[worker]; ++ir) {
        double r = ir * step;
        double dre = x4[ir] - x4[ig];
        double dve = r - g;
        double dma = u4[ir] - u4[ig];
        for (int it = 0; it <= n; ++it) {
          double theta = it * step;
          double e1 = theta * dre + x4[ig] - re;
          double e2 = theta * dve + g - ve_bar;
          double e3 = theta * dma + u4[ig] - ma;
          if (e1 * e1 + e2 * e2 + e3 * e3 <= tie &&
              (std::abs(it - best.it) > 2 || std::abs(ir - best.ir) > 2 ||
               std::abs(ig - best.ig) > 2)) {
            amb[worker] = 1;
            break;
          }
        }
      }
    }
  };
  {
    std::vector<std::thread> pool;
    for (unsigned wkr = 1; wkr < workers; ++wkr) pool.emplace_back(scan_amb, wkr);
    scan_amb(0);
    for (auto& t : pool) t.join();
  }
  for (char a : amb) fit.ambiguous = fit.ambiguous || a != 0;
  return fit;
}

namespace detail {

// Interpolates the denominator-cleared residual (ve_bar - g) * E(g) through
// four Chebyshev nodes on the defined part of (0, ve_bar) and returns the
// cubic's discriminant 18abcd - 4b^3d + b^2c^2 - 4ac^3 - 27a^2d^2.
inline std::optional<double> certificate_discriminant(double re, double ve_bar, double ma,
                                                      double epsilon) {
  double lo = epsilon, hi = ve_bar - epsilon;
  if (hi <= lo) return std::nullopt;
  auto defined = [&](double g) { return secant_residual_ext(g, re, ve_bar, ma).has_value(); };
  if (!defined(lo)) return std::nullopt;
  if (!defined(hi)) {
    double a = lo, b = hi;
    for (int i = 0; i < 60; ++i) {
      double mid = 0.5 * (a + b);
      if (defined(mid))
        a = mid;
      else
        b = mid;
    }
    hi = a;
  }
  if (hi - lo < 16 * epsilon) return std::nullopt;

  std::array<double, 4> xs{}, ys{};
  for (int k = 0; k < 4; ++k) {
    double t = std::cos((2 * k + 1) * M_PI / 8.0);
    double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
    std::optional<double> e = secant_residual_ext(x, re, ve_bar, ma);
    if (!e) return std::nullopt;
    xs[k] = x;
    ys[k] = (ve_bar - x) * *e;
  }

  // Newton divided differences -> monomial coefficients (descending).
  std::array<double, 4> dd = ys;
  for (int level = 1; level < 4; ++level)
    for (int i = 3; i >= level; --i) dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
  std::array<double, 4> coef{};                // coef[0] g^3 + ... + coef[3]
  std::array<double, 4> basis{0, 0, 0, 1};     // running product (x - x0)...(x - x_{k-1})
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i < 4; ++i) coef[i] += dd[k] * basis[i];
    if (k < 3) {
      std::array<double, 4> next{};
      for (int i = 1; i < 4; ++i) next[i - 1] = basis[i];        // times x
      for (int i = 0; i < 4; ++i) next[i] -= xs[k] * basis[i];   // minus x_k
      basis = next;
    }
  }
  double a = coef[0], b = coef[1], c = coef[2], d = coef[3];
  return 18 * a * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * a * c * c * c -
         27 * a * a * d * d;
}

}  // namespace detail

inline SolveResult solve(double re, double ve_bar, double ma, const SolveOptions& opts = {}) {
  for (double v : {re, ve_bar, ma})
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      fail(errc::input_out_of_range, "solve() expects statistics in [0,1]");

  SolveResult result;

  // Trivial boundary cases: conditioning is ill-defined.
  if (ve_bar <= 0.0 || ve_bar >= 1.0 || ma <= 0.0 || ma >= 1.0) {
    result.classification = SolveClass::boundary;
    return result;
  }

  double ve4 = pow4(ve_bar);
  double ua4 = pow4(1 - ve_bar);

  // Degenerate case r = g: theta is unidentifiable. Under reconcile the band
  // widens to the rounding scale, since a 3-decimal-rounded degenerate row
  // sits up to ~2e-3 off the exact criterion.
  double degenerate_tol =
      opts.reconcile ? std::max(opts.degenerate_tol, opts.reconcile_tol) : opts.degenerate_tol;
  if (std::abs(re - ve4) <= degenerate_tol && std::abs(ma - ua4) <= degenerate_tol) {
    result.classification = SolveClass::degenerate;
    result.solutions.push_back(
        {{std::numeric_limits<double>::quiet_NaN(), ve_bar, ve_bar}, 0.0});
    return result;
  }

  // Jensen bounds: any genuine mixture satisfies re >= ve^4 and ma >= (1-ve)^4.
  bool jensen_violated = re < ve4 - opts.jensen_tol || ma < ua4 - opts.jensen_tol;
  if (jensen_violated && !opts.reconcile)
    fail(errc::inconsistent_stats, "statistics violate the convexity bounds");

  if (opts.compute_certificate)
    result.discriminant = detail::certificate_discriminant(re, ve_bar, ma, opts.epsilon);

  std::vector<double> roots;
  if (!jensen_violated) {
    // Scan E(g) on [0, ve_bar - eps]; g = 0 participates as an explicit node
    // because a root exactly at zero produces no interior sign change.
    const int K = std::max(16, opts.scan_nodes);
    const double lo = opts.epsilon, hi = ve_bar - opts.epsilon;
    std::vector<double> xs;
    xs.reserve(K + 1);
    xs.push_back(0.0);
    for (int i = 0; i < K; ++i) xs.push_back(lo + (hi - lo) * i / (K - 1));

    std::vector<std::optional<double>> es(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      es[i] = detail::secant_residual_ext(xs[i], re, ve_bar, ma);

    if (es[0] && std::abs(*es[0]) <= 1e-10) roots.push_back(0.0);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      if (!es[i] || !es[i + 1]) continue;
      double a = *es[i], b = *es[i + 1];
      if (a == 0.0) {
        if (xs[i] > 0) roots.push_back(xs[i]);
        continue;
      }
      if (a * b >= 0) continue;
      double glo = xs[i], ghi = xs[i + 1];
      bool alow = a < 0;
      while (ghi - glo > opts.bisect_tol) {
        double mid = 0.5 * (glo + ghi);
        std::optional<double> em = detail::secant_residual_ext(mid, re, ve_bar, ma);
        if (!em) break;  // definedness pocket; keep the bracket edge
        if ((*em < 0) == alow)
          glo = mid;
        else
          ghi = mid;
      }
      roots.push_back(0.5 * (glo + ghi));
    }
  }

  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [&](double a, double b) { return std::abs(a - b) <= opts.dedupe_tol; }),
              roots.end());

  double accept_tol = opts.reconcile ? opts.reconcile_tol : opts.residual_tol;
  for (double g : roots) {
    std::optional<double> rr = detail::solve_r_unbounded(g, re, ve_bar);
    if (!rr) continue;
    double r = *rr;
    if (r > 1.0 + 1e-9) continue;   // outside the model
    r = std::min(r, 1.0);
    if (!(r > ve_bar)) continue;    // ordered domain requires r > ve_bar > g
    double theta = std::clamp((ve_bar - g) / (r - g), 0.0, 1.0);
    ForwardStats f = forward(theta, r, g);
    double residual =
        std::max({std::abs(f.re - re), std::abs(f.ve_bar - ve_bar), std::abs(f.ma - ma)});
    if (residual <= accept_tol) result.solutions.push_back({{theta, r, g}, residual});
  }

  if (result.solutions.size() == 1)
    result.classification = SolveClass::unique;
  else if (result.solutions.size() > 1)
    result.classification = SolveClass::multiple;
  else
    result.classification = SolveClass::no_solution;

  // Reconcile fallback: rounded tables sometimes fall outside the model's
  // image; report the least-squares grid fit instead of failing.
  if (opts.reconcile && result.classification == SolveClass::no_solution) {
    OracleFit fit = oracle_grid_solve(re, ve_bar, ma, opts.oracle_resolution);
    result.classification = SolveClass::approximate;
    result.solutions.push_back({fit.params, fit.residual_max});
  }
  return result;
}

}  // namespace roteval
