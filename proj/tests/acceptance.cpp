// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and runtime budgets are pinned in code next to each
// check. Run via ctest or directly: ./acceptance

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "roteval/aggregation.hpp"
#include "roteval/reliability.hpp"
#include "roteval/rotation.hpp"
#include "roteval/scoring.hpp"

using namespace roteval;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void criterion(const std::string& name, bool ok, double seconds, const std::string& note = "") {
  std::printf("[%s] %-34s (%6.2f s)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), seconds,
              note.empty() ? "" : "  ", note.c_str());
  if (!ok) ++g_failures;
}

// Reference rows: published per-category evaluation results (theta, r, g
// with their printed RE, VE and adjusted accuracy), self-consistent to the
// printed 3 decimals.
struct ReferenceRow {
  const char* label;
  double theta, r, g;
  double re, ve, a_adj;
};

const std::vector<ReferenceRow>& reference_rows() {
  static const std::vector<ReferenceRow> rows = {
      {"haiku_scene_underst", 0.853, 0.965, 0.278, 0.740, 0.864, 0.823},
      {"haiku_halluc_detect", 0.884, 0.986, 0.260, 0.835, 0.901, 0.871},
      {"haiku_object_presence", 0.627, 0.888, 0.119, 0.390, 0.601, 0.557},
      {"gpt4omini_scene", 0.940, 0.981, 0.197, 0.870, 0.934, 0.922},
      {"gemini25pro_obj_pres", 0.928, 0.981, 0.275, 0.860, 0.930, 0.910},
      {"gemma27b_obj_pres", 0.954, 0.983, 0.245, 0.890, 0.949, 0.937},
      {"internvl38b_scene", 0.982, 0.992, 0.140, 0.950, 0.976, 0.974},
      {"deepseekvl2_halluc", 0.780, 0.921, 0.169, 0.560, 0.755, 0.718},
      {"o3_obj_localization", 0.900, 0.965, 0.232, 0.780, 0.891, 0.868},
      {"internvl38b_attr", 0.860, 0.982, 0.208, 0.800, 0.874, 0.845},
      {"gemini15flash_count", 0.506, 0.842, 0.136, 0.255, 0.494, 0.426},
      {"gpt5mini_spatial", 0.951, 0.974, 0.153, 0.855, 0.934, 0.926},
      {"gpt5_spatial", 0.958, 0.957, 0.119, 0.805, 0.922, 0.918},
      {"haiku_attr_compare", 0.669, 0.979, 0.045, 0.615, 0.670, 0.655},
      {"gemini25pro_spatial", 0.943, 0.967, 0.231, 0.825, 0.925, 0.912},
      {"gemma27b_attr_compare", 0.670, 0.925, 0.172, 0.490, 0.676, 0.619},
      {"gemini15pro_grounding", 0.928, 0.789, 0.177, 0.360, 0.745, 0.732},
      {"llava13b_grounding", 0.836, 0.923, 0.346, 0.610, 0.829, 0.772},
  };
  return rows;
}

struct Triple {
  double theta, r, g;
};

Triple random_ordered(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    double theta = 0.05 + 0.90 * unit(rng);
    double a = unit(rng), b = unit(rng);
    double r = std::max(a, b), g = std::min(a, b);
    if (r - g < 0.05) continue;
    return {theta, r, g};
  }
}

// --------------------------------------------------------------------------

void check_forward_fidelity() {
  Timer t;
  bool ok = true;
  for (const auto& row : reference_rows()) {
    ForwardStats f = forward(row.theta, row.r, row.g);
    double a = adjusted_accuracy({row.theta, row.r, row.g});
    if (std::abs(f.re - row.re) > 0.0015 || std::abs(f.ve_bar - row.ve) > 0.0015 ||
        std::abs(a - row.a_adj) > 0.0015)
      ok = false;
  }
  double sec = t.seconds();
  ok = ok && sec < 1.0 && reference_rows().size() >= 10;
  criterion("forward_fidelity_paper_rows", ok, sec,
            std::to_string(reference_rows().size()) + " rows, tol 0.0015");
}

void check_inversion_paper_rows() {
  Timer total;
  bool ok = true;
  double worst_row_sec = 0;
  for (const auto& row : reference_rows()) {
    Timer rt;
    ForwardStats f = forward(row.theta, row.r, row.g);  // MA derived via forward()
    SolveResult res = solve(f.re, f.ve_bar, f.ma);
    worst_row_sec = std::max(worst_row_sec, rt.seconds());
    if (res.classification != SolveClass::unique) {
      ok = false;
      continue;
    }
    const auto& p = res.solutions.front().params;
    if (std::abs(p.theta - row.theta) > 2e-3 || std::abs(p.r - row.r) > 2e-3 ||
        std::abs(p.g - row.g) > 2e-3)
      ok = false;
  }
  ok = ok && worst_row_sec < 1.0;
  criterion("inversion_paper_rows", ok, total.seconds(), "Unique, tol 2e-3 per component");
}

void check_roundtrip_property() {
  Timer t;
  std::mt19937_64 rng(20240817);
  int tested = 0;
  double worst = 0;
  bool ok = true;
  while (tested < 1000) {
    Triple tr = random_ordered(rng);
    ForwardStats f = forward(tr.theta, tr.r, tr.g);
    if (!(f.ve_bar > 0 && f.ve_bar < 1 && f.ma > 0 && f.ma < 1)) continue;
    ++tested;
    SolveResult res = solve(f.re, f.ve_bar, f.ma);
    if (res.classification != SolveClass::unique) {
      ok = false;
      continue;
    }
    const auto& p = res.solutions.front().params;
    worst = std::max({worst, std::abs(p.theta - tr.theta), std::abs(p.r - tr.r),
                      std::abs(p.g - tr.g)});
  }
  double sec = t.seconds();
  ok = ok && worst <= 1e-6 && sec < 10.0;
  char note[96];
  std::snprintf(note, sizeof(note), "1000 triples, worst err %.2e", worst);
  criterion("roundtrip_property", ok, sec, note);
}

void check_oracle_equivalence() {
  Timer t;
  const int res_steps = 500;
  const double step = 1.0 / res_steps;
  std::mt19937_64 rng(555);
  std::uniform_int_distribution<int> grid(0, res_steps);
  bool ok = true;
  int done = 0;
  while (done < 100) {
    int it = 25 + (grid(rng) % 451);  // theta in [0.05, 0.95] on the lattice
    int ia = grid(rng), ib = grid(rng);
    int ir = std::max(ia, ib), ig = std::min(ia, ib);
    if (ir - ig < 25) continue;  // r - g >= 0.05
    double theta = it * step, r = ir * step, g = ig * step;
    ForwardStats f = forward(theta, r, g);
    if (!(f.ve_bar > 0 && f.ve_bar < 1 && f.ma > 0 && f.ma < 1)) continue;
    ++done;
    SolveResult sres = solve(f.re, f.ve_bar, f.ma);
    OracleFit fit = oracle_grid_solve(f.re, f.ve_bar, f.ma, res_steps);
    bool solve_point = sres.classification == SolveClass::unique;
    if (solve_point && !fit.ambiguous) {
      const auto& p = sres.solutions.front().params;
      double d = std::max({std::abs(p.theta - fit.params.theta), std::abs(p.r - fit.params.r),
                           std::abs(p.g - fit.params.g)});
      if (d > 2 * step + 1e-12) ok = false;
    } else if (solve_point != !fit.ambiguous) {
      // one side claims a point solution, the other a ridge: disagreement
      // unless solve reported degeneracy/multiplicity too
      if (sres.classification != SolveClass::degenerate &&
          sres.classification != SolveClass::multiple)
        ok = false;
    }
  }
  criterion("oracle_equivalence", ok, t.seconds(), "100 triples, resolution 500, 2 grid steps");
}

void check_degeneracy_detection() {
  Timer t;
  bool ok = true;
  for (double ve : {0.2, 0.5, 0.8}) {
    SolveResult res = solve(pow4(ve), ve, pow4(1 - ve));
    if (res.classification != SolveClass::degenerate) ok = false;
  }
  // and a nearby non-degenerate triple must not be classified degenerate
  ForwardStats f = forward(0.6, 0.9, 0.2);
  if (solve(f.re, f.ve_bar, f.ma).classification == SolveClass::degenerate) ok = false;
  criterion("degeneracy_detection", ok, t.seconds(), "VE in {0.2, 0.5, 0.8}");
}

void check_jensen_guard() {
  Timer t;
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    double ve = 0.3 + 0.65 * unit(rng);
    double margin = 2e-9 + 0.01 * unit(rng);
    double re = pow4(ve) - margin;
    if (re < 0) {
      --i;
      continue;
    }
    double ma = std::min(1.0 - 1e-6, pow4(1 - ve) + 0.01 * unit(rng));
    bool rejected = false;
    try {
      solve(re, ve, ma);
    } catch (const error& e) {
      rejected = e.code() == errc::inconsistent_stats;
    }
    if (!rejected) ok = false;
  }
  criterion("jensen_guard", ok, t.seconds(), "100 constructed violations");
}

void check_rotation_group_laws() {
  Timer t;
  bool ok = true;

  for (DirectionalToken tok : all_directional_tokens()) {
    DirectionalToken four = tok;
    for (int i = 0; i < 4; ++i) four = remap_token(four, Orientation::deg90);
    if (four != tok) ok = false;
    if (remap_token(tok, Orientation::deg180) !=
        remap_token(remap_token(tok, Orientation::deg90), Orientation::deg90))
      ok = false;
    if (remap_token(tok, Orientation::deg270) !=
        remap_token(remap_token(tok, Orientation::deg180), Orientation::deg90))
      ok = false;
  }

  const double S = 512.0;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> coord(0, 511);
  int checked = 0;
  while (checked < 1000) {
    int x0 = coord(rng), y0 = coord(rng), x1 = coord(rng), y1 = coord(rng);
    if (x1 <= x0 || y1 <= y0) continue;
    ++checked;
    BBox b{double(x0), double(y0), double(x1 - x0), double(y1 - y0)};
    BBox once = rotate_bbox(b, Orientation::deg90, S);
    if (rotate_bbox(once, Orientation::deg90, S) != rotate_bbox(b, Orientation::deg180, S))
      ok = false;
    if (rotate_bbox(rotate_bbox(b, Orientation::deg180, S), Orientation::deg90, S) !=
        rotate_bbox(b, Orientation::deg270, S))
      ok = false;
    BBox full = rotate_bbox(rotate_bbox(b, Orientation::deg180, S), Orientation::deg180, S);
    if (full != b) ok = false;
    for (Orientation phi : all_orientations()) {
      BBox r = rotate_bbox(b, phi, S);
      if (r.area() != b.area()) ok = false;  // exact on integer inputs
      auto [cx, cy] = b.centroid();
      auto [ex, ey] = rotate_point(cx, cy, phi, S);
      auto [ax, ay] = r.centroid();
      if (ax != ex || ay != ey) ok = false;
    }
  }
  criterion("rotation_group_laws", ok, t.seconds(), "9 tokens + 1000 boxes, exact");
}

void check_joint_rotation_invariance() {
  Timer t;
  const double S = 512.0;
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> unit(0.0, 512.0);
  bool ok = true;
  int done = 0;
  while (done < 1000) {
    double ax0 = unit(rng), ay0 = unit(rng), ax1 = unit(rng), ay1 = unit(rng);
    double bx0 = unit(rng), by0 = unit(rng), bx1 = unit(rng), by1 = unit(rng);
    if (ax1 <= ax0 || ay1 <= ay0 || bx1 <= bx0 || by1 <= by0) continue;
    ++done;
    BBox pred{ax0, ay0, ax1 - ax0, ay1 - ay0};
    BBox gt{bx0, by0, bx1 - bx0, by1 - by0};
    bool verdict = score_vg_centroid(pred, gt);
    double v = iou(pred, gt);
    for (Orientation phi : all_orientations()) {
      BBox rp = rotate_bbox(pred, phi, S);
      BBox rg = rotate_bbox(gt, phi, S);
      if (score_vg_centroid(rp, rg) != verdict) ok = false;
      if (std::abs(iou(rp, rg) - v) > 1e-12) ok = false;
    }
  }
  criterion("joint_rotation_metric_invariance", ok, t.seconds(),
            "1000 pairs x 4 phi, IoU tol 1e-12");
}

void check_iou_oracle() {
  Timer t;
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> pos(0, 126);
  std::uniform_int_distribution<int> side(1, 100);
  bool ok = true;
  int done = 0;
  while (done < 1000) {
    int ax = pos(rng), ay = pos(rng), aw = side(rng), ah = side(rng);
    int bx = pos(rng), by = pos(rng), bw = side(rng), bh = side(rng);
    if (ax + aw > 128 || ay + ah > 128 || bx + bw > 128 || by + bh > 128) continue;
    ++done;
    BBox a{double(ax), double(ay), double(aw), double(ah)};
    BBox b{double(bx), double(by), double(bw), double(bh)};

    // unit-grid brute force: count cells whose centers land in each region
    long inter = 0, uni = 0;
    for (int x = 0; x < 128; ++x)
      for (int y = 0; y < 128; ++y) {
        double cx = x + 0.5, cy = y + 0.5;
        bool in_a = cx >= a.x_min && cx < a.x_max() && cy >= a.y_min && cy < a.y_max();
        bool in_b = cx >= b.x_min && cx < b.x_max() && cy >= b.y_min && cy < b.y_max();
        if (in_a && in_b) ++inter;
        if (in_a || in_b) ++uni;
      }
    double brute = uni ? double(inter) / uni : 0.0;
    double iw = std::min(a.x_max(), b.x_max()) - std::max(a.x_min, b.x_min);
    double ih = std::min(a.y_max(), b.y_max()) - std::max(a.y_min, b.y_min);
    double union_area = a.area() + b.area() - std::max(0.0, iw) * std::max(0.0, ih);
    if (std::abs(iou(a, b) - brute) > 2.0 / union_area) ok = false;
  }
  criterion("iou_oracle", ok, t.seconds(), "1000 integer pairs, tol 2/union");
}

void check_end_to_end_recovery() {
  Timer t;
  const double theta = 0.6, r = 0.95, g = 0.25;

  QuestionSet manifest;
  for (int i = 0; i < 10000; ++i) {
    Question q;
    q.id = "q" + std::to_string(i);
    q.category = static_cast<Category>(i % 10);
    q.task_kind = TaskKind::mcq;
    q.rotation_sensitivity = (i % 10 == static_cast<int>(Category::spatial_relationship))
                                 ? RotationSensitivity::sensitive
                                 : RotationSensitivity::invariant;
    q.text = q.rotation_sensitivity == RotationSensitivity::sensitive
                 ? "Which corner holds the marker?"
                 : "Pick the dominant surface.";
    q.choices = q.rotation_sensitivity == RotationSensitivity::sensitive
                    ? std::vector<std::string>{"top-left", "top-right", "bottom-left",
                                               "bottom-right"}
                    : std::vector<std::string>{"asphalt", "grass", "water", "roof"};
    q.label = i % 4;
    q.image_ref = "none.png";
    manifest.questions.push_back(std::move(q));
  }

  // scripted responder: known/unknown drawn once per question, correctness
  // drawn independently per rotation
  std::mt19937_64 rng(90210);
  std::bernoulli_distribution knows(theta);
  std::map<std::string, bool> known;
  for (const auto& q : manifest.questions) known[q.id] = knows(rng);

  std::vector<ConcreteQuestion> realized;
  ResponseSet responses;
  for (Orientation phi : all_orientations()) {
    auto batch = realize_set(manifest, phi, 17);
    for (const auto& c : batch) {
      std::bernoulli_distribution correct(known[c.source_id] ? r : g);
      int pick = correct(rng)
                     ? c.label_index
                     : (c.label_index + 1) % static_cast<int>(c.rendered_choices.size());
      responses.records.push_back({c.source_id, c.phi, std::string(1, char('A' + pick))});
    }
    realized.insert(realized.end(), batch.begin(), batch.end());
  }

  auto outcomes = score_all(realized, responses);
  auto stats = aggregate(collect_question_outcomes(outcomes), manifest);
  const ObservedStats* overall = nullptr;
  for (const auto& s : stats)
    if (s.group == kGroupOverallMicro) overall = &s;

  bool ok = overall != nullptr && outcomes.size() == 40000;
  if (ok) {
    SolveResult res = solve(overall->re(), overall->ve_bar(), overall->ma());
    ok = res.classification == SolveClass::unique;
    if (ok) {
      const auto& p = res.solutions.front().params;
      ok = std::abs(p.theta - theta) <= 0.02 && std::abs(p.r - r) <= 0.02 &&
           std::abs(p.g - g) <= 0.02;
    }
  }
  double sec = t.seconds();
  ok = ok && sec < 30.0;
  criterion("end_to_end_statistical_recovery", ok, sec, "10k questions, planted (0.6,0.95,0.25)");
}

void check_aggregation_identity() {
  Timer t;
  PerQuestionSummary s = per_question({true, true, true, false});
  bool ok = !s.all_correct && !s.all_wrong && s.mean == 0.75 && s.at_zero;

  // and through the aggregate path: the lone question contributes 0/0/0.75
  QuestionSet qs;
  Question q;
  q.id = "q1";
  q.category = Category::object_localization;
  q.task_kind = TaskKind::mcq;
  q.choices = {"a", "b"};
  q.label = 0;
  q.image_ref = "x";
  qs.questions.push_back(q);
  std::vector<Outcome> outcomes;
  for (Orientation phi : all_orientations()) {
    Outcome o;
    o.question_id = "q1";
    o.phi = phi;
    o.correct = phi != Orientation::deg270;
    outcomes.push_back(o);
  }
  auto stats = aggregate(collect_question_outcomes(outcomes), qs);
  ok = ok && stats[0].re() == 0.0 && stats[0].ma() == 0.0 && stats[0].ve_bar() == 0.75;
  criterion("aggregation_identity", ok, t.seconds(), "(T,T,T,F) -> RE 0, MA 0, VE-bar 0.75");
}

}  // namespace

int main() {
  std::printf("acceptance suite\n----------------\n");
  check_forward_fidelity();
  check_inversion_paper_rows();
  check_roundtrip_property();
  check_oracle_equivalence();
  check_degeneracy_detection();
  check_jensen_guard();
  check_rotation_group_laws();
  check_joint_rotation_invariance();
  check_iou_oracle();
  check_end_to_end_recovery();
  check_aggregation_identity();
  std::printf("----------------\n%s (%d failure%s)\n", g_failures == 0 ? "ALL PASS" : "FAILED",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
