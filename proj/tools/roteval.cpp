// roteval: rotation-consistent evaluation pipeline.
//
//   rotate     realize a manifest at the four orientations
//   collect    query a hosted model endpoint for responses
//   score      turn raw responses into per-orientation outcomes
//   aggregate  collapse outcomes into per-group statistics
//   solve      recover reliability parameters from statistics
//   report     join statistics and solutions into CSV + table
//   verify     cross-check solve() against the grid oracle

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "roteval/aggregation.hpp"
#include "roteval/collect.hpp"
#include "roteval/dataset.hpp"
#include "roteval/image.hpp"
#include "roteval/report.hpp"
#include "roteval/rotation.hpp"
#include "roteval/scoring.hpp"

namespace fs = std::filesystem;
using namespace roteval;

namespace {

std::vector<ConcreteQuestion> load_realized_files(const std::vector<std::string>& paths) {
  std::vector<ConcreteQuestion> all;
  for (const auto& p : paths) {
    auto part = load_realized(p);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

int cmd_rotate(const std::string& manifest_path, const std::string& out_dir, std::uint64_t seed,
               bool rotate_images) {
  QuestionSet set = load_manifest(manifest_path);
  fs::create_directories(out_dir);
  if (set.questions.empty())
    std::cerr << "warning: manifest is empty; writing empty realized files\n";

  // Physically rotate the referenced images where we can (binary PPM only;
  // other formats keep their original reference and are listed below).
  std::map<std::string, std::array<std::string, 4>> rotated_refs;
  std::set<std::string> unrotatable;
  if (rotate_images) {
    std::set<std::string> refs;
    for (const auto& q : set.questions) refs.insert(q.image_ref);
    for (const auto& ref : refs) {
      fs::path src(ref);
      if (to_lower(src.extension().string()) == ".ppm" && fs::exists(src)) {
        fs::create_directories(fs::path(out_dir) / "images");
        Image img = load_ppm(ref);
        std::array<std::string, 4> names;
        for (Orientation phi : all_orientations()) {
          fs::path dst = fs::path(out_dir) / "images" /
                         (src.stem().string() + "_rot" + std::to_string(to_degrees(phi)) + ".ppm");
          save_ppm(rotate_image(img, phi), dst.string());
          names[orientation_index(phi)] = dst.string();
        }
        rotated_refs[ref] = names;
      } else {
        unrotatable.insert(ref);
      }
    }
  }

  for (Orientation phi : all_orientations()) {
    std::vector<ConcreteQuestion> realized = realize_set(set, phi, seed);
    for (auto& c : realized) {
      auto it = rotated_refs.find(c.image_ref);
      if (it != rotated_refs.end()) c.image_ref = it->second[orientation_index(phi)];
    }
    fs::path out = fs::path(out_dir) / ("realized_" + std::to_string(to_degrees(phi)) + ".jsonl");
    save_realized(realized, out.string());
  }

  nlohmann::json cfg;
  cfg["manifest"] = manifest_path;
  cfg["seed"] = seed;
  cfg["canvas"] = set.canvas;
  cfg["questions"] = set.questions.size();
  std::ofstream cfg_out(fs::path(out_dir) / "run_config.json");
  cfg_out << cfg.dump(2) << "\n";

  if (!unrotatable.empty()) {
    std::cerr << "note: " << unrotatable.size()
              << " image reference(s) not rotated (missing or not .ppm); "
                 "realized manifests keep the original reference\n";
  }
  std::cout << "wrote 4 realized manifests (" << set.questions.size() << " records each) to "
            << out_dir << "\n";
  return 0;
}

int cmd_collect(const std::vector<std::string>& realized_paths, const EndpointDescriptor& ep,
                const std::string& out_path, const std::string& log_path) {
  auto realized = load_realized_files(realized_paths);
  CollectReport rep = collect_responses(realized, ep, out_path, log_path);
  std::cout << "requests issued: " << rep.requested << ", succeeded: " << rep.succeeded
            << ", skipped (already answered): " << rep.skipped << "\n";
  if (!rep.failures.empty()) {
    std::cerr << "failed items:\n";
    for (const auto& f : rep.failures)
      std::cerr << "  " << f.question_id << " @ " << to_degrees(f.phi) << ": " << f.reason << "\n";
  }
  return 0;
}

int cmd_score(const std::vector<std::string>& realized_paths, const std::string& responses_path,
              const std::string& out_path, const ScoreOptions& opts) {
  auto realized = load_realized_files(realized_paths);
  ResponseSet responses = load_responses(responses_path);
  auto outcomes = score_all(realized, responses, opts);
  save_outcomes(outcomes, out_path);
  long unparsed = 0;
  for (const auto& o : outcomes)
    if (o.detail == OutcomeDetail::unparsed) ++unparsed;
  std::cout << "scored " << outcomes.size() << " responses (" << unparsed << " unparseable)\n";
  return 0;
}

int cmd_aggregate(const std::string& outcomes_path, const std::string& manifest_path,
                  const std::string& out_path, const std::string& coverage_path) {
  auto outcomes = load_outcomes(outcomes_path);
  QuestionSet questions = load_manifest(manifest_path);
  std::vector<std::string> incomplete;
  auto rows = collect_question_outcomes(outcomes, &incomplete);
  auto stats = aggregate(rows, questions);
  std::ofstream out(out_path);
  if (!out) fail(errc::io_error, "cannot open " + out_path);
  write_stats_csv(stats_rows(stats), out);
  if (!incomplete.empty()) {
    std::cerr << incomplete.size() << " question(s) missing orientations were excluded\n";
    if (!coverage_path.empty()) {
      std::ofstream cov(coverage_path);
      for (const auto& id : incomplete) cov << id << "\n";
    }
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_solve(const std::string& stats_path, const std::string& out_path, const SolveOptions& opts,
              Selection sel) {
  std::ifstream in(stats_path);
  if (!in) fail(errc::io_error, "cannot open " + stats_path);
  auto stats = read_stats_csv(in);
  std::vector<SolveRow> rows;
  for (const auto& s : stats)
    rows.push_back(solve_row_for(s.group, s.re, s.ve_bar, s.ma, opts, sel));
  std::ofstream out(out_path);
  if (!out) fail(errc::io_error, "cannot open " + out_path);
  write_solve_csv(rows, out);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_report(const std::string& stats_path, const std::string& solutions_path,
               const std::string& out_path, const SolveOptions& opts, Selection sel) {
  std::ifstream in(stats_path);
  if (!in) fail(errc::io_error, "cannot open " + stats_path);
  auto stats = read_stats_csv(in);
  std::vector<SolveRow> solutions;
  if (!solutions_path.empty()) {
    std::ifstream sin(solutions_path);
    if (!sin) fail(errc::io_error, "cannot open " + solutions_path);
    solutions = read_solve_csv(sin);
  } else {
    for (const auto& s : stats)
      solutions.push_back(solve_row_for(s.group, s.re, s.ve_bar, s.ma, opts, sel));
  }
  auto rows = join_report(stats, solutions);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) fail(errc::io_error, "cannot open " + out_path);
    write_report_csv(rows, out);
  }
  std::cout << render_report_table(rows);
  return 0;
}

int cmd_verify(const std::string& stats_path, int resolution, const SolveOptions& opts) {
  std::ifstream in(stats_path);
  if (!in) fail(errc::io_error, "cannot open " + stats_path);
  auto stats = read_stats_csv(in);
  int disagreements = 0;
  double step = 1.0 / resolution;
  for (const auto& s : stats) {
    SolveRow row = solve_row_for(s.group, s.re, s.ve_bar, s.ma, opts);
    OracleFit fit = oracle_grid_solve(s.re, s.ve_bar, s.ma, resolution);
    std::cout << s.group << ": solve=" << classification_label(row);
    if (row.params)
      std::cout << " (theta " << fmt3(row.params->theta) << ", r " << fmt3(row.params->r) << ", g "
                << fmt3(row.params->g) << ")";
    std::cout << " | oracle (theta " << fmt3(fit.params.theta) << ", r " << fmt3(fit.params.r)
              << ", g " << fmt3(fit.params.g) << ")" << (fit.ambiguous ? " [ridge]" : "");
    bool point_solution = row.params.has_value() && !row.inconsistent &&
                          (row.classification == SolveClass::unique ||
                           row.classification == SolveClass::multiple);
    if (point_solution && !fit.ambiguous) {
      double d = std::max({std::abs(row.params->theta - fit.params.theta),
                           std::abs(row.params->r - fit.params.r),
                           std::abs(row.params->g - fit.params.g)});
      bool ok = d <= 2 * step + 1e-12;
      std::cout << (ok ? "  agree" : "  DISAGREE") << " (max diff " << fmt_exact(d) << ")";
      if (!ok) ++disagreements;
    } else if ((row.classification == SolveClass::degenerate) == fit.ambiguous) {
      std::cout << "  agree (non-unique)";
    }
    std::cout << "\n";
  }
  return disagreements == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rotation-consistent evaluation and reliability decomposition"};
  app.require_subcommand(1);
  app.set_config("--config");

  // rotate
  auto* rot = app.add_subcommand("rotate", "realize a manifest at 0/90/180/270 degrees");
  std::string manifest, out_dir = "out";
  std::uint64_t seed = 0;
  bool no_images = false;
  rot->add_option("--manifest", manifest, "question manifest (JSONL)")->required();
  rot->add_option("--out-dir", out_dir, "output directory");
  rot->add_option("--seed", seed, "shuffle seed recorded in every record");
  rot->add_flag("--no-images", no_images, "skip physical image rotation");

  // collect
  auto* col = app.add_subcommand("collect", "query a chat-completion endpoint");
  std::vector<std::string> realized_paths;
  std::string responses_out = "responses.jsonl", log_path;
  EndpointDescriptor ep;
  col->add_option("--realized", realized_paths, "realized manifests (repeatable)")->required();
  col->add_option("--out", responses_out, "response file (resumable)");
  col->add_option("--log", log_path, "request log (JSONL)");
  col->add_option("--endpoint", ep.base_url, "endpoint base URL")->required();
  col->add_option("--path", ep.path, "endpoint path");
  col->add_option("--model", ep.model, "model name")->required();
  col->add_option("--auth-env", ep.auth_env, "environment variable holding the bearer token");
  col->add_option("--max-concurrent", ep.max_concurrent, "bounded request concurrency");
  col->add_option("--retries", ep.retry_budget, "retry budget per item");
  col->add_option("--timeout", ep.timeout_sec, "per-request timeout (seconds)");

  // score
  auto* sco = app.add_subcommand("score", "score responses against realized manifests");
  std::string responses_path, outcomes_out = "outcomes.jsonl";
  ScoreOptions score_opts;
  std::string box_format = "corners", box_coords = "auto";
  sco->add_option("--realized", realized_paths, "realized manifests (repeatable)")->required();
  sco->add_option("--responses", responses_path, "response file")->required();
  sco->add_option("--out", outcomes_out, "outcome file");
  sco->add_option("--box-format", box_format, "corners | xywh")
      ->check(CLI::IsMember({"corners", "xywh"}));
  sco->add_option("--box-coords", box_coords, "auto | pixel | normalized")
      ->check(CLI::IsMember({"auto", "pixel", "normalized"}));
  sco->add_option("--canvas", score_opts.canvas, "canvas side in pixels");

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "collapse outcomes into group statistics");
  std::string outcomes_path, stats_out = "stats.csv", coverage_out;
  agg->add_option("--outcomes", outcomes_path, "outcome file")->required();
  agg->add_option("--manifest", manifest, "question manifest (for categories)")->required();
  agg->add_option("--out", stats_out, "stats CSV");
  agg->add_option("--coverage-out", coverage_out, "list of excluded question ids");

  // solve
  auto* sol = app.add_subcommand("solve", "recover reliability parameters");
  std::string stats_path, solutions_out = "solutions.csv", selection = "max-theta";
  SolveOptions solve_opts;
  sol->add_option("--stats", stats_path, "stats CSV")->required();
  sol->add_option("--out", solutions_out, "solutions CSV");
  sol->add_flag("--reconcile", solve_opts.reconcile, "accept 3-decimal-rounded inputs");
  sol->add_option("--residual-tol", solve_opts.residual_tol, "forward-residual acceptance");
  sol->add_option("--scan-nodes", solve_opts.scan_nodes, "E(g) scan resolution");
  sol->add_option("--select", selection, "max-theta | fail (multiple-root policy)")
      ->check(CLI::IsMember({"max-theta", "fail"}));

  // report
  auto* rep = app.add_subcommand("report", "joined CSV plus human-readable table");
  std::string report_out, solutions_in;
  rep->add_option("--stats", stats_path, "stats CSV")->required();
  rep->add_option("--solutions", solutions_in, "solutions CSV (solved inline when omitted)");
  rep->add_option("--out", report_out, "report CSV");
  rep->add_flag("--reconcile", solve_opts.reconcile, "accept 3-decimal-rounded inputs");
  rep->add_option("--select", selection, "max-theta | fail")
      ->check(CLI::IsMember({"max-theta", "fail"}));

  // verify
  auto* ver = app.add_subcommand("verify", "cross-check solve() against the grid oracle");
  int resolution = 500;
  ver->add_option("--stats", stats_path, "stats CSV")->required();
  ver->add_option("--resolution", resolution, "oracle grid steps per axis");
  ver->add_flag("--reconcile", solve_opts.reconcile, "accept 3-decimal-rounded inputs");

  CLI11_PARSE(app, argc, argv);

  try {
    Selection sel = selection == "fail" ? Selection::fail : Selection::max_theta;
    if (rot->parsed()) return cmd_rotate(manifest, out_dir, seed, !no_images);
    if (col->parsed()) return cmd_collect(realized_paths, ep, responses_out, log_path);
    if (sco->parsed()) {
      score_opts.box.format = box_format == "xywh" ? BoxFormat::xywh : BoxFormat::corners;
      score_opts.box.coords = box_coords == "pixel"        ? BoxCoords::pixel
                              : box_coords == "normalized" ? BoxCoords::normalized
                                                           : BoxCoords::auto_detect;
      return cmd_score(realized_paths, responses_path, outcomes_out, score_opts);
    }
    if (agg->parsed()) return cmd_aggregate(outcomes_path, manifest, stats_out, coverage_out);
    if (sol->parsed()) return cmd_solve(stats_path, solutions_out, solve_opts, sel);
    if (rep->parsed()) return cmd_report(stats_path, solutions_in, report_out, solve_opts, sel);
    if (ver->parsed()) return cmd_verify(stats_path, resolution, solve_opts);
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
