#pragma once

// Question/response data model and the newline-delimited JSON file formats.
// One object per line, UTF-8. Field names are the wire contract; see
// docs/schema.md. Sets are immutable after load and safe to share across
// threads.

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "roteval/common.hpp"

namespace roteval {

constexpr double kDefaultCanvas = 512.0;

// ---------------------------------------------------------------------------
// Orientation: the four quarter-turn rotations, clockwise degrees.

enum class Orientation : int { deg0 = 0, deg90 = 90, deg180 = 180, deg270 = 270 };

constexpr std::array<Orientation, 4> all_orientations() {
  return {Orientation::deg0, Orientation::deg90, Orientation::deg180, Orientation::deg270};
}

inline int to_degrees(Orientation phi) { return static_cast<int>(phi); }

inline Orientation orientation_from_degrees(int deg) {
  switch (deg) {
    case 0: return Orientation::deg0;
    case 90: return Orientation::deg90;
    case 180: return Orientation::deg180;
    case 270: return Orientation::deg270;
    default: fail(errc::unknown_orientation, "phi = " + std::to_string(deg));
  }
}

// Composition is addition mod 360.
inline Orientation compose(Orientation a, Orientation b) {
  return orientation_from_degrees((to_degrees(a) + to_degrees(b)) % 360);
}

inline int orientation_index(Orientation phi) { return to_degrees(phi) / 90; }

// ---------------------------------------------------------------------------
// BBox: axis-aligned box in continuous pixels on an S x S canvas, top-left
// origin, x rightward, y downward.

struct BBox {
  double x_min = 0;
  double y_min = 0;
  double width = 0;
  double height = 0;

  double x_max() const { return x_min + width; }
  double y_max() const { return y_min + height; }
  double area() const { return width * height; }
  std::pair<double, double> centroid() const { return {x_min + width / 2, y_min + height / 2}; }

  bool valid_on_canvas(double canvas) const {
    return width > 0 && height > 0 && x_min >= 0 && y_min >= 0 && x_max() <= canvas &&
           y_max() <= canvas;
  }

  bool operator==(const BBox&) const = default;
};

// ---------------------------------------------------------------------------
// Question taxonomy

enum class Category {
  scene_understanding,
  hallucination_detection,
  object_presence,
  attribute_recognition,
  object_localization,
  visual_grounding,
  object_counting,
  spatial_relationship,
  attribute_comparison,
  dynamic_temporal,
};

inline const std::array<std::pair<Category, const char*>, 10>& category_names() {
  static const std::array<std::pair<Category, const char*>, 10> names = {{
      {Category::scene_understanding, "scene_understanding"},
      {Category::hallucination_detection, "hallucination_detection"},
      {Category::object_presence, "object_presence"},
      {Category::attribute_recognition, "attribute_recognition"},
      {Category::object_localization, "object_localization"},
      {Category::visual_grounding, "visual_grounding"},
      {Category::object_counting, "object_counting"},
      {Category::spatial_relationship, "spatial_relationship"},
      {Category::attribute_comparison, "attribute_comparison"},
      {Category::dynamic_temporal, "dynamic_temporal"},
  }};
  return names;
}

inline const char* category_name(Category c) {
  for (const auto& [cat, name] : category_names())
    if (cat == c) return name;
  return "unknown";
}

// Unknown category strings are rejected, not coerced.
inline Category category_from_name(std::string_view s) {
  for (const auto& [cat, name] : category_names())
    if (s == name) return cat;
  fail(errc::unknown_category, std::string(s));
}

enum class TaskKind { mcq, vg };
enum class RotationSensitivity { invariant, sensitive };
enum class PairLayout { none, horizontal, vertical };

inline const char* task_kind_name(TaskKind k) { return k == TaskKind::mcq ? "mcq" : "vg"; }
inline const char* sensitivity_name(RotationSensitivity s) {
  return s == RotationSensitivity::invariant ? "invariant" : "sensitive";
}
inline const char* pair_layout_name(PairLayout l) {
  switch (l) {
    case PairLayout::none: return "none";
    case PairLayout::horizontal: return "horizontal";
    case PairLayout::vertical: return "vertical";
  }
  return "none";
}

// ---------------------------------------------------------------------------
// Question: one benchmark item. For MCQs, `label` is the correct choice
// index; for VG, `gt_box` is the ground-truth box and `choices` is empty.

struct Question {
  std::string id;
  Category category = Category::scene_understanding;
  TaskKind task_kind = TaskKind::mcq;
  RotationSensitivity rotation_sensitivity = RotationSensitivity::invariant;
  std::string text;
  std::vector<std::string> choices;
  int label = 0;
  BBox gt_box;
  std::string image_ref;
  PairLayout pair_layout = PairLayout::none;

  bool operator==(const Question&) const = default;
};

struct QuestionSet {
  double canvas = kDefaultCanvas;
  std::vector<Question> questions;

  std::size_t size() const { return questions.size(); }

  const Question* find(std::string_view id) const {
    for (const auto& q : questions)
      if (q.id == id) return &q;
    return nullptr;
  }
};

// One model answer to one realized question.
struct ResponseRecord {
  std::string question_id;
  Orientation phi = Orientation::deg0;
  std::string raw_text;

  bool operator==(const ResponseRecord&) const = default;
};

struct ResponseSet {
  std::vector<ResponseRecord> records;

  std::size_t size() const { return records.size(); }

  const ResponseRecord* find(std::string_view id, Orientation phi) const {
    for (const auto& r : records)
      if (r.question_id == id && r.phi == phi) return &r;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// JSONL encoding

namespace detail {

inline nlohmann::json question_to_json(const Question& q) {
  nlohmann::json j;
  j["id"] = q.id;
  j["category"] = category_name(q.category);
  j["task_kind"] = task_kind_name(q.task_kind);
  j["rotation_sensitivity"] = sensitivity_name(q.rotation_sensitivity);
  j["text"] = q.text;
  j["choices"] = q.choices;
  if (q.task_kind == TaskKind::mcq)
    j["label"] = q.label;
  else
    j["label"] = {q.gt_box.x_min, q.gt_box.y_min, q.gt_box.width, q.gt_box.height};
  j["image_ref"] = q.image_ref;
  j["pair_layout"] = pair_layout_name(q.pair_layout);
  return j;
}

inline Question question_from_json(const nlohmann::json& j, int line) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key))
      fail(errc::malformed_record, "line " + std::to_string(line) + ": missing field '" + key + "'");
    return j.at(key);
  };
  Question q;
  q.id = need("id").get<std::string>();
  q.category = category_from_name(need("category").get<std::string>());
  std::string kind = need("task_kind").get<std::string>();
  if (kind == "mcq")
    q.task_kind = TaskKind::mcq;
  else if (kind == "vg")
    q.task_kind = TaskKind::vg;
  else
    fail(errc::malformed_record, "line " + std::to_string(line) + ": task_kind '" + kind + "'");
  std::string sens = need("rotation_sensitivity").get<std::string>();
  if (sens == "invariant")
    q.rotation_sensitivity = RotationSensitivity::invariant;
  else if (sens == "sensitive")
    q.rotation_sensitivity = RotationSensitivity::sensitive;
  else
    fail(errc::malformed_record, "line " + std::to_string(line) + ": rotation_sensitivity '" + sens + "'");
  q.text = need("text").get<std::string>();
  if (j.contains("choices")) q.choices = j.at("choices").get<std::vector<std::string>>();
  const auto& label = need("label");
  if (q.task_kind == TaskKind::mcq) {
    if (!label.is_number_integer())
      fail(errc::malformed_record, "line " + std::to_string(line) + ": mcq label must be an index");
    q.label = label.get<int>();
  } else {
    if (!label.is_array() || label.size() != 4)
      fail(errc::malformed_record, "line " + std::to_string(line) + ": vg label must be [x,y,w,h]");
    q.gt_box = {label[0].get<double>(), label[1].get<double>(), label[2].get<double>(),
                label[3].get<double>()};
  }
  q.image_ref = need("image_ref").get<std::string>();
  std::string layout = need("pair_layout").get<std::string>();
  if (layout == "none")
    q.pair_layout = PairLayout::none;
  else if (layout == "horizontal")
    q.pair_layout = PairLayout::horizontal;
  else if (layout == "vertical")
    q.pair_layout = PairLayout::vertical;
  else
    fail(errc::malformed_record, "line " + std::to_string(line) + ": pair_layout '" + layout + "'");
  return q;
}

inline nlohmann::json parse_line(const std::string& line, int lineno) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(errc::malformed_record, "line " + std::to_string(lineno) + ": not a JSON object");
  return j;
}

}  // namespace detail

inline void validate_question(const Question& q, double canvas) {
  if (q.task_kind == TaskKind::mcq) {
    std::size_t n = q.choices.size();
    if (n < 2 || n > 4)
      fail(errc::choice_count_out_of_range, q.id + ": " + std::to_string(n) + " choices");
    if (q.label < 0 || static_cast<std::size_t>(q.label) >= n)
      fail(errc::malformed_record, q.id + ": label index " + std::to_string(q.label) +
                                       " out of range for " + std::to_string(n) + " choices");
  } else {
    if (!q.gt_box.valid_on_canvas(canvas))
      fail(errc::box_out_of_canvas, q.id + ": box outside " + std::to_string(canvas) + "px canvas");
  }
}

// Loads a question manifest. An optional first line {"canvas": S} sets the
// canvas side for the whole manifest; per-question overrides are not a thing.
inline QuestionSet load_manifest_stream(std::istream& in) {
  QuestionSet set;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(line, lineno);
    if (first && !j.contains("id")) {
      if (j.contains("canvas")) set.canvas = j.at("canvas").get<double>();
      first = false;
      continue;
    }
    first = false;
    Question q = detail::question_from_json(j, lineno);
    if (!seen.insert(q.id).second) fail(errc::duplicate_id, q.id);
    validate_question(q, set.canvas);
    set.questions.push_back(std::move(q));
  }
  return set;
}

inline QuestionSet load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open " + path);
  return load_manifest_stream(in);
}

inline void save_manifest_stream(const QuestionSet& set, std::ostream& out) {
  if (set.canvas != kDefaultCanvas) out << nlohmann::json{{"canvas", set.canvas}}.dump() << "\n";
  for (const auto& q : set.questions) out << detail::question_to_json(q).dump() << "\n";
}

inline void save_manifest(const QuestionSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot open " + path + " for writing");
  save_manifest_stream(set, out);
}

inline ResponseSet load_responses_stream(std::istream& in) {
  ResponseSet set;
  std::set<std::pair<std::string, int>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(line, lineno);
    ResponseRecord r;
    if (!j.contains("question_id") || !j.contains("phi") || !j.contains("raw_text"))
      fail(errc::malformed_record, "line " + std::to_string(lineno) + ": response needs question_id/phi/raw_text");
    r.question_id = j.at("question_id").get<std::string>();
    r.phi = orientation_from_degrees(j.at("phi").get<int>());
    r.raw_text = j.at("raw_text").get<std::string>();
    if (!seen.insert({r.question_id, to_degrees(r.phi)}).second)
      fail(errc::duplicate_response, r.question_id + " @ " + std::to_string(to_degrees(r.phi)));
    set.records.push_back(std::move(r));
  }
  return set;
}

inline ResponseSet load_responses(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open " + path);
  return load_responses_stream(in);
}

inline void save_responses_stream(const ResponseSet& set, std::ostream& out) {
  for (const auto& r : set.records) {
    nlohmann::json j;
    j["question_id"] = r.question_id;
    j["phi"] = to_degrees(r.phi);
    j["raw_text"] = r.raw_text;
    out << j.dump() << "\n";
  }
}

inline void save_responses(const ResponseSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot open " + path + " for writing");
  save_responses_stream(set, out);
}

// ---------------------------------------------------------------------------
// Coverage: a question is evaluable under the all-four rule only when all
// four orientations have a response.

struct CoverageEntry {
  std::string question_id;
  std::vector<Orientation> missing;
};

struct CoverageReport {
  std::vector<std::string> evaluable;        // all four orientations present
  std::vector<CoverageEntry> incomplete;     // anything missing

  bool is_evaluable(std::string_view id) const {
    for (const auto& e : evaluable)
      if (e == id) return true;
    return false;
  }
};

inline CoverageReport validate_coverage(const QuestionSet& questions, const ResponseSet& responses) {
  std::set<std::pair<std::string, int>> have;
  for (const auto& r : responses.records) have.insert({r.question_id, to_degrees(r.phi)});
  CoverageReport report;
  for (const auto& q : questions.questions) {
    CoverageEntry entry{q.id, {}};
    for (Orientation phi : all_orientations())
      if (!have.count({q.id, to_degrees(phi)})) entry.missing.push_back(phi);
    if (entry.missing.empty())
      report.evaluable.push_back(q.id);
    else
      report.incomplete.push_back(std::move(entry));
  }
  return report;
}

}  // namespace roteval
