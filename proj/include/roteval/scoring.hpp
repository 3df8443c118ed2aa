#pragma once

// Turns raw model text into per-(question, orientation) correctness.
// Choice extraction is a deterministic rule table (no network, no fuzzy
// matching); an external extractor can be plugged in through ChoiceExtractor.
// Visual grounding uses centroid containment as the success criterion, with
// IoU available as a secondary metric.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roteval/common.hpp"
#include "roteval/dataset.hpp"
#include "roteval/rotation.hpp"

namespace roteval {

// ---------------------------------------------------------------------------
// MCQ extraction

namespace detail {

inline std::string normalize_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      if (!in_space && !out.empty()) out += ' ';
      in_space = true;
    } else {
      out += static_cast<char>(std::tolower(u));
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// Strips characters that commonly wrap a final answer before comparison.
inline std::string strip_punct(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::ispunct(static_cast<unsigned char>(c)) || c == '-') out += c;
  return out;
}

// A standalone option letter: bounded by non-alphanumerics on both sides.
inline std::optional<int> letter_at(std::string_view text, std::size_t pos, std::size_t n_choices) {
  if (pos >= text.size()) return std::nullopt;
  char c = text[pos];
  char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper < 'A' || upper >= static_cast<char>('A' + n_choices)) return std::nullopt;
  if (pos + 1 < text.size() && is_word_char(text[pos + 1])) return std::nullopt;
  if (pos > 0 && is_word_char(text[pos - 1])) return std::nullopt;
  return upper - 'A';
}

}  // namespace detail

// Matching precedence:
//   1. a standalone option letter A-D at the start of the reply or right
//      after the phrase "answer is";
//   2. the whole reply equals one choice, case/whitespace-normalized
//      (an optional "[the] answer is" prefix and trailing punctuation are
//      tolerated);
//   3. the normalized text of exactly one choice occurs as a substring.
// Anything else is unparseable and scores as incorrect downstream.
inline std::optional<int> extract_choice(const std::string& raw_text,
                                         const std::vector<std::string>& choices) {
  std::size_t n = choices.size();
  if (n < 2 || n > 4)
    fail(errc::precondition_violated, "extract_choice needs 2..4 choices");

  // rule 1: leading letter, skipping whitespace and opening brackets
  std::size_t start = 0;
  while (start < raw_text.size() &&
         (std::isspace(static_cast<unsigned char>(raw_text[start])) || raw_text[start] == '(' ||
          raw_text[start] == '[' || raw_text[start] == '*'))
    ++start;
  if (auto idx = detail::letter_at(raw_text, start, n)) return idx;

  std::string lower = to_lower(raw_text);
  constexpr std::string_view kAnswerIs = "answer is";
  for (std::size_t pos = lower.find(kAnswerIs); pos != std::string::npos;
       pos = lower.find(kAnswerIs, pos + 1)) {
    std::size_t after = pos + kAnswerIs.size();
    while (after < raw_text.size() &&
           (std::isspace(static_cast<unsigned char>(raw_text[after])) || raw_text[after] == ':' ||
            raw_text[after] == '(' || raw_text[after] == '*'))
      ++after;
    if (auto idx = detail::letter_at(raw_text, after, n)) return idx;
  }

  // rule 2: exact full-text match
  std::string norm = detail::normalize_ws(raw_text);
  std::string norm_stripped = detail::normalize_ws(detail::strip_punct(norm));
  for (std::string_view prefix : {"the answer is ", "answer is ", "answer "}) {
    if (norm_stripped.rfind(prefix, 0) == 0) {
      norm_stripped = norm_stripped.substr(prefix.size());
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::string c = detail::normalize_ws(detail::strip_punct(detail::normalize_ws(choices[i])));
    if (norm_stripped == c) return static_cast<int>(i);
  }

  // rule 3: unique substring
  std::optional<int> found;
  for (std::size_t i = 0; i < n; ++i) {
    std::string c = detail::normalize_ws(choices[i]);
    if (c.empty()) continue;
    if (norm.find(c) != std::string::npos) {
      if (found) return std::nullopt;  // ambiguous
      found = static_cast<int>(i);
    }
  }
  return found;
}

// Pluggable extractor interface; the default never performs network calls.
using ChoiceExtractor =
    std::function<std::optional<int>(const std::string&, const std::vector<std::string>&)>;

inline bool score_mcq(std::optional<int> extracted, int label_index) {
  return extracted.has_value() && *extracted == label_index;
}

// ---------------------------------------------------------------------------
// Visual grounding

enum class BoxFormat { corners, xywh };
enum class BoxCoords { auto_detect, pixel, normalized };

struct BoxParseOptions {
  BoxFormat format = BoxFormat::corners;
  BoxCoords coords = BoxCoords::auto_detect;
};

// Pulls the first four numbers out of free-form text ("[x1, y1, x2, y2]",
// "x1 y1 x2 y2", prose with numbers, ...). Values that all lie in [0, 1]
// are treated as normalized and scaled by the canvas side under auto_detect.
// The parsed box is clamped to the canvas; an empty clamp is unparseable.
inline std::optional<BBox> parse_bbox(const std::string& raw_text, double canvas,
                                      BoxParseOptions opts = {}) {
  std::vector<double> nums;
  std::size_t i = 0;
  while (i < raw_text.size() && nums.size() < 4) {
    char c = raw_text[i];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        ((c == '-' || c == '+' || c == '.') && i + 1 < raw_text.size() &&
         std::isdigit(static_cast<unsigned char>(raw_text[i + 1])))) {
      std::size_t consumed = 0;
      double v = 0;
      try {
        v = std::stod(raw_text.substr(i), &consumed);
      } catch (const std::exception&) {
        ++i;
        continue;
      }
      nums.push_back(v);
      i += consumed;
    } else {
      ++i;
    }
  }
  if (nums.size() < 4) return std::nullopt;

  bool normalized = opts.coords == BoxCoords::normalized;
  if (opts.coords == BoxCoords::auto_detect) {
    normalized = true;
    for (double v : nums)
      if (v < 0.0 || v > 1.0) normalized = false;
  }
  if (normalized)
    for (double& v : nums) v *= canvas;

  double x_min, y_min, w, h;
  if (opts.format == BoxFormat::corners) {
    if (nums[2] <= nums[0] || nums[3] <= nums[1]) return std::nullopt;
    x_min = nums[0];
    y_min = nums[1];
    w = nums[2] - nums[0];
    h = nums[3] - nums[1];
  } else {
    if (nums[2] <= 0 || nums[3] <= 0) return std::nullopt;
    x_min = nums[0];
    y_min = nums[1];
    w = nums[2];
    h = nums[3];
  }

  // clamp to canvas
  double x0 = std::clamp(x_min, 0.0, canvas);
  double y0 = std::clamp(y_min, 0.0, canvas);
  double x1 = std::clamp(x_min + w, 0.0, canvas);
  double y1 = std::clamp(y_min + h, 0.0, canvas);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

// Success criterion: the predicted box's centroid lies inside the ground
// truth box, boundary inclusive.
inline bool score_vg_centroid(const BBox& pred, const BBox& gt) {
  auto [cx, cy] = pred.centroid();
  return cx >= gt.x_min && cx <= gt.x_max() && cy >= gt.y_min && cy <= gt.y_max();
}

inline double iou(const BBox& a, const BBox& b) {
  double iw = std::min(a.x_max(), b.x_max()) - std::max(a.x_min, b.x_min);
  double ih = std::min(a.y_max(), b.y_max()) - std::max(a.y_min, b.y_min);
  if (iw <= 0 || ih <= 0) return 0.0;
  double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

// ---------------------------------------------------------------------------
// Outcomes

enum class OutcomeDetail { matched_choice, centroid_hit, centroid_miss, unparsed };

inline const char* outcome_detail_name(OutcomeDetail d) {
  switch (d) {
    case OutcomeDetail::matched_choice: return "matched_choice";
    case OutcomeDetail::centroid_hit: return "centroid_hit";
    case OutcomeDetail::centroid_miss: return "centroid_miss";
    case OutcomeDetail::unparsed: return "unparsed";
  }
  return "unparsed";
}

struct Outcome {
  std::string question_id;
  Orientation phi = Orientation::deg0;
  bool correct = false;
  OutcomeDetail detail = OutcomeDetail::unparsed;
  int matched_index = -1;      // MCQ, when detail == matched_choice
  double iou_value = 0.0;      // VG, when a box parsed

  bool operator==(const Outcome&) const = default;
};

struct ScoreOptions {
  BoxParseOptions box;
  double canvas = kDefaultCanvas;
  ChoiceExtractor extractor;  // defaults to extract_choice
};

inline Outcome score_response(const ConcreteQuestion& q, const ResponseRecord& r,
                              const ScoreOptions& opts = {}) {
  Outcome o;
  o.question_id = r.question_id;
  o.phi = r.phi;
  if (q.task_kind == TaskKind::mcq) {
    std::optional<int> idx = opts.extractor ? opts.extractor(r.raw_text, q.rendered_choices)
                                            : extract_choice(r.raw_text, q.rendered_choices);
    if (idx) {
      o.detail = OutcomeDetail::matched_choice;
      o.matched_index = *idx;
      o.correct = score_mcq(idx, q.label_index);
    } else {
      o.detail = OutcomeDetail::unparsed;  // unparseable counts as wrong
      o.correct = false;
    }
  } else {
    std::optional<BBox> pred = parse_bbox(r.raw_text, opts.canvas, opts.box);
    if (pred) {
      bool hit = score_vg_centroid(*pred, q.gt_box);
      o.detail = hit ? OutcomeDetail::centroid_hit : OutcomeDetail::centroid_miss;
      o.correct = hit;
      o.iou_value = iou(*pred, q.gt_box);
    } else {
      o.detail = OutcomeDetail::unparsed;
      o.correct = false;
    }
  }
  return o;
}

// Scores every response against its realized question. Output is ordered by
// (question_id, phi) so parallel callers merge deterministically.
inline std::vector<Outcome> score_all(const std::vector<ConcreteQuestion>& realized,
                                      const ResponseSet& responses,
                                      const ScoreOptions& opts = {}) {
  std::map<std::pair<std::string_view, int>, const ConcreteQuestion*> index;
  for (const auto& c : realized) index[{c.source_id, to_degrees(c.phi)}] = &c;
  std::vector<Outcome> out;
  out.reserve(responses.size());
  for (const auto& r : responses.records) {
    auto it = index.find({r.question_id, to_degrees(r.phi)});
    if (it == index.end()) continue;  // responses to unknown questions are ignored
    out.push_back(score_response(*it->second, r, opts));
  }
  std::sort(out.begin(), out.end(), [](const Outcome& a, const Outcome& b) {
    if (a.question_id != b.question_id) return a.question_id < b.question_id;
    return to_degrees(a.phi) < to_degrees(b.phi);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Outcome JSONL

inline void save_outcomes_stream(const std::vector<Outcome>& outcomes, std::ostream& out) {
  for (const auto& o : outcomes) {
    nlohmann::json j;
    j["question_id"] = o.question_id;
    j["phi"] = to_degrees(o.phi);
    j["correct"] = o.correct;
    j["detail"] = outcome_detail_name(o.detail);
    if (o.detail == OutcomeDetail::matched_choice) j["matched_index"] = o.matched_index;
    if (o.detail == OutcomeDetail::centroid_hit || o.detail == OutcomeDetail::centroid_miss)
      j["iou"] = o.iou_value;
    out << j.dump() << "\n";
  }
}

inline void save_outcomes(const std::vector<Outcome>& outcomes, const std::string& path) {
  std::ofstream f(path);
  if (!f) fail(errc::io_error, "cannot open " + path + " for writing");
  save_outcomes_stream(outcomes, f);
}

inline std::vector<Outcome> load_outcomes_stream(std::istream& in) {
  std::vector<Outcome> outcomes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(line, lineno);
    Outcome o;
    o.question_id = j.at("question_id").get<std::string>();
    o.phi = orientation_from_degrees(j.at("phi").get<int>());
    o.correct = j.at("correct").get<bool>();
    std::string d = j.value("detail", "unparsed");
    if (d == "matched_choice")
      o.detail = OutcomeDetail::matched_choice;
    else if (d == "centroid_hit")
      o.detail = OutcomeDetail::centroid_hit;
    else if (d == "centroid_miss")
      o.detail = OutcomeDetail::centroid_miss;
    else
      o.detail = OutcomeDetail::unparsed;
    o.matched_index = j.value("matched_index", -1);
    o.iou_value = j.value("iou", 0.0);
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

inline std::vector<Outcome> load_outcomes(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open " + path);
  return load_outcomes_stream(in);
}

}  // namespace roteval
