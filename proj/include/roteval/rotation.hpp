#pragma once

// Rotation engine: produces the four orientation variants of each question.
// Geometry follows the pixel map for a 90-degree clockwise turn of an S x S
// canvas, (x, y) -> (S - y, x); 180 and 270 are its compositions. Directional
// language and pair placeholders are remapped in lockstep with that map, so
// text and geometry never disagree. All operations are pure.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roteval/common.hpp"
#include "roteval/dataset.hpp"

namespace roteval {

// ---------------------------------------------------------------------------
// Geometry

inline std::pair<double, double> rotate_point(double x, double y, Orientation phi, double canvas) {
  if (x < 0 || y < 0 || x > canvas || y > canvas)
    fail(errc::point_out_of_canvas,
         "(" + std::to_string(x) + ", " + std::to_string(y) + ") on " + std::to_string(canvas));
  switch (phi) {
    case Orientation::deg0: return {x, y};
    case Orientation::deg90: return {canvas - y, x};
    case Orientation::deg180: return {canvas - x, canvas - y};
    case Orientation::deg270: return {y, canvas - x};
  }
  return {x, y};
}

// Axis-aligned hull of the four rotated corners. Quarter turns keep boxes
// axis-aligned, so area is preserved exactly and width/height swap at 90/270.
inline BBox rotate_bbox(const BBox& b, Orientation phi, double canvas) {
  if (!b.valid_on_canvas(canvas))
    fail(errc::box_out_of_canvas, "rotate_bbox: invalid input box");
  std::array<std::pair<double, double>, 4> corners = {{
      {b.x_min, b.y_min},
      {b.x_max(), b.y_min},
      {b.x_min, b.y_max()},
      {b.x_max(), b.y_max()},
  }};
  double xmin = canvas, ymin = canvas, xmax = 0, ymax = 0;
  for (auto [x, y] : corners) {
    auto [rx, ry] = rotate_point(x, y, phi, canvas);
    xmin = std::min(xmin, rx);
    ymin = std::min(ymin, ry);
    xmax = std::max(xmax, rx);
    ymax = std::max(ymax, ry);
  }
  return {xmin, ymin, xmax - xmin, ymax - ymin};
}

// ---------------------------------------------------------------------------
// Directional tokens. Eight ring tokens plus the fixed point "center".
// Ring order is clockwise; a 90-degree turn advances two ring slots
// (top-left -> top-right, top -> right, ...), matching the pixel map.

enum class DirectionalToken {
  top_left,
  top,
  top_right,
  right,
  bottom_right,
  bottom,
  bottom_left,
  left,
  center,
};

constexpr std::array<DirectionalToken, 9> all_directional_tokens() {
  return {DirectionalToken::top_left,     DirectionalToken::top,
          DirectionalToken::top_right,    DirectionalToken::right,
          DirectionalToken::bottom_right, DirectionalToken::bottom,
          DirectionalToken::bottom_left,  DirectionalToken::left,
          DirectionalToken::center};
}

inline DirectionalToken remap_token(DirectionalToken t, Orientation phi) {
  if (t == DirectionalToken::center) return t;
  int ring = static_cast<int>(t);
  int steps = 2 * (to_degrees(phi) / 90);
  return static_cast<DirectionalToken>((ring + steps) % 8);
}

inline const char* directional_token_name(DirectionalToken t) {
  switch (t) {
    case DirectionalToken::top_left: return "top-left";
    case DirectionalToken::top: return "top";
    case DirectionalToken::top_right: return "top-right";
    case DirectionalToken::right: return "right";
    case DirectionalToken::bottom_right: return "bottom-right";
    case DirectionalToken::bottom: return "bottom";
    case DirectionalToken::bottom_left: return "bottom-left";
    case DirectionalToken::left: return "left";
    case DirectionalToken::center: return "center";
  }
  return "center";
}

namespace detail {

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

struct TokenSpelling {
  const char* spelling;  // lower-case
  DirectionalToken token;
  bool spaced;  // "top left" rather than "top-left"
};

// Longest spellings first so "top-left" never matches as "top" + "left".
inline const std::array<TokenSpelling, 13>& token_spellings() {
  static const std::array<TokenSpelling, 13> table = {{
      {"bottom-right", DirectionalToken::bottom_right, false},
      {"bottom right", DirectionalToken::bottom_right, true},
      {"bottom-left", DirectionalToken::bottom_left, false},
      {"bottom left", DirectionalToken::bottom_left, true},
      {"top-right", DirectionalToken::top_right, false},
      {"top right", DirectionalToken::top_right, true},
      {"top-left", DirectionalToken::top_left, false},
      {"top left", DirectionalToken::top_left, true},
      {"bottom", DirectionalToken::bottom, false},
      {"center", DirectionalToken::center, false},
      {"right", DirectionalToken::right, false},
      {"left", DirectionalToken::left, false},
      {"top", DirectionalToken::top, false},
  }};
  return table;
}

inline std::string spelled(DirectionalToken t, bool spaced) {
  std::string s = directional_token_name(t);
  if (spaced)
    for (char& c : s)
      if (c == '-') c = ' ';
  return s;
}

}  // namespace detail

// Rewrites every whole-word directional token in `text` to its remapped
// form. Matching is case-insensitive and accepts hyphenated or two-word
// spellings; the replacement keeps the matched spelling style and a leading
// capital. Non-directional uses of these words are the manifest author's
// responsibility via the rotation_sensitivity flag.
inline std::string remap_directional_text(const std::string& text, Orientation phi) {
  if (phi == Orientation::deg0) return text;
  std::string lower = to_lower(text);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    bool boundary_before = (i == 0) || !detail::is_word_char(text[i - 1]);
    if (boundary_before) {
      for (const auto& entry : detail::token_spellings()) {
        std::string_view sp(entry.spelling);
        if (lower.compare(i, sp.size(), sp) != 0) continue;
        std::size_t end = i + sp.size();
        if (end < text.size() && detail::is_word_char(text[end])) continue;
        std::string repl = detail::spelled(remap_token(entry.token, phi), entry.spaced);
        if (std::isupper(static_cast<unsigned char>(text[i])))
          repl[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(repl[0])));
        out += repl;
        i = end;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out += text[i];
      ++i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair placeholders. A concatenated pair occupies fixed halves of the canvas;
// under rotation the rendered word follows each sub-image's new physical
// position. Accepts ASCII <img1>/<img2> and the angle-bracket spelling.

namespace detail {

inline const char* pair_word(PairLayout layout, int which, Orientation phi) {
  // position index: 0 = left, 1 = top, 2 = right, 3 = bottom
  static const char* words[4] = {"left", "top", "right", "bottom"};
  int pos0;  // img1 position at 0 degrees
  if (layout == PairLayout::horizontal)
    pos0 = 0;
  else
    pos0 = 1;
  // a quarter turn clockwise moves left->top->right->bottom->left
  int pos = (pos0 + to_degrees(phi) / 90) % 4;
  if (which == 2) pos = (pos + 2) % 4;  // img2 sits opposite img1
  return words[pos];
}

inline bool replace_all(std::string& text, const std::string& needle, const std::string& repl) {
  bool any = false;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), repl);
    pos += repl.size();
    any = true;
  }
  return any;
}

}  // namespace detail

inline bool has_pair_placeholders(const std::string& text) {
  return text.find("<img1>") != std::string::npos || text.find("<img2>") != std::string::npos ||
         text.find("⟨img1⟩") != std::string::npos ||
         text.find("⟨img2⟩") != std::string::npos;
}

inline std::string render_pair_placeholders(const std::string& text, PairLayout layout,
                                            Orientation phi) {
  if (!has_pair_placeholders(text)) return text;
  if (layout == PairLayout::none)
    fail(errc::placeholder_without_layout, "text has pair placeholders but pair_layout is none");
  std::string out = text;
  std::string word1 = std::string("the ") + detail::pair_word(layout, 1, phi) + " image";
  std::string word2 = std::string("the ") + detail::pair_word(layout, 2, phi) + " image";
  detail::replace_all(out, "<img1>", word1);
  detail::replace_all(out, "<img2>", word2);
  detail::replace_all(out, "⟨img1⟩", word1);
  detail::replace_all(out, "⟨img2⟩", word2);
  return out;
}

// ---------------------------------------------------------------------------
// Choice shuffling: a Fisher-Yates walk driven by splitmix64 seeded from
// (seed, question id, phi). Each orientation gets an independent order.

inline std::vector<int> shuffle_permutation(std::uint64_t seed, std::string_view question_id,
                                            Orientation phi, std::size_t n) {
  std::uint64_t state = seed ^ (fnv1a64(question_id) * 0x9e3779b97f4a7c15ULL) ^
                        (static_cast<std::uint64_t>(to_degrees(phi)) + 1);
  std::vector<int> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = splitmix64(state) % i;
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

// ---------------------------------------------------------------------------
// ConcreteQuestion: a Question realized at one orientation.

struct ConcreteQuestion {
  std::string source_id;
  Orientation phi = Orientation::deg0;
  Category category = Category::scene_understanding;
  TaskKind task_kind = TaskKind::mcq;
  RotationSensitivity rotation_sensitivity = RotationSensitivity::invariant;
  PairLayout pair_layout = PairLayout::none;
  std::string rendered_text;
  std::vector<std::string> rendered_choices;
  int label_index = -1;  // MCQ only
  BBox gt_box;           // VG only, transformed to phi
  std::string image_ref;
  std::uint64_t shuffle_seed = 0;

  bool operator==(const ConcreteQuestion&) const = default;
};

// Realizes one question at one orientation. Rotation-invariant questions keep
// their text and choice wording; rotation-sensitive ones get directional
// tokens remapped. Pair placeholders always render to the physical position
// of their sub-image. Choices are shuffled per (seed, id, phi) and the label
// index follows the correct answer through remap and shuffle.
inline ConcreteQuestion realize_question(const Question& q, Orientation phi, std::uint64_t seed,
                                         double canvas = kDefaultCanvas) {
  validate_question(q, canvas);
  ConcreteQuestion c;
  c.source_id = q.id;
  c.phi = phi;
  c.category = q.category;
  c.task_kind = q.task_kind;
  c.rotation_sensitivity = q.rotation_sensitivity;
  c.pair_layout = q.pair_layout;
  c.image_ref = q.image_ref;
  c.shuffle_seed = seed;

  bool sensitive = q.rotation_sensitivity == RotationSensitivity::sensitive;
  Orientation text_phi = sensitive ? phi : Orientation::deg0;

  // Remap directional words before rendering placeholders; the rendered
  // words are already at their physical position and must not rotate again.
  std::string text = sensitive ? remap_directional_text(q.text, phi) : q.text;
  c.rendered_text = render_pair_placeholders(text, q.pair_layout, text_phi);

  if (q.task_kind == TaskKind::mcq) {
    std::vector<std::string> remapped(q.choices.size());
    for (std::size_t i = 0; i < q.choices.size(); ++i) {
      std::string choice = sensitive ? remap_directional_text(q.choices[i], phi) : q.choices[i];
      remapped[i] = render_pair_placeholders(choice, q.pair_layout, text_phi);
    }
    std::vector<int> perm = shuffle_permutation(seed, q.id, phi, remapped.size());
    c.rendered_choices.resize(remapped.size());
    for (std::size_t slot = 0; slot < perm.size(); ++slot) {
      c.rendered_choices[slot] = remapped[perm[slot]];
      if (perm[slot] == q.label) c.label_index = static_cast<int>(slot);
    }
  } else {
    c.gt_box = rotate_bbox(q.gt_box, phi, canvas);
  }
  return c;
}

inline std::vector<ConcreteQuestion> realize_set(const QuestionSet& set, Orientation phi,
                                                 std::uint64_t seed) {
  std::vector<ConcreteQuestion> out;
  out.reserve(set.size());
  for (const auto& q : set.questions) out.push_back(realize_question(q, phi, seed, set.canvas));
  return out;
}

// ---------------------------------------------------------------------------
// Realized-manifest JSONL: the question record schema plus phi, shuffle_seed
// and label_index.

namespace detail {

inline nlohmann::json concrete_to_json(const ConcreteQuestion& c) {
  nlohmann::json j;
  j["id"] = c.source_id;
  j["category"] = category_name(c.category);
  j["task_kind"] = task_kind_name(c.task_kind);
  j["rotation_sensitivity"] = sensitivity_name(c.rotation_sensitivity);
  j["pair_layout"] = pair_layout_name(c.pair_layout);
  j["phi"] = to_degrees(c.phi);
  j["text"] = c.rendered_text;
  if (c.task_kind == TaskKind::mcq) {
    j["choices"] = c.rendered_choices;
    j["label_index"] = c.label_index;
  } else {
    j["choices"] = nlohmann::json::array();
    j["label"] = {c.gt_box.x_min, c.gt_box.y_min, c.gt_box.width, c.gt_box.height};
  }
  j["image_ref"] = c.image_ref;
  j["shuffle_seed"] = c.shuffle_seed;
  return j;
}

inline ConcreteQuestion concrete_from_json(const nlohmann::json& j, int line) {
  ConcreteQuestion c;
  if (!j.contains("id") || !j.contains("phi") || !j.contains("text"))
    fail(errc::malformed_record, "line " + std::to_string(line) + ": realized record needs id/phi/text");
  c.source_id = j.at("id").get<std::string>();
  c.phi = orientation_from_degrees(j.at("phi").get<int>());
  if (j.contains("category")) c.category = category_from_name(j.at("category").get<std::string>());
  std::string kind = j.value("task_kind", "mcq");
  c.task_kind = kind == "vg" ? TaskKind::vg : TaskKind::mcq;
  if (j.value("rotation_sensitivity", "invariant") == std::string("sensitive"))
    c.rotation_sensitivity = RotationSensitivity::sensitive;
  std::string layout = j.value("pair_layout", "none");
  c.pair_layout = layout == "horizontal" ? PairLayout::horizontal
                  : layout == "vertical" ? PairLayout::vertical
                                         : PairLayout::none;
  c.rendered_text = j.at("text").get<std::string>();
  if (j.contains("choices")) c.rendered_choices = j.at("choices").get<std::vector<std::string>>();
  if (c.task_kind == TaskKind::mcq) {
    c.label_index = j.value("label_index", -1);
  } else if (j.contains("label")) {
    const auto& label = j.at("label");
    if (!label.is_array() || label.size() != 4)
      fail(errc::malformed_record, "line " + std::to_string(line) + ": vg label must be [x,y,w,h]");
    c.gt_box = {label[0].get<double>(), label[1].get<double>(), label[2].get<double>(),
                label[3].get<double>()};
  }
  c.image_ref = j.value("image_ref", "");
  c.shuffle_seed = j.value("shuffle_seed", std::uint64_t{0});
  return c;
}

}  // namespace detail

inline void save_realized_stream(const std::vector<ConcreteQuestion>& items, std::ostream& out) {
  for (const auto& c : items) out << detail::concrete_to_json(c).dump() << "\n";
}

inline void save_realized(const std::vector<ConcreteQuestion>& items, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot open " + path + " for writing");
  save_realized_stream(items, out);
}

inline std::vector<ConcreteQuestion> load_realized_stream(std::istream& in) {
  std::vector<ConcreteQuestion> items;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    items.push_back(detail::concrete_from_json(detail::parse_line(line, lineno), lineno));
  }
  return items;
}

inline std::vector<ConcreteQuestion> load_realized(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open " + path);
  return load_realized_stream(in);
}

}  // namespace roteval
