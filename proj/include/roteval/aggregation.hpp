#pragma once

// Collapses per-orientation outcomes into the observed statistics the solver
// consumes: the all-four-correct rate (RE), the all-four-wrong rate (MA), the
// mean per-rotation accuracy (VE-bar) and the unrotated accuracy (VE@0).
// Counts are kept exact; fractions are computed on demand and rounded only
// when a report is written.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "roteval/common.hpp"
#include "roteval/dataset.hpp"
#include "roteval/scoring.hpp"

namespace roteval {

constexpr const char* kGroupOverallMicro = "overall_micro";
constexpr const char* kGroupOverallMacro = "overall_macro";

// Exactly one correctness bit per orientation.
struct QuestionOutcome {
  std::string question_id;
  std::array<bool, 4> per_phi{};  // indexed by orientation_index

  bool operator==(const QuestionOutcome&) const = default;
};

struct PerQuestionSummary {
  bool all_correct = false;
  bool all_wrong = false;
  double mean = 0.0;
  bool at_zero = false;
};

// A question counts for RE only when all four orientations are correct, and
// for MA only when all four are wrong.
inline PerQuestionSummary per_question(const std::array<bool, 4>& outcomes) {
  PerQuestionSummary s;
  int correct = 0;
  for (bool b : outcomes) correct += b ? 1 : 0;
  s.all_correct = correct == 4;
  s.all_wrong = correct == 0;
  s.mean = correct / 4.0;
  s.at_zero = outcomes[0];
  return s;
}

// Per-group observed statistics, stored as exact counts over n questions.
struct ObservedStats {
  std::string group;
  long n = 0;               // questions with all four orientations present
  long re_count = 0;        // all four correct
  long ma_count = 0;        // all four wrong
  long correct_total = 0;   // correct over all 4n (question, phi) pairs
  long ve0_count = 0;       // correct at 0 degrees

  double re() const { return n ? static_cast<double>(re_count) / n : 0.0; }
  double ma() const { return n ? static_cast<double>(ma_count) / n : 0.0; }
  double ve_bar() const { return n ? static_cast<double>(correct_total) / (4.0 * n) : 0.0; }
  double ve0() const { return n ? static_cast<double>(ve0_count) / n : 0.0; }
};

inline double delta(double ve0, double re) { return re - ve0; }

// ---------------------------------------------------------------------------

// Groups outcomes by question. Throws on duplicate (question, phi) pairs;
// questions missing any orientation are left out of the result and reported
// through `incomplete` (imputing them would bias the solver inputs).
inline std::vector<QuestionOutcome> collect_question_outcomes(
    const std::vector<Outcome>& outcomes, std::vector<std::string>* incomplete = nullptr) {
  std::map<std::string, std::pair<std::array<bool, 4>, std::array<bool, 4>>> acc;  // value, present
  for (const auto& o : outcomes) {
    auto& slot = acc[o.question_id];
    int idx = orientation_index(o.phi);
    if (slot.second[idx])
      fail(errc::duplicate_response, o.question_id + " @ " + std::to_string(to_degrees(o.phi)));
    slot.first[idx] = o.correct;
    slot.second[idx] = true;
  }
  std::vector<QuestionOutcome> out;
  out.reserve(acc.size());
  for (const auto& [id, slot] : acc) {
    bool complete = slot.second[0] && slot.second[1] && slot.second[2] && slot.second[3];
    if (!complete) {
      if (incomplete) incomplete->push_back(id);
      continue;
    }
    out.push_back({id, slot.first});
  }
  return out;
}

inline void accumulate(ObservedStats& stats, const QuestionOutcome& qo) {
  int correct = 0;
  for (bool b : qo.per_phi) correct += b ? 1 : 0;
  stats.n += 1;
  stats.re_count += correct == 4 ? 1 : 0;
  stats.ma_count += correct == 0 ? 1 : 0;
  stats.correct_total += correct;
  stats.ve0_count += qo.per_phi[0] ? 1 : 0;
}

// Aggregates per category plus a pooled overall row. Category lookup comes
// from the question set; questions absent from it raise EmptyGroup-adjacent
// malformed errors early rather than silently vanishing.
inline std::vector<ObservedStats> aggregate(const std::vector<QuestionOutcome>& per_question_rows,
                                            const QuestionSet& questions) {
  if (per_question_rows.empty()) fail(errc::empty_group, "no complete questions to aggregate");
  std::map<std::string, Category> category_of;
  for (const auto& q : questions.questions) category_of[q.id] = q.category;

  std::map<std::string, ObservedStats> groups;
  ObservedStats overall;
  overall.group = kGroupOverallMicro;
  for (const auto& qo : per_question_rows) {
    auto it = category_of.find(qo.question_id);
    if (it == category_of.end())
      fail(errc::malformed_record, "outcome for unknown question " + qo.question_id);
    std::string name = category_name(it->second);
    auto& stats = groups[name];
    if (stats.group.empty()) stats.group = name;
    accumulate(stats, qo);
    accumulate(overall, qo);
  }
  std::vector<ObservedStats> out;
  for (auto& [name, stats] : groups) out.push_back(stats);
  out.push_back(overall);
  return out;
}

// The macro average across categories: the headline aggregation. Plain mean
// of the per-category fractions, so it is not a count-backed row.
struct MacroStats {
  std::string group = kGroupOverallMacro;
  long n = 0;  // total questions covered
  double re = 0, ve_bar = 0, ma = 0, ve0 = 0;
};

inline std::optional<MacroStats> macro_average(const std::vector<ObservedStats>& per_category) {
  MacroStats m;
  int k = 0;
  for (const auto& s : per_category) {
    if (s.group == kGroupOverallMicro || s.group == kGroupOverallMacro) continue;
    m.re += s.re();
    m.ve_bar += s.ve_bar();
    m.ma += s.ma();
    m.ve0 += s.ve0();
    m.n += s.n;
    ++k;
  }
  if (k == 0) return std::nullopt;
  m.re /= k;
  m.ve_bar /= k;
  m.ma /= k;
  m.ve0 /= k;
  return m;
}

}  // namespace roteval
