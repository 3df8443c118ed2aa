#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "roteval/aggregation.hpp"

using namespace roteval;

namespace {

Outcome outcome(const std::string& id, Orientation phi, bool correct) {
  Outcome o;
  o.question_id = id;
  o.phi = phi;
  o.correct = correct;
  o.detail = correct ? OutcomeDetail::matched_choice : OutcomeDetail::unparsed;
  return o;
}

std::vector<Outcome> outcomes_for(const std::string& id, std::array<bool, 4> bits) {
  std::vector<Outcome> v;
  for (Orientation phi : all_orientations())
    v.push_back(outcome(id, phi, bits[orientation_index(phi)]));
  return v;
}

QuestionSet tiny_question_set(const std::vector<std::pair<std::string, Category>>& items) {
  QuestionSet set;
  for (const auto& [id, cat] : items) {
    Question q;
    q.id = id;
    q.category = cat;
    q.task_kind = TaskKind::mcq;
    q.choices = {"a", "b"};
    q.label = 0;
    q.image_ref = "x";
    set.questions.push_back(q);
  }
  return set;
}

}  // namespace

TEST_CASE("per_question: the all-four rule") {
  PerQuestionSummary s = per_question({true, true, true, true});
  CHECK(s.all_correct);
  CHECK_FALSE(s.all_wrong);
  CHECK(s.mean == 1.0);
  CHECK(s.at_zero);

  // three right, one wrong: no RE credit, no MA, VE-bar 0.75
  s = per_question({true, true, true, false});
  CHECK_FALSE(s.all_correct);
  CHECK_FALSE(s.all_wrong);
  CHECK(s.mean == 0.75);
  CHECK(s.at_zero);

  s = per_question({false, false, false, false});
  CHECK_FALSE(s.all_correct);
  CHECK(s.all_wrong);
  CHECK(s.mean == 0.0);
  CHECK_FALSE(s.at_zero);
}

TEST_CASE("collect_question_outcomes: incomplete questions are excluded and reported") {
  std::vector<Outcome> all = outcomes_for("q1", {true, true, false, true});
  all.push_back(outcome("q2", Orientation::deg0, true));  // missing three orientations
  std::vector<std::string> incomplete;
  auto rows = collect_question_outcomes(all, &incomplete);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].question_id == "q1");
  REQUIRE(incomplete.size() == 1);
  CHECK(incomplete[0] == "q2");
}

TEST_CASE("collect_question_outcomes: duplicate (question, phi) throws") {
  std::vector<Outcome> all = {outcome("q1", Orientation::deg0, true),
                              outcome("q1", Orientation::deg0, false)};
  CHECK_THROWS_AS(collect_question_outcomes(all), error);
}

TEST_CASE("aggregate: one all-correct and one all-wrong question") {
  QuestionSet qs = tiny_question_set(
      {{"q1", Category::scene_understanding}, {"q2", Category::scene_understanding}});
  std::vector<Outcome> all = outcomes_for("q1", {true, true, true, true});
  auto more = outcomes_for("q2", {false, false, false, false});
  all.insert(all.end(), more.begin(), more.end());
  auto stats = aggregate(collect_question_outcomes(all), qs);
  REQUIRE(stats.size() == 2);  // one category + overall
  const ObservedStats& cat = stats[0];
  CHECK(cat.group == "scene_understanding");
  CHECK(cat.n == 2);
  CHECK(cat.re() == 0.5);
  CHECK(cat.ma() == 0.5);
  CHECK(cat.ve_bar() == 0.5);
  const ObservedStats& overall = stats[1];
  CHECK(overall.group == kGroupOverallMicro);
  CHECK(overall.re() == 0.5);
}

TEST_CASE("aggregate: a lone (T,T,T,F) question") {
  QuestionSet qs = tiny_question_set({{"q1", Category::object_presence}});
  auto stats = aggregate(collect_question_outcomes(outcomes_for("q1", {true, true, true, false})), qs);
  const ObservedStats& s = stats[0];
  CHECK(s.re() == 0.0);
  CHECK(s.ma() == 0.0);
  CHECK(s.ve_bar() == 0.75);
  CHECK(s.ve0() == 1.0);
}

TEST_CASE("aggregate: 2000 questions all correct") {
  std::vector<std::pair<std::string, Category>> items;
  std::vector<Outcome> all;
  for (int i = 0; i < 2000; ++i) {
    std::string id = "q" + std::to_string(i);
    items.push_back({id, Category::object_counting});
    auto more = outcomes_for(id, {true, true, true, true});
    all.insert(all.end(), more.begin(), more.end());
  }
  auto stats = aggregate(collect_question_outcomes(all), tiny_question_set(items));
  const ObservedStats& s = stats[0];
  CHECK(s.n == 2000);
  CHECK(s.re() == 1.0);
  CHECK(s.ve_bar() == 1.0);
  CHECK(s.ma() == 0.0);
}

TEST_CASE("aggregate: empty input throws EmptyGroup") {
  QuestionSet qs = tiny_question_set({{"q1", Category::object_presence}});
  CHECK_THROWS_AS(aggregate({}, qs), error);
}

TEST_CASE("delta: published table rows and the null case") {
  CHECK(delta(0.630, 0.470) == doctest::Approx(-0.160).epsilon(1e-12));
  CHECK(delta(0.5, 0.5) == 0.0);
  CHECK(delta(0.793, 0.611) == doctest::Approx(-0.182).epsilon(1e-12));
}

TEST_CASE("aggregation invariants hold on random outcome sets") {
  std::mt19937_64 rng(99);
  std::bernoulli_distribution coin(0.6);
  std::vector<std::pair<std::string, Category>> items;
  std::vector<Outcome> all;
  for (int i = 0; i < 500; ++i) {
    std::string id = "q" + std::to_string(i);
    Category cat = static_cast<Category>(i % 10);
    items.push_back({id, cat});
    auto more = outcomes_for(id, {coin(rng), coin(rng), coin(rng), coin(rng)});
    all.insert(all.end(), more.begin(), more.end());
  }
  auto stats = aggregate(collect_question_outcomes(all), tiny_question_set(items));
  for (const auto& s : stats) {
    CHECK(s.re() <= s.ve_bar() + 1e-12);
    CHECK(s.ma() <= 1.0 - s.ve_bar() + 1e-12);
    CHECK(s.re() + s.ma() <= 1.0 + 1e-12);
    // ve_bar is exactly total correct / 4n
    CHECK(s.ve_bar() == static_cast<double>(s.correct_total) / (4.0 * s.n));
  }
}

TEST_CASE("aggregation is permutation-invariant over questions") {
  std::mt19937_64 rng(123);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::pair<std::string, Category>> items;
  std::vector<Outcome> all;
  for (int i = 0; i < 100; ++i) {
    std::string id = "q" + std::to_string(i);
    items.push_back({id, Category::dynamic_temporal});
    auto more = outcomes_for(id, {coin(rng), coin(rng), coin(rng), coin(rng)});
    all.insert(all.end(), more.begin(), more.end());
  }
  QuestionSet qs = tiny_question_set(items);
  auto rows = collect_question_outcomes(all);
  auto stats1 = aggregate(rows, qs);
  std::shuffle(rows.begin(), rows.end(), rng);
  auto stats2 = aggregate(rows, qs);
  REQUIRE(stats1.size() == stats2.size());
  for (std::size_t i = 0; i < stats1.size(); ++i) {
    CHECK(stats1[i].re() == stats2[i].re());
    CHECK(stats1[i].ve_bar() == stats2[i].ve_bar());
    CHECK(stats1[i].ma() == stats2[i].ma());
    CHECK(stats1[i].ve0() == stats2[i].ve0());
  }
}

TEST_CASE("macro_average is the mean of category rows") {
  std::vector<ObservedStats> stats;
  ObservedStats a;
  a.group = "object_presence";
  a.n = 4;
  a.re_count = 4;
  a.ma_count = 0;
  a.correct_total = 16;
  a.ve0_count = 4;
  ObservedStats b;
  b.group = "object_counting";
  b.n = 4;
  b.re_count = 0;
  b.ma_count = 4;
  b.correct_total = 0;
  b.ve0_count = 0;
  ObservedStats overall;
  overall.group = kGroupOverallMicro;
  overall.n = 8;
  overall.re_count = 4;
  overall.correct_total = 16;
  stats = {a, b, overall};
  auto macro = macro_average(stats);
  REQUIRE(macro.has_value());
  CHECK(macro->re == 0.5);
  CHECK(macro->ve_bar == 0.5);
  CHECK(macro->ma == 0.5);
  CHECK(macro->n == 8);

  CHECK_FALSE(macro_average({overall}).has_value());
}
