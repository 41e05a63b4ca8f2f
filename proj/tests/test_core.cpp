#include <doctest.h>

#include <future>
#include <limits>

#include "exprfuse/core.hpp"
#include "test_util.hpp"

using namespace exprfuse;
using doctest::Contains;

TEST_CASE("class taxonomy is the fixed 8-member list") {
  CHECK(class_names().size() == 8);
  CHECK(class_names()[0] == "anger");
  CHECK(class_names()[6] == "neutral");
  CHECK(class_names()[7] == "other");
  for (int i = 0; i < kNumClasses; ++i) {
    CHECK(class_index(class_from_name(class_names()[static_cast<size_t>(i)])) == i);
    CHECK(class_index(class_from_index(i)) == i);
  }
  CHECK_THROWS_AS(class_from_index(8), ValidationError);
  CHECK_THROWS_AS(class_from_index(-1), ValidationError);
  CHECK_THROWS_AS(class_from_name("joy"), ValidationError);
}

TEST_CASE("argmax_label picks the maximal entry") {
  ProbabilityVector p{{0.93, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01}};
  CHECK(argmax_label(p) == ExpressionClass::kAnger);

  ProbabilityVector uniform{{0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125}};
  CHECK(argmax_label(uniform) == ExpressionClass::kAnger);  // tie -> lowest

  ProbabilityVector last{{0, 0, 0, 0, 0, 0, 0, 1}};
  CHECK(argmax_label(last) == ExpressionClass::kOther);
}

TEST_CASE("argmax_label rejects invalid vectors") {
  ProbabilityVector nan{{0.5, std::numeric_limits<double>::quiet_NaN(), 0.5, 0, 0, 0, 0, 0}};
  CHECK_THROWS_AS(argmax_label(nan), ValidationError);

  ProbabilityVector negative{{1.1, -0.1, 0, 0, 0, 0, 0, 0}};
  CHECK_THROWS_AS(argmax_label(negative), ValidationError);

  ProbabilityVector bad_sum{{0.5, 0.4, 0, 0, 0, 0, 0, 0}};
  CHECK_THROWS_AS(argmax_label(bad_sum), ValidationError);
}

TEST_CASE("argmax is invariant under positive scaling of raw scores") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    ProbArray scores{};
    for (auto& v : scores) {
      v = uniform01(rng) * 10.0;
    }
    const double c = 0.001 + uniform01(rng) * 100.0;
    ProbArray scaled = scores;
    for (auto& v : scaled) {
      v *= c;
    }
    CHECK(argmax_index(scores) == argmax_index(scaled));
  }
}

TEST_CASE("argmax is deterministic across threads") {
  std::mt19937_64 rng(17);
  std::vector<ProbArray> inputs;
  for (int i = 0; i < 512; ++i) {
    inputs.push_back(testing::random_prob(rng));
  }
  auto run = [&inputs] {
    std::vector<int> out;
    out.reserve(inputs.size());
    for (const auto& p : inputs) {
      out.push_back(argmax_index(p));
    }
    return out;
  };
  auto a = std::async(std::launch::async, run);
  auto b = std::async(std::launch::async, run);
  const auto reference = run();
  CHECK(a.get() == reference);
  CHECK(b.get() == reference);
}

TEST_CASE("validate_prediction_matrix renormalizes near-1 rows") {
  ProbArray row{};
  row.fill(0.125);
  row[0] = 0.1255;  // sum 1.0005
  PredictionMatrix m = testing::make_matrix("s", {row});
  const PredictionMatrix out = validate_prediction_matrix(m);
  double sum = 0.0;
  for (const auto v : out.frames[0].p) {
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
  // Proportions preserved.
  CHECK(out.frames[0].p[0] / out.frames[0].p[1] ==
        doctest::Approx(0.1255 / 0.125).epsilon(1e-12));
}

TEST_CASE("validate_prediction_matrix is a fixpoint after one pass") {
  std::mt19937_64 rng(23);
  std::vector<ProbArray> rows;
  for (int i = 0; i < 64; ++i) {
    ProbArray p = testing::random_prob(rng);
    // Perturb sums within the accepted window.
    const double factor = 1.0 + (uniform01(rng) - 0.5) * 1.5e-3;
    for (auto& v : p) {
      v *= factor;
    }
    rows.push_back(p);
  }
  const PredictionMatrix once =
      validate_prediction_matrix(testing::make_matrix("s", rows));
  const PredictionMatrix twice = validate_prediction_matrix(once);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < kNumClasses; ++c) {
      CHECK(once.frames[i].p[static_cast<size_t>(c)] ==
            twice.frames[i].p[static_cast<size_t>(c)]);
    }
  }
}

TEST_CASE("validate_prediction_matrix names the duplicate frame") {
  ProbArray row{};
  row.fill(0.125);
  PredictionMatrix m;
  m.source_id = "s";
  m.frames.push_back(PredictionRow{"v1_00042", "v1", row});
  m.frames.push_back(PredictionRow{"v1_00042", "v1", row});
  CHECK_THROWS_WITH_AS(validate_prediction_matrix(m), Contains("v1_00042"),
                       ValidationError);
}

TEST_CASE("validate_prediction_matrix rejects negative entries and bad sums") {
  ProbArray neg{{1.1, -0.1, 0, 0, 0, 0, 0, 0}};
  CHECK_THROWS_WITH_AS(
      validate_prediction_matrix(testing::make_matrix("s", {neg})),
      Contains("-0.1"), ValidationError);

  ProbArray low{{0.5, 0.4, 0, 0, 0, 0, 0, 0}};
  CHECK_THROWS_WITH_AS(
      validate_prediction_matrix(testing::make_matrix("s", {low})),
      Contains("f0"), ValidationError);
}
