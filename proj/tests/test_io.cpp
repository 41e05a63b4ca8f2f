#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "exprfuse/io.hpp"
#include "exprfuse/pipeline.hpp"
#include "exprfuse/synthetic.hpp"
#include "test_util.hpp"

using namespace exprfuse;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("exprfuse_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out);
  out << text;
}

}  // namespace

TEST_CASE("prediction files round-trip exactly") {
  TempDir dir;
  std::mt19937_64 rng(401);
  std::vector<ProbArray> rows;
  for (int i = 0; i < 50; ++i) {
    rows.push_back(exprfuse::testing::random_prob(rng));
  }
  PredictionMatrix m = exprfuse::testing::make_matrix("roundtrip", rows);
  const fs::path file = dir.path / "roundtrip.csv";
  write_predictions(m, file);
  const PredictionMatrix back = read_predictions(file);
  REQUIRE(back.frames.size() == m.frames.size());
  for (size_t i = 0; i < m.frames.size(); ++i) {
    CHECK(back.frames[i].frame_id == m.frames[i].frame_id);
    CHECK(back.frames[i].video_id == m.frames[i].video_id);
    CHECK(back.frames[i].p == m.frames[i].p);
  }

  // Byte-identical on rewrite.
  write_predictions(back, dir.path / "again.csv");
  CHECK(slurp(file) == slurp(dir.path / "again.csv"));
}

TEST_CASE("prediction reader reports the line and field") {
  TempDir dir;
  const fs::path file = dir.path / "bad.csv";
  const std::string header =
      "frame_id,video_id,anger,disgust,fear,happiness,sadness,surprise,"
      "neutral,other";

  spit(file, header + "\nf0,v0,0.5,0.5,0,0,0,0,0\n");  // 7 probabilities
  CHECK_THROWS_WITH_AS(read_predictions(file), doctest::Contains("bad.csv:2"),
                       ValidationError);

  spit(file, header + "\nf0,v0,0.5,0.5,0,0,zero,0,0,0\n");
  CHECK_THROWS_WITH_AS(read_predictions(file), doctest::Contains("zero"),
                       ValidationError);

  // Permuted class order in the header.
  spit(file,
       "frame_id,video_id,disgust,anger,fear,happiness,sadness,surprise,"
       "neutral,other\nf0,v0,1,0,0,0,0,0,0,0\n");
  CHECK_THROWS_WITH_AS(read_predictions(file), doctest::Contains("header"),
                       ValidationError);

  CHECK_THROWS_AS(read_predictions(dir.path / "missing.csv"), IoError);
}

TEST_CASE("dataset files round-trip") {
  TempDir dir;
  SyntheticSpec spec;
  spec.videos = 6;
  spec.min_frames_per_video = 3;
  spec.max_frames_per_video = 8;
  spec.simulated_sources = 0;
  spec.source_flip_rates.clear();
  const auto samples = generate_synthetic(spec).samples;
  const fs::path file = dir.path / "dataset.csv";
  write_dataset(samples, file);
  const auto back = read_dataset(file);
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].frame_id == samples[i].frame_id);
    CHECK(back[i].video_id == samples[i].video_id);
    CHECK(back[i].label == samples[i].label);
    CHECK(back[i].features == samples[i].features);
  }
}

TEST_CASE("dataset reader rejects malformed rows") {
  TempDir dir;
  const fs::path file = dir.path / "data.csv";
  spit(file, "frame_id,video_id,label,f0\nf0,v0,9,0.5\n");
  CHECK_THROWS_AS(read_dataset(file), ValidationError);
  spit(file, "frame_id,video_id,label,f0\nf0,v0,1\n");
  CHECK_THROWS_WITH_AS(read_dataset(file), doctest::Contains("data.csv:2"),
                       ValidationError);
  spit(file, "frame_id,video_id,label,g0\n");
  CHECK_THROWS_AS(read_dataset(file), ValidationError);
}

TEST_CASE("fold plans round-trip with their header") {
  TempDir dir;
  FoldPlan plan;
  plan.k = 5;
  plan.seed = 99;
  plan.assignment = {{"a", 0}, {"b", 4}, {"c", 2}};
  const fs::path file = dir.path / "plan.csv";
  write_fold_plan(plan, file);
  const std::string text = slurp(file);
  CHECK(text.starts_with("# k=5 seed=99\nvideo_id,fold\n"));
  const FoldPlan back = read_fold_plan(file);
  CHECK(back.k == plan.k);
  CHECK(back.seed == plan.seed);
  CHECK(back.assignment == plan.assignment);

  spit(file, "# k=5 seed=1\nvideo_id,fold\nv,7\n");
  CHECK_THROWS_AS(read_fold_plan(file), ValidationError);
}

TEST_CASE("submission format") {
  TempDir dir;
  ProbArray other{};
  other[7] = 1.0;
  ProbArray fear{};
  fear[2] = 1.0;
  PredictionMatrix m = exprfuse::testing::make_matrix("s", {fear, other});
  const fs::path file = dir.path / "submission.csv";
  write_submission(m, file);
  CHECK(slurp(file) == "frame_id,label_index\nf0,2\nf1,7\n");

  PredictionMatrix empty;
  empty.source_id = "none";
  write_submission(empty, dir.path / "empty.csv");
  CHECK(slurp(dir.path / "empty.csv") == "frame_id,label_index\n");
}

TEST_CASE("reports round-trip and format cleanly") {
  TempDir dir;
  EvalReport report;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cs = static_cast<size_t>(c);
    report.per_class_f1[cs] = 0.1 * c;
    report.per_class_precision[cs] = 0.05 * c;
    report.per_class_recall[cs] = 0.07 * c;
  }
  report.support = {1, 2, 3, 4, 5, 6, 7, 8};
  report.macro_f1 = 0.35;
  const fs::path file = dir.path / "report.csv";
  write_report(report, file);
  const EvalReport back = read_report(file);
  CHECK(back.per_class_f1 == report.per_class_f1);
  CHECK(back.support == report.support);
  CHECK(back.macro_f1 == report.macro_f1);

  const std::string text = format_report(report);
  CHECK(text.find("macro_f1 0.350000") != std::string::npos);
  CHECK(text.find("anger") != std::string::npos);
}

TEST_CASE("models round-trip exactly") {
  TempDir dir;
  std::mt19937_64 rng(409);
  LinearSoftmaxModel model;
  model.dim = 7;
  for (int i = 0; i < 7 * kNumClasses; ++i) {
    model.weights.push_back(standard_normal(rng) * 1e3);
  }
  for (auto& b : model.bias) {
    b = standard_normal(rng) * 1e-3;
  }
  const fs::path file = dir.path / "model.txt";
  write_model(model, file);
  const LinearSoftmaxModel back = read_model(file);
  CHECK(back.dim == model.dim);
  CHECK(back.weights == model.weights);
  CHECK(back.bias == model.bias);

  spit(file, "exprfuse-model 2\n");
  CHECK_THROWS_AS(read_model(file), ValidationError);
}

TEST_CASE("run config JSON round-trips") {
  RunConfig config;
  config.seed = 77;
  config.k = 4;
  config.preset = "Fusion 2";
  config.families = {TrainedFamily{"plain", -1.0}, TrainedFamily{"focused", 3.0}};
  config.grid.values = {0.0, 0.5, 1.0};
  config.grid.exhaustive = false;
  const std::string once = run_config_to_json(config);
  const RunConfig parsed = parse_run_config_json(once);
  const std::string twice = run_config_to_json(parsed);
  CHECK(once == twice);
  CHECK(parsed.seed == 77);
  CHECK(parsed.preset == "Fusion 2");
  CHECK(parsed.families.size() == 2);
  CHECK(parsed.grid.exhaustive == false);

  CHECK_THROWS_AS(parse_run_config_json("{nope"), ValidationError);
}

TEST_CASE("synthetic generation is deterministic and valid") {
  SyntheticSpec spec;
  spec.videos = 12;
  spec.min_frames_per_video = 10;
  spec.max_frames_per_video = 30;
  const SyntheticData a = generate_synthetic(spec);
  const SyntheticData b = generate_synthetic(spec);
  REQUIRE(a.samples.size() == b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].frame_id == b.samples[i].frame_id);
    CHECK(a.samples[i].features == b.samples[i].features);
    CHECK(a.samples[i].label == b.samples[i].label);
  }
  REQUIRE(a.sources.size() == 3);
  for (size_t m = 0; m < a.sources.size(); ++m) {
    validate_prediction_matrix(a.sources[m]);
    for (size_t i = 0; i < a.sources[m].frames.size(); ++i) {
      CHECK(a.sources[m].frames[i].p == b.sources[m].frames[i].p);
    }
  }

  TempDir dir;
  write_dataset(a.samples, dir.path / "a.csv");
  write_dataset(b.samples, dir.path / "b.csv");
  CHECK(slurp(dir.path / "a.csv") == slurp(dir.path / "b.csv"));
}

TEST_CASE("synthetic class frequencies track the priors") {
  SyntheticSpec spec;
  spec.videos = 1000;  // ~100k frames; videos carry one dominant class each,
                       // so the law of large numbers needs many videos
  spec.simulated_sources = 0;
  spec.source_flip_rates.clear();
  const auto samples = generate_synthetic(spec).samples;
  REQUIRE(samples.size() >= 10000);
  std::array<double, kNumClasses> freq{};
  for (const auto& s : samples) {
    ++freq[static_cast<size_t>(class_index(s.label))];
  }
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cs = static_cast<size_t>(c);
    freq[cs] /= static_cast<double>(samples.size());
    CHECK(std::abs(freq[cs] - spec.class_priors[cs]) <= 0.03);
  }
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  spec.class_priors[0] += 0.5;
  CHECK_THROWS_AS(generate_synthetic(spec), ValidationError);

  SyntheticSpec bad_rates;
  bad_rates.simulated_sources = 2;
  CHECK_THROWS_AS(generate_synthetic(bad_rates), ValidationError);
}
