#include "exprfuse/io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace exprfuse {

namespace detail {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [end, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) {
    throw InternalError("failed to format a double");
  }
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text, const std::string& where) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError(where + ": not a number: \"" + std::string(text) +
                          "\"");
  }
  return value;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open \"" + tmp.string() + "\" for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw IoError("write failed for \"" + tmp.string() + "\"");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot rename \"" + tmp.string() + "\" to \"" +
                  path.string() + "\": " + ec.message());
  }
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace detail

namespace {

using detail::format_double;
using detail::parse_double;
using detail::split_csv_line;
using detail::write_text_atomic;

std::string prediction_header() {
  std::string header = "frame_id,video_id";
  for (const auto name : class_names()) {
    header += ',';
    header += name;
  }
  return header;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open \"" + path.string() + "\" for reading");
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(line);
  }
  return lines;
}

std::string at_line(const std::filesystem::path& path, size_t line_no) {
  return path.filename().string() + ":" + std::to_string(line_no);
}

}  // namespace

PredictionMatrix read_predictions(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) {
    throw ValidationError(at_line(path, 1) + ": missing prediction header");
  }
  if (lines[0] != prediction_header()) {
    throw ValidationError(at_line(path, 1) +
                          ": bad prediction header (class order is fixed): \"" +
                          lines[0] + "\"");
  }
  PredictionMatrix m;
  m.source_id = path.stem().string();
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 2 + kNumClasses) {
      throw ValidationError(at_line(path, i + 1) + ": expected " +
                            std::to_string(2 + kNumClasses) + " columns, got " +
                            std::to_string(fields.size()));
    }
    PredictionRow row;
    row.frame_id = fields[0];
    row.video_id = fields[1];
    if (row.frame_id.empty()) {
      throw ValidationError(at_line(path, i + 1) + ": empty frame_id");
    }
    for (int c = 0; c < kNumClasses; ++c) {
      row.p[static_cast<size_t>(c)] = parse_double(
          fields[static_cast<size_t>(c) + 2], at_line(path, i + 1));
    }
    m.frames.push_back(std::move(row));
  }
  return validate_prediction_matrix(std::move(m));
}

void write_predictions(const PredictionMatrix& matrix,
                       const std::filesystem::path& path) {
  std::string out = prediction_header();
  out += '\n';
  for (const auto& row : matrix.frames) {
    out += row.frame_id;
    out += ',';
    out += row.video_id;
    for (const auto p : row.p) {
      out += ',';
      out += format_double(p);
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

std::vector<LabeledSample> read_dataset(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) {
    throw ValidationError(at_line(path, 1) + ": missing dataset header");
  }
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 4 || header[0] != "frame_id" || header[1] != "video_id" ||
      header[2] != "label") {
    throw ValidationError(at_line(path, 1) + ": bad dataset header: \"" +
                          lines[0] + "\"");
  }
  const size_t dim = header.size() - 3;
  for (size_t d = 0; d < dim; ++d) {
    if (header[d + 3] != "f" + std::to_string(d)) {
      throw ValidationError(at_line(path, 1) + ": feature column " +
                            std::to_string(d) + " must be named f" +
                            std::to_string(d) + ", got \"" + header[d + 3] +
                            "\"");
    }
  }
  std::vector<LabeledSample> samples;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 3 + dim) {
      throw ValidationError(at_line(path, i + 1) + ": expected " +
                            std::to_string(3 + dim) + " columns, got " +
                            std::to_string(fields.size()));
    }
    LabeledSample s;
    s.frame_id = fields[0];
    s.video_id = fields[1];
    int label = -1;
    const auto [ptr, ec] = std::from_chars(
        fields[2].data(), fields[2].data() + fields[2].size(), label);
    if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size()) {
      throw ValidationError(at_line(path, i + 1) + ": bad label \"" +
                            fields[2] + "\"");
    }
    s.label = class_from_index(label);
    s.features.reserve(dim);
    for (size_t d = 0; d < dim; ++d) {
      s.features.push_back(parse_double(fields[d + 3], at_line(path, i + 1)));
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_dataset(std::span<const LabeledSample> samples,
                   const std::filesystem::path& path) {
  const size_t dim = samples.empty() ? 0 : samples[0].features.size();
  std::string out = "frame_id,video_id,label";
  for (size_t d = 0; d < dim; ++d) {
    out += ",f" + std::to_string(d);
  }
  out += '\n';
  for (const auto& s : samples) {
    if (s.features.size() != dim) {
      throw ValidationError("write_dataset: sample \"" + s.frame_id +
                            "\" has inconsistent feature dimension");
    }
    out += s.frame_id;
    out += ',';
    out += s.video_id;
    out += ',';
    out += std::to_string(class_index(s.label));
    for (const auto f : s.features) {
      out += ',';
      out += format_double(f);
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

FoldPlan read_fold_plan(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) {
    throw ValidationError(at_line(path, 1) + ": truncated fold plan");
  }
  FoldPlan plan;
  unsigned long long seed = 0;
  if (std::sscanf(lines[0].c_str(), "# k=%d seed=%llu", &plan.k, &seed) != 2) {
    throw ValidationError(at_line(path, 1) +
                          ": expected \"# k=<k> seed=<seed>\", got \"" +
                          lines[0] + "\"");
  }
  plan.seed = seed;
  if (lines[1] != "video_id,fold") {
    throw ValidationError(at_line(path, 2) + ": bad fold plan header: \"" +
                          lines[1] + "\"");
  }
  for (size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 2) {
      throw ValidationError(at_line(path, i + 1) + ": expected 2 columns, got " +
                            std::to_string(fields.size()));
    }
    int fold = -1;
    const auto [ptr, ec] = std::from_chars(
        fields[1].data(), fields[1].data() + fields[1].size(), fold);
    if (ec != std::errc{} || ptr != fields[1].data() + fields[1].size() ||
        fold < 0 || fold >= plan.k) {
      throw ValidationError(at_line(path, i + 1) + ": bad fold index \"" +
                            fields[1] + "\"");
    }
    if (!plan.assignment.emplace(fields[0], fold).second) {
      throw ValidationError(at_line(path, i + 1) + ": duplicate video \"" +
                            fields[0] + "\"");
    }
  }
  return plan;
}

void write_fold_plan(const FoldPlan& plan, const std::filesystem::path& path) {
  std::string out = "# k=" + std::to_string(plan.k) +
                    " seed=" + std::to_string(plan.seed) + "\n";
  out += "video_id,fold\n";
  for (const auto& [video, fold] : plan.assignment) {
    out += video;
    out += ',';
    out += std::to_string(fold);
    out += '\n';
  }
  write_text_atomic(path, out);
}

void write_submission(const PredictionMatrix& matrix,
                      const std::filesystem::path& path) {
  std::string out = "frame_id,label_index\n";
  for (const auto& row : matrix.frames) {
    out += row.frame_id;
    out += ',';
    out += std::to_string(argmax_index(row.p));
    out += '\n';
  }
  write_text_atomic(path, out);
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::string out = "metric,class,value\n";
  const auto& names = class_names();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cs = static_cast<size_t>(c);
    out += "precision," + std::string(names[cs]) + ',' +
           format_double(report.per_class_precision[cs]) + '\n';
    out += "recall," + std::string(names[cs]) + ',' +
           format_double(report.per_class_recall[cs]) + '\n';
    out += "f1," + std::string(names[cs]) + ',' +
           format_double(report.per_class_f1[cs]) + '\n';
    out += "support," + std::string(names[cs]) + ',' +
           std::to_string(report.support[cs]) + '\n';
  }
  out += "macro_f1,," + format_double(report.macro_f1) + '\n';
  write_text_atomic(path, out);
}

EvalReport read_report(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "metric,class,value") {
    throw ValidationError(at_line(path, 1) + ": bad report header");
  }
  EvalReport report;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 3) {
      throw ValidationError(at_line(path, i + 1) + ": expected 3 columns");
    }
    const auto& metric = fields[0];
    if (metric == "macro_f1") {
      report.macro_f1 = parse_double(fields[2], at_line(path, i + 1));
      continue;
    }
    const auto cls = static_cast<size_t>(class_index(class_from_name(fields[1])));
    if (metric == "precision") {
      report.per_class_precision[cls] = parse_double(fields[2], at_line(path, i + 1));
    } else if (metric == "recall") {
      report.per_class_recall[cls] = parse_double(fields[2], at_line(path, i + 1));
    } else if (metric == "f1") {
      report.per_class_f1[cls] = parse_double(fields[2], at_line(path, i + 1));
    } else if (metric == "support") {
      std::int64_t support = 0;
      const auto [ptr, ec] = std::from_chars(
          fields[2].data(), fields[2].data() + fields[2].size(), support);
      if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size()) {
        throw ValidationError(at_line(path, i + 1) + ": bad support \"" +
                              fields[2] + "\"");
      }
      report.support[cls] = support;
    } else {
      throw ValidationError(at_line(path, i + 1) + ": unknown metric \"" +
                            metric + "\"");
    }
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  const auto& names = class_names();
  os << "class        precision  recall     f1         support\n";
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cs = static_cast<size_t>(c);
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s %-10.4f %-10.4f %-10.4f %lld\n",
                  std::string(names[cs]).c_str(),
                  report.per_class_precision[cs], report.per_class_recall[cs],
                  report.per_class_f1[cs],
                  static_cast<long long>(report.support[cs]));
    os << line;
  }
  char macro[64];
  std::snprintf(macro, sizeof(macro), "macro_f1 %.6f\n", report.macro_f1);
  os << macro;
  return os.str();
}

LinearSoftmaxModel read_model(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  size_t i = 0;
  auto next = [&]() -> const std::string& {
    if (i >= lines.size()) {
      throw ValidationError(at_line(path, lines.size()) + ": truncated model file");
    }
    return lines[i++];
  };
  if (next() != "exprfuse-model 1") {
    throw ValidationError(at_line(path, 1) + ": not an exprfuse model file");
  }
  const auto& dim_line = next();
  int dim = 0;
  if (std::sscanf(dim_line.c_str(), "dim %d", &dim) != 1 || dim < 1) {
    throw ValidationError(at_line(path, i) + ": bad dim line \"" + dim_line + "\"");
  }
  std::string classes = "classes ";
  for (int c = 0; c < kNumClasses; ++c) {
    if (c > 0) classes += ',';
    classes += class_names()[static_cast<size_t>(c)];
  }
  if (next() != classes) {
    throw ValidationError(at_line(path, i) + ": class order mismatch");
  }
  if (next() != "weights") {
    throw ValidationError(at_line(path, i) + ": expected \"weights\"");
  }
  LinearSoftmaxModel model;
  model.dim = dim;
  model.weights.reserve(static_cast<size_t>(dim) * kNumClasses);
  for (int d = 0; d < dim; ++d) {
    std::istringstream row(next());
    std::string token;
    for (int c = 0; c < kNumClasses; ++c) {
      if (!(row >> token)) {
        throw ValidationError(at_line(path, i) + ": weight row needs 8 values");
      }
      model.weights.push_back(parse_double(token, at_line(path, i)));
    }
  }
  if (next() != "bias") {
    throw ValidationError(at_line(path, i) + ": expected \"bias\"");
  }
  std::istringstream bias(next());
  std::string token;
  for (int c = 0; c < kNumClasses; ++c) {
    if (!(bias >> token)) {
      throw ValidationError(at_line(path, i) + ": bias row needs 8 values");
    }
    model.bias[static_cast<size_t>(c)] = parse_double(token, at_line(path, i));
  }
  return model;
}

void write_model(const LinearSoftmaxModel& model,
                 const std::filesystem::path& path) {
  std::string out = "exprfuse-model 1\n";
  out += "dim " + std::to_string(model.dim) + '\n';
  out += "classes ";
  for (int c = 0; c < kNumClasses; ++c) {
    if (c > 0) out += ',';
    out += class_names()[static_cast<size_t>(c)];
  }
  out += '\n';
  out += "weights\n";
  for (int d = 0; d < model.dim; ++d) {
    for (int c = 0; c < kNumClasses; ++c) {
      if (c > 0) out += ' ';
      out += format_double(model.weight_at(d, c));
    }
    out += '\n';
  }
  out += "bias\n";
  for (int c = 0; c < kNumClasses; ++c) {
    if (c > 0) out += ' ';
    out += format_double(model.bias[static_cast<size_t>(c)]);
  }
  out += '\n';
  write_text_atomic(path, out);
}

}  // namespace exprfuse
