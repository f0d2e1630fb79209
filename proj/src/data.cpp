#include "vill/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include "vill/errors.hpp"
#include "vill/format.hpp"
#include "vill/rng.hpp"

namespace vill {
namespace {

void check_priors(const std::vector<double>& p, std::size_t num_classes, const char* name) {
  if (p.size() != num_classes) throw ArgumentError(std::string(name) + " must have one entry per class");
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) throw ArgumentError(std::string(name) + " has a negative entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError(std::string(name) + " must sum to 1");
}

Dataset sample_domain(const ShiftSpec& spec, const Matrix& means, Domain domain) {
  const bool is_target = domain == Domain::target;
  const auto& priors = is_target ? spec.target_priors : spec.source_priors;
  const std::size_t n = is_target ? spec.n_target : spec.n_source;
  Rng rng = Rng::stream(spec.seed, is_target ? 2 : 1);

  Dataset ds{Matrix(n, spec.dim), std::vector<int>(n), domain, spec.num_classes};
  auto& labels = *ds.labels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = rng.categorical(priors);
    labels[i] = static_cast<int>(y);
    auto x = ds.features.row(i);
    auto mu = means.row(y);
    for (std::size_t j = 0; j < spec.dim; ++j) {
      double value = mu[j] + spec.noise_scale * rng.normal();
      if (is_target && !spec.mean_shift.empty()) value += spec.mean_shift[j];
      x[j] = value;
    }
  }
  return ds;
}

double parse_double(std::string_view field, std::size_t row) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw IngestionError("cannot parse number '" + std::string(field) + "'", row);
  }
  if (!std::isfinite(value)) throw IngestionError("non-finite value", row);
  return value;
}

}  // namespace

std::string to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

void Dataset::validate() const {
  if (!labels) return;
  if (labels->size() != features.rows()) throw ArgumentError("dataset: label count does not match rows");
  for (int y : *labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ArgumentError("dataset: label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

void ShiftSpec::validate() const {
  if (num_classes < 2) throw ArgumentError("shift spec: num_classes must be >= 2");
  if (dim == 0) throw ArgumentError("shift spec: dim must be >= 1");
  check_priors(source_priors, num_classes, "source_priors");
  check_priors(target_priors, num_classes, "target_priors");
  if (!mean_shift.empty() && mean_shift.size() != dim) throw ArgumentError("shift spec: mean_shift must be empty or length dim");
  for (double x : mean_shift) {
    if (!std::isfinite(x)) throw ArgumentError("shift spec: non-finite mean_shift");
  }
  if (!(class_separation > 0.0)) throw ArgumentError("shift spec: class_separation must be positive");
  if (!(noise_scale > 0.0)) throw ArgumentError("shift spec: noise_scale must be positive");
  if (n_source < num_classes || n_target < num_classes) throw ArgumentError("shift spec: sample counts must be >= num_classes");
}

Matrix class_means(const ShiftSpec& spec) {
  spec.validate();
  Matrix means(spec.num_classes, spec.dim);
  if (spec.num_classes <= spec.dim) {
    for (std::size_t c = 0; c < spec.num_classes; ++c) means(c, c) = spec.class_separation;
    return means;
  }
  Rng rng = Rng::stream(spec.seed, 0);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    auto r = means.row(c);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& x : r) {
        x = rng.normal();
        norm += x * x;
      }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    for (double& x : r) x *= spec.class_separation / norm;
  }
  return means;
}

DomainPair generate(const ShiftSpec& spec) {
  const Matrix means = class_means(spec);
  return {sample_domain(spec, means, Domain::source), sample_domain(spec, means, Domain::target)};
}

Dataset load_csv(const std::filesystem::path& path, Domain domain, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::string line;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && options.skip_header) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    fields.clear();
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (width == 0) {
      width = fields.size();
      if (options.has_labels && width < 2) throw IngestionError("need at least one feature column and a label", line_no);
    } else if (fields.size() != width) {
      throw IngestionError("expected " + std::to_string(width) + " columns, found " + std::to_string(fields.size()), line_no);
    }
    const std::size_t n_features = options.has_labels ? width - 1 : width;
    for (std::size_t j = 0; j < n_features; ++j) values.push_back(parse_double(fields[j], line_no));
    if (options.has_labels) {
      const double y = parse_double(fields.back(), line_no);
      if (y < 0.0 || y != std::floor(y) || y > 1e9) throw IngestionError("label must be a nonnegative integer", line_no);
      labels.push_back(static_cast<int>(y));
    }
    ++rows;
  }
  if (rows == 0) throw IngestionError("'" + path.string() + "' contains no data rows");

  const std::size_t n_features = options.has_labels ? width - 1 : width;
  Dataset ds{Matrix(rows, n_features, std::move(values)), std::nullopt, domain, options.num_classes};
  if (options.has_labels) {
    if (ds.num_classes == 0) {
      ds.num_classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
    }
    ds.labels = std::move(labels);
    try {
      ds.validate();
    } catch (const ArgumentError& e) {
      throw IngestionError(e.what());
    }
  }
  return ds;
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto r = data.features.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out << ',';
      out << format_double(r[j]);
    }
    if (data.labels) out << ',' << (*data.labels)[i];
    out << '\n';
  }
  if (!out) throw IngestionError("write to '" + path.string() + "' failed");
}

}  // namespace vill
