#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vill/matrix.hpp"

namespace vill {

enum class Domain { source, target };

std::string to_string(Domain d);

// Features plus optional labels. Target labels, when present, are used for
// evaluation only.
struct Dataset {
  Matrix features;
  std::optional<std::vector<int>> labels;
  Domain domain = Domain::source;
  std::size_t num_classes = 0;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  bool has_labels() const { return labels.has_value(); }

  // Throws ArgumentError on label count / range violations.
  void validate() const;
};

// Class-conditional Gaussian mixture for a source/target pair. Class c has
// mean class_separation * u_c, where u_c is the c-th basis vector when
// C <= dim and a seeded random unit vector otherwise. Target means are
// additionally offset by mean_shift (empty = no shift).
struct ShiftSpec {
  std::size_t num_classes = 3;
  std::size_t dim = 2;
  std::vector<double> source_priors;
  std::vector<double> target_priors;
  std::vector<double> mean_shift;
  double class_separation = 3.0;
  double noise_scale = 1.0;
  std::size_t n_source = 1000;
  std::size_t n_target = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DomainPair {
  Dataset source;
  Dataset target;
};

// Deterministic per seed; labels are drawn i.i.d. from the domain's priors.
DomainPair generate(const ShiftSpec& spec);

// Class mean vectors used by generate() for the source domain (C x dim).
Matrix class_means(const ShiftSpec& spec);

struct CsvOptions {
  bool has_labels = true;
  bool skip_header = false;
  // 0 infers the class count as max(label) + 1.
  std::size_t num_classes = 0;
};

// Comma-separated, '.' decimals, label (if any) in the last column.
Dataset load_csv(const std::filesystem::path& path, Domain domain, const CsvOptions& options = {});
void save_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace vill
