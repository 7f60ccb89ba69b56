#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace expadam {

/// Row-major feature matrix with integer class labels.
struct Dataset {
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;  // size() * num_features
  std::vector<int> labels;
  std::vector<std::size_t> class_counts;

  Dataset() = default;
  /// Builds class_counts and checks every invariant.
  Dataset(std::size_t num_features, std::size_t num_classes, std::vector<double> features,
          std::vector<int> labels);

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * num_features, num_features};
  }

  Dataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Gaussian clusters, one per center, with n_per_class[c] samples each.
Dataset synth_blobs(std::span<const std::size_t> n_per_class,
                    const std::vector<std::vector<double>>& centers, double sigma,
                    std::uint64_t seed);

struct Split {
  Dataset train;
  Dataset test;
};

/// Per-class shuffle, then the first round(train_fraction * n_c) of each
/// class go to train. Classes with at least two samples keep one in each part.
Split stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed);

/// CSV with header f0..fD-1,label; floats with 17 significant digits.
void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::filesystem::path& path);
/// num_classes = 0 infers max(label) + 1.
Dataset read_dataset_csv(std::istream& in, std::size_t num_classes = 0);
Dataset read_dataset_csv(const std::filesystem::path& path, std::size_t num_classes = 0);

}  // namespace expadam
