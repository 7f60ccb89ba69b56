#include "expadam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "expadam/csv.hpp"
#include "expadam/rng.hpp"

namespace expadam {

Dataset::Dataset(std::size_t d, std::size_t c, std::vector<double> x, std::vector<int> y)
    : num_features(d), num_classes(c), features(std::move(x)), labels(std::move(y)) {
  if (num_features == 0) throw std::invalid_argument("dataset: need at least one feature");
  if (num_classes == 0) throw std::invalid_argument("dataset: need at least one class");
  if (features.size() != labels.size() * num_features) {
    throw std::invalid_argument("dataset: feature matrix has " + std::to_string(features.size()) +
                                " values, expected " + std::to_string(labels.size() * num_features));
  }
  class_counts.assign(num_classes, 0);
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw std::invalid_argument("dataset: label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
    ++class_counts[static_cast<std::size_t>(label)];
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> x;
  std::vector<int> y;
  x.reserve(rows.size() * num_features);
  y.reserve(rows.size());
  for (auto r : rows) {
    if (r >= size()) throw std::out_of_range("dataset: row index out of range");
    auto src = row(r);
    x.insert(x.end(), src.begin(), src.end());
    y.push_back(labels[r]);
  }
  return Dataset(num_features, num_classes, std::move(x), std::move(y));
}

Dataset synth_blobs(std::span<const std::size_t> n_per_class,
                    const std::vector<std::vector<double>>& centers, double sigma,
                    std::uint64_t seed) {
  if (centers.empty()) throw std::invalid_argument("synth_blobs: no centers");
  if (n_per_class.size() != centers.size())
    throw std::invalid_argument("synth_blobs: need one count per center");
  if (!(sigma > 0.0)) throw std::invalid_argument("synth_blobs: sigma must be > 0");
  const std::size_t d = centers.front().size();
  for (const auto& c : centers)
    if (c.size() != d || d == 0) throw std::invalid_argument("synth_blobs: ragged centers");

  Rng rng(seed);
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t i = 0; i < n_per_class[c]; ++i) {
      for (std::size_t j = 0; j < d; ++j) x.push_back(centers[c][j] + sigma * rng.normal());
      y.push_back(static_cast<int>(c));
    }
  }
  return Dataset(d, centers.size(), std::move(x), std::move(y));
}

Split stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("stratified_split: fraction must be in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> train_rows, test_rows;
  for (auto& rows : by_class) {
    rng.shuffle(std::span<std::size_t>(rows));
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * rows.size()));
    if (rows.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + n_train);
    test_rows.insert(test_rows.end(), rows.begin() + n_train, rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {data.subset(train_rows), data.subset(test_rows)};
}

void write_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t j = 0; j < data.num_features; ++j) out << 'f' << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) out << csv::format_double(v) << ',';
    out << data.labels[i] << '\n';
  }
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_csv(data, out);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Dataset read_dataset_csv(std::istream& in, std::size_t num_classes) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset csv: missing header");
  const auto header = csv::split_line(line);
  if (header.size() < 2 || header.back() != "label")
    throw std::runtime_error("dataset csv: header must be f0..fD-1,label");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j))
      throw std::runtime_error("dataset csv: unexpected column '" + header[j] + "'");
  }
  std::vector<double> x;
  std::vector<int> y;
  int max_label = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != d + 1) throw std::runtime_error("dataset csv: wrong field count");
    for (std::size_t j = 0; j < d; ++j) x.push_back(csv::parse_double(fields[j]));
    const double label = csv::parse_double(fields[d]);
    if (label != std::floor(label) || label < 0)
      throw std::runtime_error("dataset csv: label must be a nonnegative integer");
    y.push_back(static_cast<int>(label));
    max_label = std::max(max_label, y.back());
  }
  if (num_classes == 0) num_classes = static_cast<std::size_t>(max_label + 1);
  return Dataset(d, num_classes, std::move(x), std::move(y));
}

Dataset read_dataset_csv(const std::filesystem::path& path, std::size_t num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return read_dataset_csv(in, num_classes);
}

}  // namespace expadam
