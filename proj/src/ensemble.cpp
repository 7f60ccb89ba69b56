#include "expadam/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "expadam/csv.hpp"

namespace expadam {

ProbabilityMatrix::ProbabilityMatrix(std::size_t rows, std::size_t cols, std::vector<double> probs)
    : rows_(rows), cols_(cols), probs_(std::move(probs)) {
  if (cols_ == 0) throw std::invalid_argument("probability matrix: need at least one column");
  if (probs_.size() != rows_ * cols_)
    throw std::invalid_argument("probability matrix: data length does not match " +
                                std::to_string(rows_) + "x" + std::to_string(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (double p : row(i)) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw std::invalid_argument("probability matrix: row " + std::to_string(i) +
                                    " has a negative or non-finite entry");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > kRowSumTolerance)
      throw std::invalid_argument("probability matrix: row " + std::to_string(i) + " sums to " +
                                  csv::format_double(sum));
  }
}

ProbabilityMatrix::ProbabilityMatrix(const Tensor& probs)
    : ProbabilityMatrix(probs.shape().size() == 2 ? probs.shape()[0] : 0,
                        probs.shape().size() == 2 ? probs.shape()[1] : 0, probs.values()) {}

std::size_t ProbabilityMatrix::argmax(std::size_t i) const {
  auto r = row(i);
  std::size_t best = 0;
  for (std::size_t c = 1; c < cols_; ++c)
    if (r[c] > r[best]) best = c;
  return best;
}

namespace {

void check_members(std::span<const ProbabilityMatrix> members) {
  if (members.empty()) throw std::invalid_argument("fusion: no members");
  for (const auto& m : members)
    if (m.rows() != members.front().rows() || m.cols() != members.front().cols())
      throw std::invalid_argument("fusion: member shapes differ");
}

// Mean taken as offsets from the first member, so identical members
// reproduce it bit-for-bit.
ProbabilityMatrix combine(std::span<const ProbabilityMatrix> members, std::span<const double> w) {
  const auto& base = members.front();
  std::vector<double> out = base.values();
  for (std::size_t k = 1; k < members.size(); ++k) {
    const auto& v = members[k].values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[k] * (v[i] - base.values()[i]);
  }
  return ProbabilityMatrix(base.rows(), base.cols(), std::move(out));
}

}  // namespace

ProbabilityMatrix fuse_average(std::span<const ProbabilityMatrix> members) {
  check_members(members);
  const std::vector<double> w(members.size(), 1.0 / static_cast<double>(members.size()));
  return combine(members, w);
}

ProbabilityMatrix fuse_weighted_sum(std::span<const ProbabilityMatrix> members,
                                    std::span<const double> weights) {
  check_members(members);
  if (weights.size() != members.size())
    throw std::invalid_argument("fuse_weighted_sum: one weight per member required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("fuse_weighted_sum: weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("fuse_weighted_sum: weights are all zero");
  std::vector<double> w(weights.begin(), weights.end());
  for (auto& x : w) x /= total;
  return combine(members, w);
}

void write_csv(const ProbabilityMatrix& pm, std::ostream& out) {
  for (std::size_t c = 0; c < pm.cols(); ++c) out << (c ? ",c" : "c") << c;
  out << '\n';
  for (std::size_t i = 0; i < pm.rows(); ++i) {
    auto r = pm.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << csv::format_double(r[c]);
    out << '\n';
  }
}

void write_csv(const ProbabilityMatrix& pm, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_csv(pm, out);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

ProbabilityMatrix read_probability_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("probability csv: missing header");
  const auto header = csv::split_line(line);
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] != "c" + std::to_string(c))
      throw std::runtime_error("probability csv: header must be c0..cC-1");
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != header.size()) throw std::runtime_error("probability csv: wrong field count");
    for (const auto& f : fields) values.push_back(csv::parse_double(f));
    ++rows;
  }
  return ProbabilityMatrix(rows, header.size(), std::move(values));
}

ProbabilityMatrix read_probability_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return read_probability_csv(in);
}

}  // namespace expadam
