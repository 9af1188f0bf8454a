#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace modgen {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) { return splitmix64(x); }

// Counter-based stream: the sequence is a pure function of (seed, stream_id),
// and substreams derived from distinct ids are independent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : base_(mix64(mix64(seed + 0x632BE59BD9B4E019ULL) ^
                    mix64(stream_id + 0x9E3779B97F4A7C15ULL))),
        state_(base_) {}

  RngStream substream(std::uint64_t id) const {
    RngStream child(0, 0);
    child.base_ = mix64(base_ ^ mix64(id + 0xD1B54A32D192ED03ULL));
    child.state_ = child.base_;
    child.cached_valid_ = false;
    return child;
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::int64_t uniform_int(std::int64_t n) {
    return std::int64_t(next_u64() % std::uint64_t(n));
  }

  double normal() {
    if (cached_valid_) {
      cached_valid_ = false;
      return cached_;
    }
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * M_PI * u2;
    cached_ = r * std::sin(th);
    cached_valid_ = true;
    return r * std::cos(th);
  }

  Eigen::VectorXd normal_vec(Eigen::Index n, double mean = 0.0, double std = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = mean + std * normal();
    return v;
  }

  Eigen::MatrixXd normal_mat(Eigen::Index rows, Eigen::Index cols, double mean = 0.0,
                             double std = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = mean + std * normal();
    return m;
  }

  Eigen::VectorXd unit_sphere(Eigen::Index m) {
    if (m < 1) throw std::invalid_argument("unit_sphere: dimension must be >= 1");
    Eigen::VectorXd v = normal_vec(m);
    double nrm = v.norm();
    while (nrm < 1e-300) {
      v = normal_vec(m);
      nrm = v.norm();
    }
    return v / nrm;
  }

  // first k of a partial Fisher-Yates pass over 0..n-1
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + int(uniform_int(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  void shuffle(std::vector<int>& v) {
    for (int i = int(v.size()) - 1; i > 0; --i) {
      int j = int(uniform_int(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t base_;
  std::uint64_t state_;
  double cached_ = 0.0;
  bool cached_valid_ = false;
};

}  // namespace modgen
