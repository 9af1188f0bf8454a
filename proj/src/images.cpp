#include "modgen/images.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace modgen {

namespace {
constexpr long kCifarRecord = 3073;
constexpr std::uint64_t kComboSalt = 0xA24BAED4963EE407ULL;
}  // namespace

ImageSet load_cifar10(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_cifar10: cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (buf.size() % kCifarRecord != 0)
    throw std::runtime_error("load_cifar10: size of " + path +
                             " is not a multiple of 3073");
  long n = long(buf.size()) / kCifarRecord;
  ImageSet set;
  set.pixels.resize(size_t(n) * 3072);
  set.labels.resize(n);
  for (long i = 0; i < n; ++i) {
    const auto* rec = reinterpret_cast<const std::uint8_t*>(buf.data()) +
                      i * kCifarRecord;
    if (rec[0] >= 10)
      throw std::runtime_error("load_cifar10: corrupt label in " + path);
    set.labels[i] = rec[0];
    std::copy(rec + 1, rec + kCifarRecord, set.pixels.begin() + i * 3072);
  }
  return set;
}

ImageSet load_cifar10(const std::vector<std::string>& paths) {
  ImageSet all;
  for (const auto& p : paths) {
    ImageSet s = load_cifar10(p);
    all.pixels.insert(all.pixels.end(), s.pixels.begin(), s.pixels.end());
    all.labels.insert(all.labels.end(), s.labels.begin(), s.labels.end());
  }
  return all;
}

void save_cifar10(const ImageSet& set, const std::string& path) {
  if (set.dim() != 3072)
    throw std::invalid_argument("save_cifar10: requires 32x32x3 images");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_cifar10: cannot open " + path);
  for (long i = 0; i < set.count(); ++i) {
    char label = char(set.labels[i]);
    out.write(&label, 1);
    out.write(reinterpret_cast<const char*>(set.pixels.data()) + i * 3072, 3072);
  }
}

ImageSet gen_toy_images(RngStream& rng, long per_class) {
  if (per_class < 1) throw std::invalid_argument("gen_toy_images: per_class >= 1");
  ImageSet set;
  set.height = 8;
  set.width = 8;
  set.channels = 3;
  int dim = set.dim();
  std::vector<std::vector<double>> base(10, std::vector<double>(dim));
  for (int c = 0; c < 10; ++c) {
    RngStream proto(0x70F1D0, std::uint64_t(c));
    for (int j = 0; j < dim; ++j) base[c][j] = proto.uniform(0.0, 255.0);
  }
  set.pixels.resize(size_t(10) * per_class * dim);
  set.labels.resize(10 * per_class);
  long idx = 0;
  for (int c = 0; c < 10; ++c) {
    for (long r = 0; r < per_class; ++r, ++idx) {
      set.labels[idx] = c;
      for (int j = 0; j < dim; ++j) {
        double v = base[c][j] + 25.0 * rng.normal();
        set.pixels[idx * dim + j] =
            std::uint8_t(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return set;
}

ChannelStats channel_stats(const ImageSet& set) {
  if (set.count() == 0) throw std::invalid_argument("channel_stats: empty set");
  ChannelStats st;
  int plane = set.height * set.width;
  for (int c = 0; c < set.channels; ++c) {
    double sum = 0.0, sq = 0.0;
    long cnt = 0;
    for (long i = 0; i < set.count(); ++i) {
      const auto* px = set.pixels.data() + i * set.dim() + c * plane;
      for (int j = 0; j < plane; ++j) {
        double v = px[j] / 255.0;
        sum += v;
        sq += v * v;
        ++cnt;
      }
    }
    double mean = sum / double(cnt);
    double var = std::max(sq / double(cnt) - mean * mean, 1e-12);
    st.mean[c] = mean;
    st.stdev[c] = std::sqrt(var);
  }
  return st;
}

namespace {

double combo_hash_unit(const Eigen::VectorXi& classes) {
  std::uint64_t h = kComboSalt;
  for (int i = 0; i < classes.size(); ++i) {
    std::uint64_t s = h ^ (std::uint64_t(classes[i]) + 0x9E3779B97F4A7C15ULL *
                                                           (std::uint64_t(i) + 1));
    h = splitmix64(s);
  }
  return double(h >> 11) * 0x1.0p-53;
}

}  // namespace

CompositionalDataset gen_compositional(RngStream& rng, const ImageSet& images,
                                       int k, long n,
                                       const CompositionalOpts& opts) {
  if (k < 1 || n < 1) throw std::invalid_argument("gen_compositional: k, n >= 1");
  if (images.count() < k)
    throw std::invalid_argument("gen_compositional: fewer images than k");
  ChannelStats st = opts.stats ? *opts.stats : channel_stats(images);
  int dim = images.dim();
  int plane = images.height * images.width;
  CompositionalDataset ds;
  ds.k = k;
  ds.image_dim = dim;
  ds.X = Eigen::MatrixXd(n, long(k) * dim);
  ds.Y = Eigen::MatrixXd::Zero(n, long(k) * 10);
  ds.combos = Eigen::MatrixXi(n, k);

  Eigen::VectorXi classes(k);
  long guard = 0;
  for (long row = 0; row < n;) {
    std::vector<int> picks = rng.sample_without_replacement(int(images.count()), k);
    for (int j = 0; j < k; ++j) classes[j] = images.labels[picks[j]];
    if (opts.ood_split > 0.0) {
      bool held_out = combo_hash_unit(classes) < opts.ood_split;
      if (held_out != opts.ood_test_side) {
        if (++guard > 1000 * n + 1000)
          throw std::runtime_error("gen_compositional: combo rejection not terminating");
        continue;
      }
    }
    for (int j = 0; j < k; ++j) {
      const auto* px = images.pixels.data() + long(picks[j]) * dim;
      for (int t = 0; t < dim; ++t) {
        double v = px[t] / 255.0;
        if (opts.normalize) {
          int c = t / plane;
          v = (v - st.mean[c]) / st.stdev[c];
        }
        ds.X(row, long(j) * dim + t) = v;
      }
      ds.Y(row, long(j) * 10 + classes[j]) = 1.0;
      ds.combos(row, j) = classes[j];
    }
    if (opts.noise_sigma > 0.0)
      for (long t = 0; t < ds.X.cols(); ++t)
        ds.X(row, t) += opts.noise_sigma * rng.normal();
    ++row;
  }
  return ds;
}

}  // namespace modgen
