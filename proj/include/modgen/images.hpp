#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modgen/rng.hpp"

namespace modgen {

// planar byte images (R plane, G plane, B plane, row-major within a plane)
struct ImageSet {
  int height = 32;
  int width = 32;
  int channels = 3;
  std::vector<std::uint8_t> pixels;  // count() * dim() bytes
  std::vector<int> labels;           // 0..9

  int dim() const { return height * width * channels; }
  long count() const { return long(labels.size()); }
};

ImageSet load_cifar10(const std::string& path);
ImageSet load_cifar10(const std::vector<std::string>& paths);
void save_cifar10(const ImageSet& set, const std::string& path);

// procedurally generated 8x8 RGB substitutes with class-dependent structure,
// so the full pipeline runs without the real dataset
ImageSet gen_toy_images(RngStream& rng, long per_class);

struct ChannelStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stdev{};
};

ChannelStats channel_stats(const ImageSet& set);

struct CompositionalOpts {
  double ood_split = 0.0;      // fraction of class tuples held out (0 = off)
  bool ood_test_side = false;  // emit the held-out side instead of the kept side
  double noise_sigma = 0.0;    // Gaussian noise added after concatenation
  bool normalize = true;
  const ChannelStats* stats = nullptr;  // default: computed from the source set
};

struct CompositionalDataset {
  int k = 1;
  int image_dim = 0;
  Eigen::MatrixXd X;       // n x k*image_dim
  Eigen::MatrixXd Y;       // n x 10k, k-hot
  Eigen::MatrixXi combos;  // n x k class tuples
};

CompositionalDataset gen_compositional(RngStream& rng, const ImageSet& images,
                                       int k, long n,
                                       const CompositionalOpts& opts = {});

}  // namespace modgen
