#pragma once

#include <vector>

#include "modgen/kernels.hpp"
#include "modgen/rng.hpp"

namespace modgen {

struct InitConfig {
  long iters = 1000;
  int batch_size = 128;
  double lr = 0.01;
  double jitter = 1e-6;  // relative to mean(diag K)
  int K_modules = 1;
  int proj_dim = 1;      // rbf-projection only
  bool class_slice = false;  // multi-column targets: optimize one column per iteration
};

struct InitResult {
  KernelSpec spec;
  std::vector<double> loss_trace;  // objective at every iteration
  int degenerate_resets = 0;
};

// Projection search: random init, then per iteration draw a random subsample,
// form the kernel objective y'(K + jitter I)^-1 y on it, and take a plain
// gradient step on the projection variables.
InitResult find_module_projection(const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Y,
                                  const KernelSpec& spec_template,
                                  const InitConfig& cfg, RngStream& rng);

// cfg.K_modules independent searches on isolated substreams
std::vector<InitResult> init_all_modules(const Eigen::MatrixXd& X,
                                         const Eigen::MatrixXd& Y,
                                         const KernelSpec& spec_template,
                                         const InitConfig& cfg, RngStream& rng);

}  // namespace modgen
