#pragma once

#include <vector>

#include <Eigen/Dense>

#include "modgen/rng.hpp"

namespace modgen {

struct DenseLayer {
  Eigen::MatrixXd W;  // in x out
  Eigen::VectorXd b;
};

struct BatchNorm {
  Eigen::VectorXd gamma, beta, run_mean, run_var;
  double momentum = 0.9;
  double eps = 1e-5;
};

// dense net, ReLU on all but the last layer, optional batchnorm before each ReLU
struct Mlp {
  std::vector<DenseLayer> layers;
  std::vector<BatchNorm> bn;  // aligned with hidden layers when enabled
  bool batchnorm = false;

  int in_dim() const { return int(layers.front().W.rows()); }
  int out_dim() const { return int(layers.back().W.cols()); }
  long param_count() const;
};

Mlp init_mlp(RngStream& rng, const std::vector<int>& layer_sizes, bool batchnorm);
Mlp zero_like(const Mlp& model);

struct MlpCache {
  std::vector<Eigen::MatrixXd> input;     // activation entering each layer
  std::vector<Eigen::MatrixXd> xhat;      // batchnorm-normalized pre-activation
  std::vector<Eigen::VectorXd> inv_std;   // per-feature 1/sqrt(var + eps)
  std::vector<Eigen::MatrixXd> relu_in;   // pre-ReLU values
};

// train mode uses batch statistics and updates running stats (mutating model)
Eigen::MatrixXd mlp_forward(Mlp& model, const Eigen::MatrixXd& X, bool train_mode,
                            MlpCache* cache = nullptr);
Eigen::MatrixXd mlp_forward(const Mlp& model, const Eigen::MatrixXd& X);

// backprop dY through the cached pass, accumulating into grads; returns dX
Eigen::MatrixXd mlp_backward(const Mlp& model, const MlpCache& cache,
                             const Eigen::MatrixXd& dY, Mlp& grads);

enum class ModularMode { RegressionSum, ClassificationConcat };

// regression-sum: out(x) = (1/sqrt(K)) sum_j body_j(u_j'x), with the
// nonlinear option replacing u_j'x by ||u_j - x||; classification-concat:
// out(x) = head(concat_j body(U_j'x)) with an optionally shared body
struct ModularNet {
  ModularMode mode = ModularMode::RegressionSum;
  bool nonlinear_proj = false;
  bool shared_bodies = false;
  int K = 1;
  std::vector<Eigen::MatrixXd> proj;  // per module, in_dim x proj_dim
  std::vector<Mlp> bodies;            // size K, or 1 when shared
  DenseLayer head;                    // classification mode only

  const Mlp& body(int j) const { return bodies[shared_bodies ? 0 : j]; }
  Mlp& body(int j) { return bodies[shared_bodies ? 0 : j]; }
  long param_count() const;
};

ModularNet init_modular_regression(RngStream& rng, int K, int in_dim,
                                   const std::vector<int>& hidden, bool nonlinear);
ModularNet init_modular_classification(RngStream& rng, int K, int in_dim,
                                       int proj_dim, const std::vector<int>& hidden,
                                       int out_dim, bool batchnorm, bool shared);
ModularNet zero_like(const ModularNet& model);

struct ModularCache {
  std::vector<Eigen::MatrixXd> s;  // projected input per module
  std::vector<MlpCache> bodies;
  std::vector<Eigen::MatrixXd> body_out;
  Eigen::MatrixXd concat;
};

Eigen::MatrixXd modular_forward(ModularNet& model, const Eigen::MatrixXd& X,
                                bool train_mode, ModularCache* cache = nullptr);
Eigen::MatrixXd modular_forward(const ModularNet& model, const Eigen::MatrixXd& X);

// accumulates into grads (shared bodies collapse into one slot); needs X for
// the projection gradients; train_projections=false skips them
void modular_backward(const ModularNet& model, const Eigen::MatrixXd& X,
                      const ModularCache& cache, const Eigen::MatrixXd& dY,
                      ModularNet& grads, bool train_projections = true);

enum class LossKind { Mse, SoftmaxPerBlock };

struct LossGrad {
  double loss = 0.0;
  Eigen::MatrixXd dpred;
};

// mse: mean over rows of the squared residual norm; softmax-per-block: 10-way
// cross entropy per block of 10 columns, averaged over rows and blocks
LossGrad loss_and_dpred(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& Y,
                        LossKind kind);

double mlp_loss_and_grad(Mlp& model, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& Y, LossKind kind, Mlp& grads,
                         bool train_mode = true);
double modular_loss_and_grad(ModularNet& model, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Y, LossKind kind,
                             ModularNet& grads, bool train_projections = true,
                             bool train_mode = true);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TensorView {
  double* data = nullptr;
  long size = 0;
};

std::vector<TensorView> param_views(Mlp& model);
std::vector<TensorView> param_views(ModularNet& model);
std::vector<TensorView> param_views(const Mlp& model);
std::vector<TensorView> param_views(const ModularNet& model);

struct AdamState {
  long t = 0;
  std::vector<Eigen::ArrayXd> m, v;
};

AdamState init_adam(const std::vector<TensorView>& params);
void adam_step(AdamState& state, const AdamHyper& hyper,
               const std::vector<TensorView>& params,
               const std::vector<TensorView>& grads);

struct TrainConfig {
  LossKind loss = LossKind::Mse;
  double lr = 1e-3;
  long iterations = 1000;
  int batch_size = 128;
  bool epochs_mode = false;  // sequential shuffled passes instead of iid batches
  int epochs = 1;
  double diverge_abort = 1e6;
  int record_every = 100;
  bool train_projections = true;
};

struct TrainResult {
  std::vector<double> loss_trace;
  double final_loss = 0.0;
  bool diverged = false;
  long steps = 0;
};

TrainResult train_mlp(Mlp& model, const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& Y, const TrainConfig& cfg,
                      RngStream& rng);
TrainResult train_modular(ModularNet& model, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& Y, const TrainConfig& cfg,
                          RngStream& rng);

enum class Metric { Mse, PerComponentAccuracy };

double evaluate(const Mlp& model, const Eigen::MatrixXd& X,
                const Eigen::MatrixXd& Y, Metric metric);
double evaluate(const ModularNet& model, const Eigen::MatrixXd& X,
                const Eigen::MatrixXd& Y, Metric metric);
double metric_of(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& Y,
                 Metric metric);

}  // namespace modgen
