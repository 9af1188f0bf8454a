#pragma once

#include <Eigen/Dense>

namespace modgen {

enum class KernelKind { SineLinear, RbfProjection, Distance };

// sine-linear: kappa = exp(-(s1-s2)^2/2s^2) + exp(-||w1-w2||^2/2s^2) with
// s = x'u / v'u and w = x - s*v; rbf-projection: kappa = exp(-||(x1-x2)'U||^2/2s^2);
// distance: kappa = exp(-(||x1-u|| - ||x2-u||)^2/2s^2)
struct KernelSpec {
  KernelKind kind = KernelKind::SineLinear;
  double sigma = 1.0;
  Eigen::VectorXd u, v;  // sine-linear (u, v) and distance (u)
  Eigen::MatrixXd U;     // rbf-projection
};

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x1,
                   const Eigen::VectorXd& x2);

// rows of batch are inputs; for per_output d > 1 each kappa entry expands to
// kappa * I_d blockwise
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& batch,
                              int per_output = 1);

// y'(K + jitter I)^-1 y via Cholesky; on factorization failure the jitter
// escalates tenfold up to 1e-2 * mean(diag K)
double kernel_loss(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                   double jitter);

struct KernelGrads {
  double loss = 0.0;
  Eigen::VectorXd du, dv;  // sine-linear, distance
  Eigen::MatrixXd dU;      // rbf-projection
  double jitter_used = 0.0;
};

// gradient of y'(K + jitter I)^-1 y with respect to the projection variables,
// through dL/dK = -alpha alpha' with alpha = (K + jitter I)^-1 y; jitter is
// relative to mean(diag K); per_output d > 1 solves per output coordinate
// (y laid out sample-major) against the shared small K
KernelGrads kernel_loss_grad(const KernelSpec& spec, const Eigen::MatrixXd& batch,
                             const Eigen::VectorXd& y, double jitter_scale,
                             int per_output = 1);

}  // namespace modgen
