#pragma once

#include <Eigen/Dense>

#include "modgen/rng.hpp"

namespace modgen {

// Sum of k random sinusoidal components, each depending on x only through a
// projection onto a unit direction u_i (or the distance to u_i in the
// nonlinear variant); tau sinusoids per component, output scaled by 1/sqrt(k).
struct SineTask {
  int k = 1;
  int m = 1;
  int tau = 3;
  bool nonlinear = false;
  Eigen::MatrixXd amp;    // k x tau
  Eigen::MatrixXd freq;   // k x tau
  Eigen::MatrixXd phase;  // k x tau
  Eigen::MatrixXd U;      // k x m, rows on the unit sphere
};

SineTask gen_sine_task(RngStream& rng, int k, int m, int tau = 3,
                       bool nonlinear = false);

// X is n x m, one input per row
Eigen::VectorXd eval_sine(const SineTask& task, const Eigen::MatrixXd& X);

// projection u_i'x replaced by the distance ||u_i - x||
Eigen::VectorXd eval_sine_nonlinear(const SineTask& task, const Eigen::MatrixXd& X);

// dispatch on task.nonlinear
Eigen::VectorXd eval_task(const SineTask& task, const Eigen::MatrixXd& X);

struct RegressionData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

RegressionData sample_sine_dataset(const SineTask& task, RngStream& rng, long n);

}  // namespace modgen
