#include "modgen/sine_task.hpp"

#include <cmath>
#include <stdexcept>

namespace modgen {

SineTask gen_sine_task(RngStream& rng, int k, int m, int tau, bool nonlinear) {
  if (k < 1 || m < 1 || tau < 1)
    throw std::invalid_argument("gen_sine_task: k, m, tau >= 1");
  SineTask t;
  t.k = k;
  t.m = m;
  t.tau = tau;
  t.nonlinear = nonlinear;
  t.amp = rng.normal_mat(k, tau);
  t.freq = rng.normal_mat(k, tau, 0.0, 2.0 * M_PI);
  t.phase = Eigen::MatrixXd(k, tau);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < tau; ++j) t.phase(i, j) = rng.uniform(-M_PI, M_PI);
  t.U = Eigen::MatrixXd(k, m);
  for (int i = 0; i < k; ++i) t.U.row(i) = rng.unit_sphere(m).transpose();
  return t;
}

namespace {

Eigen::VectorXd eval_components(const SineTask& task, const Eigen::MatrixXd& X,
                                bool distance) {
  if (X.cols() != task.m) throw std::invalid_argument("eval_sine: input dim mismatch");
  long n = X.rows();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s(n);
  for (int i = 0; i < task.k; ++i) {
    if (distance)
      s = (X.rowwise() - task.U.row(i)).rowwise().norm();
    else
      s = X * task.U.row(i).transpose();
    for (int j = 0; j < task.tau; ++j)
      y += task.amp(i, j) *
           (task.freq(i, j) * s.array() + task.phase(i, j)).sin().matrix();
  }
  return y / std::sqrt(double(task.k));
}

}  // namespace

Eigen::VectorXd eval_sine(const SineTask& task, const Eigen::MatrixXd& X) {
  return eval_components(task, X, false);
}

Eigen::VectorXd eval_sine_nonlinear(const SineTask& task, const Eigen::MatrixXd& X) {
  return eval_components(task, X, true);
}

Eigen::VectorXd eval_task(const SineTask& task, const Eigen::MatrixXd& X) {
  return eval_components(task, X, task.nonlinear);
}

RegressionData sample_sine_dataset(const SineTask& task, RngStream& rng, long n) {
  RegressionData d;
  d.X = rng.normal_mat(n, task.m);
  d.y = eval_task(task, d.X);
  return d;
}

}  // namespace modgen
