#include "modgen/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace modgen {

namespace {

constexpr double kDegenerateTol = 1e-9;

void check_sine(const KernelSpec& spec) {
  if (std::abs(spec.v.dot(spec.u)) <= kDegenerateTol)
    throw std::runtime_error("sine kernel: degenerate projection, |v'u| ~ 0");
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x1,
                   const Eigen::VectorXd& x2) {
  double s2 = 2.0 * spec.sigma * spec.sigma;
  switch (spec.kind) {
    case KernelKind::SineLinear: {
      check_sine(spec);
      double g = spec.v.dot(spec.u);
      double s1 = x1.dot(spec.u) / g, sb = x2.dot(spec.u) / g;
      Eigen::VectorXd w1 = x1 - s1 * spec.v, w2 = x2 - sb * spec.v;
      double ds = s1 - sb;
      return std::exp(-ds * ds / s2) + std::exp(-(w1 - w2).squaredNorm() / s2);
    }
    case KernelKind::RbfProjection: {
      double q = ((x1 - x2).transpose() * spec.U).squaredNorm();
      return std::exp(-q / s2);
    }
    case KernelKind::Distance: {
      double dr = (x1 - spec.u).norm() - (x2 - spec.u).norm();
      return std::exp(-dr * dr / s2);
    }
  }
  throw std::logic_error("kernel_eval: unknown kind");
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& batch,
                              int per_output) {
  if (batch.rows() == 0) throw std::invalid_argument("kernel_matrix: empty batch");
  long n = batch.rows();
  Eigen::MatrixXd small(n, n);
  double s2 = 2.0 * spec.sigma * spec.sigma;
  if (spec.kind == KernelKind::SineLinear) {
    check_sine(spec);
    double g = spec.v.dot(spec.u);
    Eigen::VectorXd s = batch * spec.u / g;
    Eigen::MatrixXd W = batch - s * spec.v.transpose();
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j <= i; ++j) {
        double ds = s[i] - s[j];
        double v = std::exp(-ds * ds / s2) +
                   std::exp(-(W.row(i) - W.row(j)).squaredNorm() / s2);
        small(i, j) = v;
        small(j, i) = v;
      }
    }
  } else if (spec.kind == KernelKind::RbfProjection) {
    Eigen::MatrixXd proj = batch * spec.U;
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j <= i; ++j) {
        double v = std::exp(-(proj.row(i) - proj.row(j)).squaredNorm() / s2);
        small(i, j) = v;
        small(j, i) = v;
      }
    }
  } else {
    Eigen::VectorXd r = (batch.rowwise() - spec.u.transpose()).rowwise().norm();
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j <= i; ++j) {
        double dr = r[i] - r[j];
        double v = std::exp(-dr * dr / s2);
        small(i, j) = v;
        small(j, i) = v;
      }
    }
  }
  if (per_output <= 1) return small;
  long d = per_output;
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * d, n * d);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      for (long a = 0; a < d; ++a) big(i * d + a, j * d + a) = small(i, j);
  return big;
}

namespace {

// factor K + jit I, escalating jitter tenfold on failure
Eigen::LLT<Eigen::MatrixXd> factor_with_escalation(const Eigen::MatrixXd& K,
                                                   double jitter,
                                                   double* jitter_used) {
  double mean_diag = K.diagonal().mean();
  double cap = 1e-2 * mean_diag;
  double jit = jitter;
  for (;;) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jit;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jit;
      return llt;
    }
    double next = jit <= 0.0 ? 1e-12 * std::max(mean_diag, 1e-30) : jit * 10.0;
    if (next > cap)
      throw std::runtime_error("kernel_loss: factorization failed at jitter cap");
    jit = next;
  }
}

}  // namespace

double kernel_loss(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                   double jitter) {
  if (K.rows() != K.cols() || K.rows() != y.size())
    throw std::invalid_argument("kernel_loss: shape mismatch");
  auto llt = factor_with_escalation(K, jitter, nullptr);
  return y.dot(llt.solve(y));
}

KernelGrads kernel_loss_grad(const KernelSpec& spec, const Eigen::MatrixXd& batch,
                             const Eigen::VectorXd& y, double jitter_scale,
                             int per_output) {
  long n = batch.rows();
  int d = per_output;
  if (y.size() != n * d)
    throw std::invalid_argument("kernel_loss_grad: target length mismatch");
  Eigen::MatrixXd K = kernel_matrix(spec, batch, 1);
  double jit0 = jitter_scale * K.diagonal().mean();
  KernelGrads out;
  auto llt = factor_with_escalation(K, jit0, &out.jitter_used);

  // C = sum over output coords of alpha alpha'; dL/dK = -C
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < d; ++a) {
    Eigen::VectorXd ya(n);
    for (long i = 0; i < n; ++i) ya[i] = y[i * d + a];
    Eigen::VectorXd alpha = llt.solve(ya);
    out.loss += ya.dot(alpha);
    C += alpha * alpha.transpose();
  }

  double sig2 = spec.sigma * spec.sigma;
  if (spec.kind == KernelKind::SineLinear) {
    double g = spec.v.dot(spec.u);
    Eigen::VectorXd s = batch * spec.u / g;
    Eigen::MatrixXd W = batch - s * spec.v.transpose();
    long m = batch.cols();
    out.du = Eigen::VectorXd::Zero(m);
    out.dv = Eigen::VectorXd::Zero(m);
    double acc_t1 = 0.0, acc_cv_dwv = 0.0;
    Eigen::VectorXd acc_cv_dw = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd dw(m);
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        double ds = s[i] - s[j];
        dw = (W.row(i) - W.row(j)).transpose();
        double t1 = std::exp(-ds * ds / (2.0 * sig2));
        double t2 = std::exp(-dw.squaredNorm() / (2.0 * sig2));
        double c = C(i, j);
        double dwv = dw.dot(spec.v);
        double coef_u = -c * (-t1 * ds + t2 * dwv) / (g * sig2);
        out.du += coef_u * dw;
        acc_t1 += -c * t1 * ds * ds;
        double coef_v = -c * (-t2 * ds / sig2);
        acc_cv_dwv += coef_v * dwv;
        acc_cv_dw += coef_v * dw;
      }
    }
    out.dv = (acc_t1 / (g * sig2)) * spec.u + (acc_cv_dwv / g) * spec.u - acc_cv_dw;
  } else if (spec.kind == KernelKind::RbfProjection) {
    Eigen::MatrixXd proj = batch * spec.U;
    Eigen::MatrixXd Ck(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        Ck(i, j) =
            C(i, j) * std::exp(-(proj.row(i) - proj.row(j)).squaredNorm() /
                               (2.0 * sig2));
    Eigen::VectorXd r = Ck.rowwise().sum();
    out.dU = (2.0 / sig2) * batch.transpose() *
             ((r.asDiagonal() * batch - Ck * batch) * spec.U);
  } else {
    Eigen::VectorXd r = (batch.rowwise() - spec.u.transpose()).rowwise().norm();
    long m = batch.cols();
    out.du = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd gi(m), gj(m);
    for (long i = 0; i < n; ++i) {
      if (r[i] < 1e-12) continue;
      gi = (spec.u - batch.row(i).transpose()) / r[i];
      for (long j = 0; j < n; ++j) {
        if (i == j || r[j] < 1e-12) continue;
        double dr = r[i] - r[j];
        double kap = std::exp(-dr * dr / (2.0 * sig2));
        gj = (spec.u - batch.row(j).transpose()) / r[j];
        out.du += (C(i, j) * kap * dr / sig2) * (gi - gj);
      }
    }
  }
  return out;
}

}  // namespace modgen
