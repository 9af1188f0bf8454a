#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "modgen/rng.hpp"

namespace modgen {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline Eigen::MatrixXd sample_gaussian_matrix(RngStream& rng, Eigen::Index rows,
                                              Eigen::Index cols, double mean,
                                              double std) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("sample_gaussian_matrix: empty shape");
  if (std < 0) throw std::invalid_argument("sample_gaussian_matrix: negative std");
  return rng.normal_mat(rows, cols, mean, std);
}

inline Eigen::VectorXd sample_unit_sphere(RngStream& rng, Eigen::Index m) {
  return rng.unit_sphere(m);
}

// Moore-Penrose inverse; singular values below tol * sigma_max are dropped.
template <typename Derived>
MatrixX<typename Derived::Scalar> pinv(const Eigen::MatrixBase<Derived>& m,
                                       double tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  if (!m.allFinite()) throw std::invalid_argument("pinv: non-finite input");
  Eigen::BDCSVD<MatrixX<Scalar>> svd(m.derived(),
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Scalar cutoff = sv.size() ? Scalar(tol) * sv(0) : Scalar(0);
  VectorX<Scalar> inv_sv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    inv_sv[i] = sv[i] > cutoff ? Scalar(1) / sv[i] : Scalar(0);
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

// minimum-norm least squares via SVD with the same relative cutoff as pinv
template <typename DerivedA, typename DerivedB>
VectorX<typename DerivedA::Scalar> min_norm_lstsq(const Eigen::MatrixBase<DerivedA>& A,
                                                  const Eigen::MatrixBase<DerivedB>& b,
                                                  double tol = 1e-10) {
  using Scalar = typename DerivedA::Scalar;
  if (A.rows() != b.rows()) throw std::invalid_argument("min_norm_lstsq: shape mismatch");
  Eigen::BDCSVD<MatrixX<Scalar>> svd(A.derived(),
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(tol);
  return svd.solve(b.derived());
}

class KahanSum {
 public:
  void add(double x) {
    double y = x - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// compensated two-pass mean and standard error; summation order is the vector order
inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  if (xs.empty()) return r;
  KahanSum s;
  for (double x : xs) s.add(x);
  r.mean = s.value() / double(xs.size());
  if (xs.size() < 2) return r;
  KahanSum sq;
  for (double x : xs) sq.add((x - r.mean) * (x - r.mean));
  double var = sq.value() / double(xs.size() - 1);
  r.se = std::sqrt(var / double(xs.size()));
  return r;
}

}  // namespace modgen
