#include "modgen/spectrum.hpp"

#include <cmath>
#include <stdexcept>

#include "modgen/numerics.hpp"

namespace modgen {

double SpectrumSpec::exponent() const {
  if (c <= 0.0) throw std::invalid_argument("spectrum: c must be > 0");
  if (omega <= 1.0) throw std::invalid_argument("spectrum: omega must be > 1");
  if (dim < 1) throw std::invalid_argument("spectrum: dim must be >= 1");
  return std::pow(omega, -double(dim));
}

double SpectrumSpec::lambda(long i) const {
  if (i < 1) throw std::invalid_argument("spectrum: index is 1-based");
  if (tabulated()) return i <= long(table.size()) ? table[i - 1] : 0.0;
  double e = exponent();
  return c * (std::pow(double(i), -e) - std::pow(double(i + 1), -e));
}

double SpectrumSpec::total_trace() const {
  if (!tabulated()) {
    if (c <= 0.0) throw std::invalid_argument("spectrum: c must be > 0");
    return c;
  }
  KahanSum s;
  for (double v : table) s.add(v);
  return s.value();
}

double SpectrumSpec::trace_tail(long p) const {
  if (p < 0) throw std::invalid_argument("spectrum: negative cutoff");
  if (tabulated()) {
    KahanSum s;
    for (long i = p; i < long(table.size()); ++i) s.add(table[i]);
    return s.value();
  }
  return c * std::pow(double(p + 1), -exponent());
}

double SpectrumSpec::effective_dim() const {
  KahanSum sq;
  if (tabulated()) {
    for (double v : table) sq.add(v * v);
    double tr = total_trace();
    return tr * tr / sq.value();
  }
  // stop once the tail bound sum_{i>N} lambda_i^2 <= lambda_{N+1} * tail(N)
  // is negligible against the accumulated sum
  double tr = total_trace();
  for (long i = 1;; ++i) {
    double l = lambda(i);
    sq.add(l * l);
    if (i % 512 == 0) {
      double bound = lambda(i + 1) * trace_tail(i);
      if (bound < 1e-6 * sq.value()) break;
    }
    if (i > 200000000) break;
  }
  return tr * tr / sq.value();
}

}  // namespace modgen
