#pragma once

#include <vector>

namespace modgen {

// Feature-covariance spectrum. Default form is the nested power law
// lambda_i = c * (i^(-omega^-dim) - (i+1)^(-omega^-dim)); a nonempty table
// overrides it with explicit eigenvalues (zero beyond the table).
struct SpectrumSpec {
  double c = 1.0;
  double omega = 1.5;
  int dim = 1;
  std::vector<double> table;

  bool tabulated() const { return !table.empty(); }
  double exponent() const;
  double lambda(long i) const;        // 1-based index
  double total_trace() const;
  double trace_tail(long p) const;    // sum of lambda_i for i > p
  double trace_head(long p) const { return total_trace() - trace_tail(p); }
  double effective_dim() const;       // (sum lambda)^2 / sum lambda^2
};

}  // namespace modgen
