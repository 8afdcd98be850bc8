#pragma once

namespace mtomo {

/// Every numeric tolerance used by the library lives here so tests and
/// production code agree on a single set of thresholds.
struct NumericPolicy {
  double hermitian_tol = 1e-12;       // |m(i,j) - conj(m(j,i))| accepted as Hermitian
  double negative_eig_tol = 1e-10;    // eigenvalues above -tol count as PSD
  double log_floor = 1e-12;           // eigenvalue clamp for matrix logarithms
  double offdiag_zero = 1e-14;        // |lambda_1K| below this uses the diagonal branch
  double population_floor = 1e-12;    // x11 at or below this makes prediction undefined
  double feasibility_margin = 1e-12;  // x11 + xKK must stay below 1 - margin
  double record_slack = 1e-9;         // slack on record bound checks
  double newton_tol = 1e-14;          // residual infinity norm for Newton convergence
  int newton_max_iter = 200;
};

inline constexpr NumericPolicy kPolicy{};

}  // namespace mtomo
