#pragma once

#include <optional>
#include <vector>

#include "mtomo/linalg.hpp"
#include "mtomo/policy.hpp"

namespace mtomo::maxent {

/// Multipliers of the three constrained observables |1><1|, |1><K| (+h.c.)
/// and |K><K| in an N-level system. Basis indices are 1-based; |1> is the
/// all-zeros bitstring and |i> is the bitstring of i-1 with qubit 0 as the
/// least significant bit.
struct LagrangeSet {
  int dim_n = 4;
  int index_k = 2;
  double lam_11 = 0.0;
  Complex lam_1k{0.0, 0.0};
  double lam_kk = 0.0;

  /// Throws ValidationError unless dim_n is a power of two >= 4 and 2 <= K <= N.
  void validate() const;
  /// Dimensions other than 4 and 8 work but are not part of the tested surface.
  bool experimental() const { return dim_n != 4 && dim_n != 8; }
};

/// Eigen-structure of the exponent matrix. `eps` lists the N-2 zero
/// eigenvalues followed by eps3 <= eps4 from the {1,K} block. Eigenvectors
/// of the block are (k, 1) in the {|1>,|K>} coordinates.
struct ExponentSpectrum {
  std::vector<double> eps;
  double eps3 = 0.0;
  double eps4 = 0.0;
  Complex k3{0.0, 0.0};
  Complex k4{0.0, 0.0};
  /// Weight e^eps3 * |k3|^2/(|k3|^2+1) carried by |1><1|; in the diagonal
  /// branch a = e^{-lam_11} and b = e^{-lam_KK}, and k3 = k4 = 0 are unused.
  double a = 0.0;
  double b = 0.0;
  double z = 0.0;
  /// |lam_1K| fell below the off-diagonal threshold.
  bool diagonal = false;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m);

  const ComplexMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  /// 1-based basis indices, matching the record convention.
  Complex at(int i, int j) const { return m_(i - 1, j - 1); }

  /// Hermitian, unit trace and PSD within `tol`.
  bool is_valid(double tol = 1e-10) const;

 private:
  ComplexMatrix m_;
};

enum class Source { measured, predicted };

/// Mean values x11 = <|1><1|>, x1K (stored as the (1,K) entry of rho) and
/// the optional xKK.
struct MeasurementRecord {
  int dim_n = 4;
  int index_k = 2;
  double x_11 = 0.0;
  Complex x_1k{0.0, 0.0};
  std::optional<double> x_kk;
  Source kk_source = Source::measured;

  /// Range, normalisation and 2x2-minor positivity checks (ValidationError).
  void validate() const;
};

ComplexMatrix build_exponent(const LagrangeSet& ls);

ExponentSpectrum spectrum(const LagrangeSet& ls);

/// rho = exp(A)/Z assembled from the analytic block coefficients.
DensityMatrix density_from_lagrange(const LagrangeSet& ls);

MeasurementRecord forward_expectations(const LagrangeSet& ls);

/// d(x11, Re x1K, Im x1K, xKK) / d(lam_11, Re lam_1K, Im lam_1K, lam_KK).
Eigen::Matrix4d expectation_jacobian(const LagrangeSet& ls);

struct Prediction {
  double value = 0.0;
  bool clamped = false;  // |x1K|^2/x11 fell outside [0, 1 - x11]
};

/// Pure-state estimate xKK = |x1K|^2 / x11.
Prediction predict_population(double x_11, Complex x_1k);

enum class SolveMethod { closed_form, newton, grid };

struct SolveResult {
  LagrangeSet lambdas;
  bool near_singular = false;  // block eigenvalue raised to the log floor
  int iterations = 0;
};

/// Multipliers reproducing a complete record.
SolveResult solve_lagrange(const MeasurementRecord& mr, SolveMethod method = SolveMethod::closed_form);

/// Damped Newton from an explicit starting point.
SolveResult solve_newton(const MeasurementRecord& mr, const LagrangeSet& start);

struct Reconstruction {
  DensityMatrix rho;
  MeasurementRecord record;  // input record with xKK filled in when absent
  LagrangeSet lambdas;
  bool near_singular = false;
  bool prediction_clamped = false;
};

/// When the record has no room left for the unconstrained states
/// (x11 + xKK ~ 1), the MaxEnt multipliers diverge.
enum class Saturation {
  regularise_predicted,  // floor-regularise only a predicted xKK; supplied data throw InfeasibleRecordError
  regularise_always,     // also floor-regularise supplied xKK (pure-state backend truth)
};

/// Predict xKK when missing, shrink a non-positive 2x2 minor, handle
/// saturation per `sat`, solve for the multipliers and build the MaxEnt state.
Reconstruction reconstruct(const MeasurementRecord& mr, Saturation sat = Saturation::regularise_predicted);
Reconstruction reconstruct(MeasurementRecord mr, int dim_n, int index_k);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

struct HeatmapGrid {
  int dim_n = 4;
  int index_k = 2;
  double l11_min = -2.0;
  double l11_max = 2.0;
  int l11_steps = 41;
  double re_l1k_min = -2.0;
  double re_l1k_max = 2.0;
  int re_l1k_steps = 41;
  double im_l1k = 0.0;
  double lam_kk = 0.0;
};

struct HeatmapRow {
  double lam_11 = 0.0;
  Complex lam_1k{0.0, 0.0};
  double x_11 = 0.0;
  Complex x_1k{0.0, 0.0};
};

/// Forward map over a grid, lam_11 outer and Re lam_1K inner.
std::vector<HeatmapRow> heatmap_scan(const HeatmapGrid& grid);

}  // namespace mtomo::maxent
