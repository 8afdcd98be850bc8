#include "mtomo/maxent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "mtomo/errors.hpp"

namespace mtomo::maxent {
namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double linspace_at(double lo, double hi, int steps, int i) {
  if (steps <= 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

// Normalised projector entries for the eigenvector (k, 1).
struct Projector {
  double p11;
  Complex p1k;
  double pkk;
};

Projector projector(Complex k) {
  const double n2 = std::norm(k) + 1.0;
  return {std::norm(k) / n2, k / n2, 1.0 / n2};
}

// Block eigen-data plus a log-partition function that stays finite for
// large multipliers.
struct BlockSpectrum {
  double eps3 = 0.0;
  double eps4 = 0.0;
  Complex k3{};
  Complex k4{};
  bool diagonal = false;
  double log_z = 0.0;
};

BlockSpectrum block_spectrum(const LagrangeSet& ls) {
  BlockSpectrum bs;
  const double unconstrained = static_cast<double>(ls.dim_n - 2);
  const double mag = std::abs(ls.lam_1k);
  if (mag < kPolicy.offdiag_zero) {
    bs.diagonal = true;
    bs.eps3 = std::min(-ls.lam_11, -ls.lam_kk);
    bs.eps4 = std::max(-ls.lam_11, -ls.lam_kk);
  } else {
    const double d = ls.lam_11 - ls.lam_kk;
    const double s = std::hypot(d, 2.0 * mag);
    // u = eps + lam_KK; u3 * u4 = -|lam_1K|^2 gives the small root without
    // cancellation.
    double u3 = 0.0;
    double u4 = 0.0;
    if (d >= 0.0) {
      u3 = -0.5 * (d + s);
      u4 = -(mag * mag) / u3;
    } else {
      u4 = 0.5 * (s - d);
      u3 = -(mag * mag) / u4;
    }
    bs.eps3 = u3 - ls.lam_kk;
    bs.eps4 = u4 - ls.lam_kk;
    const Complex lc = std::conj(ls.lam_1k);
    bs.k3 = -u3 / lc;
    bs.k4 = -u4 / lc;
  }
  const double shift = std::max({bs.eps3, bs.eps4, 0.0});
  bs.log_z = shift + std::log(std::exp(bs.eps3 - shift) + std::exp(bs.eps4 - shift) +
                              unconstrained * std::exp(-shift));
  return bs;
}

// (rho_11, rho_1K, rho_KK, rho_other) from the block spectrum.
struct BlockDensity {
  double r11;
  Complex r1k;
  double rkk;
  double other;
};

BlockDensity block_density(const LagrangeSet& ls, const BlockSpectrum& bs) {
  const double w3 = std::exp(bs.eps3 - bs.log_z);
  const double w4 = std::exp(bs.eps4 - bs.log_z);
  BlockDensity out{};
  out.other = std::exp(-bs.log_z);
  if (bs.diagonal) {
    out.r11 = std::exp(-ls.lam_11 - bs.log_z);
    out.r1k = 0.0;
    out.rkk = std::exp(-ls.lam_kk - bs.log_z);
    return out;
  }
  const Projector p3 = projector(bs.k3);
  const Projector p4 = projector(bs.k4);
  out.r11 = w3 * p3.p11 + w4 * p4.p11;
  out.r1k = w3 * p3.p1k + w4 * p4.p1k;
  out.rkk = w3 * p3.pkk + w4 * p4.pkk;
  return out;
}

Eigen::Vector4d as_vector(const MeasurementRecord& r) {
  return {r.x_11, r.x_1k.real(), r.x_1k.imag(), r.x_kk.value_or(0.0)};
}

Eigen::Vector4d params(const LagrangeSet& ls) {
  return {ls.lam_11, ls.lam_1k.real(), ls.lam_1k.imag(), ls.lam_kk};
}

LagrangeSet with_params(const LagrangeSet& base, const Eigen::Vector4d& p) {
  LagrangeSet ls = base;
  ls.lam_11 = p[0];
  ls.lam_1k = Complex(p[1], p[2]);
  ls.lam_kk = p[3];
  return ls;
}

// Convex dual of the entropy maximisation; its minimiser matches the record.
double dual_objective(const LagrangeSet& ls, const Eigen::Vector4d& target) {
  const double log_z = block_spectrum(ls).log_z;
  return log_z + ls.lam_11 * target[0] + 2.0 * (ls.lam_1k.real() * target[1] + ls.lam_1k.imag() * target[2]) +
         ls.lam_kk * target[3];
}

void require_complete(const MeasurementRecord& mr) {
  if (!mr.x_kk) throw ValidationError("solve_lagrange: record has no xKK value");
  mr.validate();
  if (mr.x_11 + *mr.x_kk >= 1.0 - kPolicy.feasibility_margin) {
    std::ostringstream os;
    os << "infeasible record: x11 + xKK = " << mr.x_11 + *mr.x_kk
       << " leaves no weight for the unconstrained states";
    throw InfeasibleRecordError(os.str());
  }
}

SolveResult solve_closed_form(const MeasurementRecord& mr) {
  const double xkk = *mr.x_kk;
  const double z = static_cast<double>(mr.dim_n - 2) / (1.0 - mr.x_11 - xkk);
  // log(Z B) = log(B) + log(Z) I. Factoring Z out keeps the eigensolve on the
  // unit-scale block: near x11 + xKK = 1, Z ~ 1e12 would otherwise inflate
  // roundoff in the small eigenvalue to ~1e-4 and trip the negativity check.
  ComplexMatrix block(2, 2);
  block << mr.x_11, mr.x_1k, std::conj(mr.x_1k), xkk;
  const linalg::PsdLog lg = linalg::matrix_log_psd_info(block, kPolicy.log_floor / z);
  const double log_z = std::log(z);
  SolveResult out;
  out.lambdas.dim_n = mr.dim_n;
  out.lambdas.index_k = mr.index_k;
  out.lambdas.lam_11 = -(lg.log(0, 0).real() + log_z);
  out.lambdas.lam_1k = -lg.log(0, 1);
  out.lambdas.lam_kk = -(lg.log(1, 1).real() + log_z);
  out.near_singular = lg.clamped;
  return out;
}

SolveResult solve_grid(const MeasurementRecord& mr) {
  constexpr int kSteps = 9;
  constexpr double kRange = 8.0;
  const Eigen::Vector4d target = as_vector(mr);
  LagrangeSet base;
  base.dim_n = mr.dim_n;
  base.index_k = mr.index_k;
  LagrangeSet best = base;
  double best_f = std::numeric_limits<double>::infinity();
  for (int i0 = 0; i0 < kSteps; ++i0)
    for (int i1 = 0; i1 < kSteps; ++i1)
      for (int i2 = 0; i2 < kSteps; ++i2)
        for (int i3 = 0; i3 < kSteps; ++i3) {
          const Eigen::Vector4d p(linspace_at(-kRange, kRange, kSteps, i0), linspace_at(-kRange, kRange, kSteps, i1),
                                  linspace_at(-kRange, kRange, kSteps, i2), linspace_at(-kRange, kRange, kSteps, i3));
          const LagrangeSet ls = with_params(base, p);
          const double f = dual_objective(ls, target);
          if (f < best_f) {
            best_f = f;
            best = ls;
          }
        }
  SolveResult out = solve_newton(mr, best);
  out.iterations += kSteps * kSteps * kSteps * kSteps;
  return out;
}

}  // namespace

void LagrangeSet::validate() const {
  if (dim_n < 4 || !is_power_of_two(dim_n)) {
    throw ValidationError("LagrangeSet: dimension " + std::to_string(dim_n) + " is not a power of two >= 4");
  }
  if (index_k < 2 || index_k > dim_n) {
    throw ValidationError("LagrangeSet: index K = " + std::to_string(index_k) + " outside [2, " +
                          std::to_string(dim_n) + "]");
  }
  if (!std::isfinite(lam_11) || !std::isfinite(lam_kk) || !std::isfinite(lam_1k.real()) ||
      !std::isfinite(lam_1k.imag())) {
    throw ValidationError("LagrangeSet: non-finite multiplier");
  }
}

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) throw ValidationError("DensityMatrix: matrix must be square");
}

bool DensityMatrix::is_valid(double tol) const {
  if (linalg::hermiticity_violation(m_, tol)) return false;
  if (std::abs(m_.trace() - Complex(1.0)) > tol) return false;
  const linalg::EigenSystem es = linalg::hermitian_eig(m_);
  return es.values.minCoeff() >= -tol;
}

void MeasurementRecord::validate() const {
  const double slack = kPolicy.record_slack;
  if (dim_n < 4 || !is_power_of_two(dim_n)) {
    throw ValidationError("record: dimension " + std::to_string(dim_n) + " is not a power of two >= 4");
  }
  if (index_k < 2 || index_k > dim_n) {
    throw ValidationError("record: index K = " + std::to_string(index_k) + " outside [2, " + std::to_string(dim_n) +
                          "]");
  }
  auto in_unit = [slack](double v) { return std::isfinite(v) && v >= -slack && v <= 1.0 + slack; };
  if (!in_unit(x_11)) throw ValidationError("record: x11 = " + std::to_string(x_11) + " outside [0, 1]");
  if (!(std::abs(x_1k) <= 1.0 + slack)) throw ValidationError("record: |x1K| exceeds 1");
  if (!x_kk) return;
  const double xkk = *x_kk;
  if (!in_unit(xkk)) throw ValidationError("record: xKK = " + std::to_string(xkk) + " outside [0, 1]");
  if (x_11 + xkk > 1.0 + slack) throw ValidationError("record: x11 + xKK exceeds 1");
  if (std::norm(x_1k) > x_11 * xkk + slack) {
    throw ValidationError("record: |x1K|^2 exceeds x11 * xKK (2x2 minor is not positive semidefinite)");
  }
}

ComplexMatrix build_exponent(const LagrangeSet& ls) {
  ls.validate();
  ComplexMatrix a = ComplexMatrix::Zero(ls.dim_n, ls.dim_n);
  const int k = ls.index_k - 1;
  a(0, 0) = -ls.lam_11;
  a(0, k) = -ls.lam_1k;
  a(k, 0) = -std::conj(ls.lam_1k);
  a(k, k) = -ls.lam_kk;
  return a;
}

ExponentSpectrum spectrum(const LagrangeSet& ls) {
  ls.validate();
  const BlockSpectrum bs = block_spectrum(ls);
  ExponentSpectrum out;
  out.eps.assign(static_cast<std::size_t>(ls.dim_n - 2), 0.0);
  out.eps.push_back(bs.eps3);
  out.eps.push_back(bs.eps4);
  out.eps3 = bs.eps3;
  out.eps4 = bs.eps4;
  out.diagonal = bs.diagonal;
  out.z = std::exp(bs.log_z);
  if (bs.diagonal) {
    out.a = std::exp(-ls.lam_11);
    out.b = std::exp(-ls.lam_kk);
    return out;
  }
  out.k3 = bs.k3;
  out.k4 = bs.k4;
  out.a = projector(bs.k3).p11 * std::exp(bs.eps3);
  out.b = projector(bs.k4).p11 * std::exp(bs.eps4);
  return out;
}

DensityMatrix density_from_lagrange(const LagrangeSet& ls) {
  ls.validate();
  const BlockSpectrum bs = block_spectrum(ls);
  const BlockDensity bd = block_density(ls, bs);
  ComplexMatrix rho = ComplexMatrix::Zero(ls.dim_n, ls.dim_n);
  for (int i = 0; i < ls.dim_n; ++i) rho(i, i) = bd.other;
  const int k = ls.index_k - 1;
  rho(0, 0) = bd.r11;
  rho(0, k) = bd.r1k;
  rho(k, 0) = std::conj(bd.r1k);
  rho(k, k) = bd.rkk;
  return DensityMatrix(std::move(rho));
}

MeasurementRecord forward_expectations(const LagrangeSet& ls) {
  ls.validate();
  const BlockDensity bd = block_density(ls, block_spectrum(ls));
  MeasurementRecord r;
  r.dim_n = ls.dim_n;
  r.index_k = ls.index_k;
  r.x_11 = bd.r11;
  r.x_1k = bd.r1k;
  r.x_kk = bd.rkk;
  return r;
}

Eigen::Matrix4d expectation_jacobian(const LagrangeSet& ls) {
  ls.validate();
  // Daleckii-Krein: dexp(G)[H] = V (Gamma o V^H H V) V^H on the 2x2 block,
  // with everything scaled by e^{-shift} to stay finite.
  ComplexMatrix g(2, 2);
  g << -ls.lam_11, -ls.lam_1k, -std::conj(ls.lam_1k), -ls.lam_kk;
  const linalg::EigenSystem es = linalg::hermitian_eig(g);
  const double shift = std::max(es.values.maxCoeff(), 0.0);
  Eigen::Vector2d w;
  for (int i = 0; i < 2; ++i) w[i] = std::exp(es.values[i] - shift);
  Eigen::Matrix2d gamma;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double diff = es.values[i] - es.values[j];
      gamma(i, j) = std::abs(diff) < 1e-12 ? w[j] : w[j] * std::expm1(diff) / diff;
    }
  }
  const ComplexMatrix& v = es.vectors;
  const ComplexMatrix e = v * w.cast<Complex>().asDiagonal() * v.adjoint();
  const double z = e.trace().real() + static_cast<double>(ls.dim_n - 2) * std::exp(-shift);

  const Complex i1(0.0, 1.0);
  std::array<ComplexMatrix, 4> dirs;
  for (auto& d : dirs) d = ComplexMatrix::Zero(2, 2);
  dirs[0](0, 0) = -1.0;
  dirs[1](0, 1) = -1.0;
  dirs[1](1, 0) = -1.0;
  dirs[2](0, 1) = -i1;
  dirs[2](1, 0) = i1;
  dirs[3](1, 1) = -1.0;

  Eigen::Matrix4d jac;
  for (int c = 0; c < 4; ++c) {
    ComplexMatrix m = v.adjoint() * dirs[c] * v;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) m(i, j) *= gamma(i, j);
    const ComplexMatrix de = v * m * v.adjoint();
    const ComplexMatrix dr = de / z - e * (de.trace() / (z * z));
    jac(0, c) = dr(0, 0).real();
    jac(1, c) = dr(0, 1).real();
    jac(2, c) = dr(0, 1).imag();
    jac(3, c) = dr(1, 1).real();
  }
  return jac;
}

Prediction predict_population(double x_11, Complex x_1k) {
  if (!(x_11 > kPolicy.population_floor)) {
    std::ostringstream os;
    os << "predict_population: x11 = " << x_11 << " is at or below the floor " << kPolicy.population_floor;
    throw DegenerateInputError(os.str());
  }
  Prediction p{std::norm(x_1k) / x_11, false};
  const double upper = std::max(0.0, 1.0 - x_11);
  if (p.value > upper) {
    p.value = upper;
    p.clamped = true;
  }
  return p;
}

SolveResult solve_newton(const MeasurementRecord& mr, const LagrangeSet& start) {
  require_complete(mr);
  const Eigen::Vector4d target = as_vector(mr);
  LagrangeSet base = start;
  base.dim_n = mr.dim_n;
  base.index_k = mr.index_k;
  Eigen::Vector4d p = params(base);

  auto residual = [&](const Eigen::Vector4d& q) {
    return Eigen::Vector4d(as_vector(forward_expectations(with_params(base, q))) - target);
  };

  SolveResult out;
  Eigen::Vector4d r = residual(p);
  double f = dual_objective(with_params(base, p), target);
  int it = 0;
  for (; it < kPolicy.newton_max_iter && r.lpNorm<Eigen::Infinity>() > kPolicy.newton_tol; ++it) {
    const Eigen::Matrix4d jac = expectation_jacobian(with_params(base, p));
    const Eigen::Vector4d step = -jac.fullPivLu().solve(r);
    if (!step.allFinite()) break;
    // Directional derivative of the dual objective along the step.
    const Eigen::Vector4d grad(-r[0], -2.0 * r[1], -2.0 * r[2], -r[3]);
    const double slope = grad.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int ls_it = 0; ls_it < 60; ++ls_it, t *= 0.5) {
      const Eigen::Vector4d trial = p + t * step;
      const double f_trial = dual_objective(with_params(base, trial), target);
      if (!std::isfinite(f_trial)) continue;
      const Eigen::Vector4d r_trial = residual(trial);
      if (f_trial <= f + 1e-4 * t * slope ||
          r_trial.lpNorm<Eigen::Infinity>() < 0.5 * r.lpNorm<Eigen::Infinity>()) {
        p = trial;
        f = f_trial;
        r = r_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.lambdas = with_params(base, p);
  out.iterations = it;
  // Multipliers this large only arise from a (numerically) rank-deficient block.
  out.near_singular = p.lpNorm<Eigen::Infinity>() > -std::log(kPolicy.log_floor);
  return out;
}

SolveResult solve_lagrange(const MeasurementRecord& mr, SolveMethod method) {
  require_complete(mr);
  switch (method) {
    case SolveMethod::closed_form:
      return solve_closed_form(mr);
    case SolveMethod::newton: {
      LagrangeSet zero;
      zero.dim_n = mr.dim_n;
      zero.index_k = mr.index_k;
      return solve_newton(mr, zero);
    }
    case SolveMethod::grid:
      return solve_grid(mr);
  }
  throw ValidationError("solve_lagrange: unknown method");
}

Reconstruction reconstruct(const MeasurementRecord& mr, Saturation sat) {
  MeasurementRecord completed = mr;
  // Range checks that do not depend on xKK.
  MeasurementRecord partial = mr;
  partial.x_kk.reset();
  partial.validate();

  bool clamped = false;
  if (!completed.x_kk) {
    const Prediction p = predict_population(mr.x_11, mr.x_1k);
    completed.x_kk = p.value;
    completed.kk_source = Source::predicted;
    clamped = p.clamped;
  }

  MeasurementRecord work = completed;
  bool regularised = false;
  const double bound = work.x_11 * *work.x_kk;
  if (std::norm(work.x_1k) > bound) {
    const double mag = std::abs(work.x_1k);
    work.x_1k *= std::sqrt(std::max(bound, 0.0)) / mag;
    regularised = true;
  }
  const double min_rest = static_cast<double>(work.dim_n - 2) * kPolicy.log_floor;
  const double mass = work.x_11 + *work.x_kk;
  const bool may_scale = sat == Saturation::regularise_always || completed.kk_source == Source::predicted;
  if (may_scale && 1.0 - mass < min_rest) {
    const double scale = (1.0 - min_rest) / mass;
    work.x_11 *= scale;
    work.x_kk = *work.x_kk * scale;
    work.x_1k *= scale;
    regularised = true;
  }
  work.validate();

  const SolveResult solved = solve_lagrange(work, SolveMethod::closed_form);
  return Reconstruction{density_from_lagrange(solved.lambdas), completed, solved.lambdas,
                        solved.near_singular || regularised, clamped};
}

Reconstruction reconstruct(MeasurementRecord mr, int dim_n, int index_k) {
  mr.dim_n = dim_n;
  mr.index_k = index_k;
  return reconstruct(mr);
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw ValidationError("fidelity: dimension mismatch (" + std::to_string(rho.dim()) + " vs " +
                          std::to_string(sigma.dim()) + ")");
  }
  const ComplexMatrix s = linalg::sqrt_psd(rho.matrix());
  ComplexMatrix m = s * sigma.matrix() * s;
  m = 0.5 * (m + m.adjoint()).eval();
  const linalg::EigenSystem es = linalg::hermitian_eig(m);
  // eigenvalues at roundoff level would add ~sqrt(eps) to the trace
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(es.values.cwiseAbs().maxCoeff(), 1e-300);
  double root_sum = 0.0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (es.values[i] > noise) root_sum += std::sqrt(es.values[i]);
  }
  return std::clamp(root_sum * root_sum, 0.0, 1.0);
}

std::vector<HeatmapRow> heatmap_scan(const HeatmapGrid& grid) {
  if (grid.l11_steps < 1 || grid.re_l1k_steps < 1) throw ValidationError("heatmap_scan: grid needs at least one step");
  std::vector<HeatmapRow> rows;
  rows.reserve(static_cast<std::size_t>(grid.l11_steps) * static_cast<std::size_t>(grid.re_l1k_steps));
  for (int i = 0; i < grid.l11_steps; ++i) {
    for (int j = 0; j < grid.re_l1k_steps; ++j) {
      LagrangeSet ls;
      ls.dim_n = grid.dim_n;
      ls.index_k = grid.index_k;
      ls.lam_11 = linspace_at(grid.l11_min, grid.l11_max, grid.l11_steps, i);
      ls.lam_1k = Complex(linspace_at(grid.re_l1k_min, grid.re_l1k_max, grid.re_l1k_steps, j), grid.im_l1k);
      ls.lam_kk = grid.lam_kk;
      const MeasurementRecord r = forward_expectations(ls);
      rows.push_back({ls.lam_11, ls.lam_1k, r.x_11, r.x_1k});
    }
  }
  return rows;
}

}  // namespace mtomo::maxent
