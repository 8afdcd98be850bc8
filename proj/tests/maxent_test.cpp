#include "mtomo/maxent.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mtomo/errors.hpp"
#include "mtomo/record_io.hpp"
#include "oracles.hpp"

using mtomo::Complex;
using mtomo::ComplexMatrix;
namespace me = mtomo::maxent;

namespace {

me::LagrangeSet lset(int n, int k, double l11, Complex l1k, double lkk) {
  me::LagrangeSet ls;
  ls.dim_n = n;
  ls.index_k = k;
  ls.lam_11 = l11;
  ls.lam_1k = l1k;
  ls.lam_kk = lkk;
  return ls;
}

me::MeasurementRecord record(int n, int k, double x11, Complex x1k, std::optional<double> xkk) {
  me::MeasurementRecord r;
  r.dim_n = n;
  r.index_k = k;
  r.x_11 = x11;
  r.x_1k = x1k;
  r.x_kk = xkk;
  return r;
}

// Record with a prescribed 2x2 block; block eigenvalues mu_lo, mu_hi and
// a random unitary basis.
me::MeasurementRecord random_record(std::mt19937_64& rng, int n, int k, double min_eig) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double trace = 0.02 + 0.96 * u(rng);
  double lo = min_eig + (0.5 * trace - min_eig) * u(rng);
  const double hi = trace - lo;
  const ComplexMatrix q = oracle::random_unitary(rng, 2);
  Eigen::Vector2d d(lo, hi);
  const ComplexMatrix block = q * d.cast<Complex>().asDiagonal() * q.adjoint();
  return record(n, k, block(0, 0).real(), block(0, 1), block(1, 1).real());
}

void expect_record_near(const me::MeasurementRecord& a, const me::MeasurementRecord& b, double tol) {
  EXPECT_NEAR(a.x_11, b.x_11, tol);
  EXPECT_NEAR(a.x_1k.real(), b.x_1k.real(), tol);
  EXPECT_NEAR(a.x_1k.imag(), b.x_1k.imag(), tol);
  ASSERT_TRUE(a.x_kk && b.x_kk);
  EXPECT_NEAR(*a.x_kk, *b.x_kk, tol);
}

}  // namespace

// --- build_exponent --------------------------------------------------------

TEST(BuildExponent, ZeroMultipliers) {
  EXPECT_EQ(me::build_exponent(lset(4, 2, 0, 0, 0)), ComplexMatrix::Zero(4, 4));
}

TEST(BuildExponent, EmbedsNegatedBlock) {
  const ComplexMatrix a = me::build_exponent(lset(4, 2, 1.0, 0.5, 0.0));
  ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
  expected(0, 0) = -1.0;
  expected(0, 1) = -0.5;
  expected(1, 0) = -0.5;
  EXPECT_EQ(a, expected);
}

TEST(BuildExponent, ComplexCouplingIsHermitian) {
  const ComplexMatrix a = me::build_exponent(lset(8, 3, 0.2, Complex(0, 0.1), 0.4));
  EXPECT_EQ(a, a.adjoint().eval());
  EXPECT_EQ(a(2, 0), Complex(0.0, 0.1));
  EXPECT_EQ(a(0, 2), Complex(0.0, -0.1));
  int nonzero = 0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) nonzero += a(i, j) != Complex(0.0);
  EXPECT_EQ(nonzero, 4);
}

TEST(LagrangeSet, Validation) {
  EXPECT_THROW(me::build_exponent(lset(6, 2, 0, 0, 0)), mtomo::ValidationError);
  EXPECT_THROW(me::build_exponent(lset(4, 1, 0, 0, 0)), mtomo::ValidationError);
  EXPECT_THROW(me::build_exponent(lset(4, 5, 0, 0, 0)), mtomo::ValidationError);
  EXPECT_TRUE(lset(16, 2, 0, 0, 0).experimental());
  EXPECT_FALSE(lset(8, 2, 0, 0, 0).experimental());
}

// --- spectrum -------------------------------------------------------------

TEST(Spectrum, ReferenceMultipliers) {
  const me::ExponentSpectrum s = me::spectrum(lset(4, 2, 1.0, 0.5, 0.0));
  EXPECT_NEAR(s.eps3, -1.2071067811865475, 1e-14);
  EXPECT_NEAR(s.eps4, 0.2071067811865476, 1e-14);
  EXPECT_NEAR(s.z, 3.529175196467317, 1e-12);
  ASSERT_EQ(s.eps.size(), 4u);
  EXPECT_EQ(s.eps[0], 0.0);
  EXPECT_EQ(s.eps[1], 0.0);
  EXPECT_FALSE(s.diagonal);
}

TEST(Spectrum, ZeroMultipliersUseDiagonalBranch) {
  const me::ExponentSpectrum s = me::spectrum(lset(4, 2, 0, 0, 0));
  EXPECT_TRUE(s.diagonal);
  EXPECT_EQ(s.eps3, 0.0);
  EXPECT_EQ(s.eps4, 0.0);
  EXPECT_DOUBLE_EQ(s.z, 4.0);
}

TEST(Spectrum, EightLevelAddsFourUnitTerms) {
  const me::ExponentSpectrum s4 = me::spectrum(lset(4, 2, 1.0, 0.5, 0.0));
  const me::ExponentSpectrum s8 = me::spectrum(lset(8, 2, 1.0, 0.5, 0.0));
  EXPECT_DOUBLE_EQ(s8.eps3, s4.eps3);
  EXPECT_DOUBLE_EQ(s8.eps4, s4.eps4);
  EXPECT_NEAR(s8.z - s4.z, 4.0, 1e-12);
  EXPECT_NEAR(s8.z, 7.529175196467317, 1e-12);
}

TEST(Spectrum, InvariantsAgainstGenericEigensolver) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = trial % 2 ? 8 : 4;
    const me::LagrangeSet ls = lset(n, 2 + trial % (n - 1), u(rng), Complex(u(rng), u(rng)), u(rng));
    const me::ExponentSpectrum s = me::spectrum(ls);
    double z = 0.0;
    for (double e : s.eps) z += std::exp(e);
    EXPECT_NEAR(s.z, z, 1e-12 * z);
    EXPECT_NEAR(s.eps3 + s.eps4, -(ls.lam_11 + ls.lam_kk), 1e-12);
    const auto es = mtomo::linalg::hermitian_eig(me::build_exponent(ls));
    EXPECT_NEAR(es.values[0], std::min(s.eps3, 0.0), 1e-12);
    EXPECT_NEAR(es.values[n - 1], std::max(s.eps4, 0.0), 1e-12);
    // Weight a + b is Z * rho_11.
    EXPECT_NEAR((s.a + s.b) / s.z, me::forward_expectations(ls).x_11, 1e-12);
  }
}

TEST(Spectrum, EigenvectorsSolveBlock) {
  const me::LagrangeSet ls = lset(4, 3, 0.7, Complex(0.3, -0.8), -0.2);
  const me::ExponentSpectrum s = me::spectrum(ls);
  const ComplexMatrix a = me::build_exponent(ls);
  for (auto [eps, k] : {std::pair{s.eps3, s.k3}, std::pair{s.eps4, s.k4}}) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
    v[0] = k;
    v[2] = 1.0;
    EXPECT_LE((a * v - eps * v).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Spectrum, TinyCouplingStaysAccurate) {
  // |lam_1K| just above the diagonal threshold: k3 and k4 come from the
  // cancellation-free formula and rho must still match the series oracle.
  for (double c : {1e-13, 1e-9, 1e-5}) {
    const me::LagrangeSet ls = lset(4, 2, 1.3, c, -0.4);
    const ComplexMatrix ref = oracle::maxent_density(4, 2, 1.3, c, -0.4);
    EXPECT_LE(oracle::max_abs_diff(me::density_from_lagrange(ls).matrix(), ref), 1e-12) << c;
  }
}

// --- density_from_lagrange / forward ----------------------------------------

TEST(Density, ZeroMultipliersMaximallyMixed) {
  EXPECT_LE(oracle::max_abs_diff(me::density_from_lagrange(lset(4, 2, 0, 0, 0)).matrix(),
                                 ComplexMatrix::Identity(4, 4) / 4.0),
            1e-15);
  EXPECT_LE(oracle::max_abs_diff(me::density_from_lagrange(lset(8, 5, 0, 0, 0)).matrix(),
                                 ComplexMatrix::Identity(8, 8) / 8.0),
            1e-15);
}

TEST(Density, ReferenceMultipliers) {
  const me::DensityMatrix rho = me::density_from_lagrange(lset(4, 2, 1.0, 0.5, 0.0));
  EXPECT_NEAR(rho.at(1, 1).real(), 0.123374657423973, 1e-12);
  EXPECT_NEAR(rho.at(1, 2).real(), -0.093273016797189, 1e-12);
  EXPECT_NEAR(rho.at(2, 2).real(), 0.309920691018352, 1e-12);
  EXPECT_NEAR(rho.at(3, 3).real(), 0.283352325778838, 1e-12);
  EXPECT_NEAR(rho.at(4, 4).real(), 0.283352325778838, 1e-12);
  EXPECT_TRUE(rho.is_valid());
}

TEST(Density, ComplexCouplingEightLevel) {
  // Frozen from an independent expm: rho_11, rho_13, rho_33, rho_22.
  const me::DensityMatrix rho = me::density_from_lagrange(lset(8, 3, 0.2, Complex(0, 0.1), 0.4));
  EXPECT_NEAR(rho.at(1, 1).real(), 0.1097272372056282, 1e-12);
  EXPECT_NEAR(rho.at(1, 3).imag(), -0.009915191284387302, 1e-12);
  EXPECT_NEAR(rho.at(3, 3).real(), 0.0898968546368536, 1e-12);
  EXPECT_NEAR(rho.at(2, 2).real(), 0.1333959846929197, 1e-12);
}

TEST(Density, AnalyticMatchesSeriesOracleRandom) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = trial % 2 ? 8 : 4;
    const int k = 2 + trial % (n - 1);
    const double l11 = u(rng), lkk = u(rng);
    const Complex l1k(u(rng), u(rng));
    const me::DensityMatrix rho = me::density_from_lagrange(lset(n, k, l11, l1k, lkk));
    EXPECT_LE(oracle::max_abs_diff(rho.matrix(), oracle::maxent_density(n, k, l11, l1k, lkk)), 1e-10);
    EXPECT_TRUE(rho.is_valid());
    const double other = rho.at(k == 2 ? 3 : 2, k == 2 ? 3 : 2).real();
    for (int i = 2; i <= n; ++i) {
      if (i != k) EXPECT_NEAR(rho.at(i, i).real(), 1.0 / me::spectrum(lset(n, k, l11, l1k, lkk)).z, 1e-10);
    }
    EXPECT_GT(other, 0.0);
  }
}

TEST(Forward, MatchesDensityEntries) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const me::LagrangeSet ls = lset(4, 2 + trial % 3, u(rng), Complex(u(rng), u(rng)), u(rng));
    const me::MeasurementRecord r = me::forward_expectations(ls);
    const me::DensityMatrix rho = me::density_from_lagrange(ls);
    EXPECT_NEAR(r.x_11, rho.at(1, 1).real(), 1e-12);
    EXPECT_NEAR(std::abs(r.x_1k - rho.at(1, ls.index_k)), 0.0, 1e-12);
    EXPECT_NEAR(*r.x_kk, rho.at(ls.index_k, ls.index_k).real(), 1e-12);
  }
}

TEST(Forward, Examples) {
  me::MeasurementRecord r = me::forward_expectations(lset(4, 2, 0, 0, 0));
  EXPECT_DOUBLE_EQ(r.x_11, 0.25);
  EXPECT_EQ(r.x_1k, Complex(0.0));
  EXPECT_DOUBLE_EQ(*r.x_kk, 0.25);

  r = me::forward_expectations(lset(4, 2, 1.0, 0.5, 0.0));
  EXPECT_NEAR(r.x_11, 0.123374657423973, 1e-12);
  EXPECT_NEAR(r.x_1k.real(), -0.093273016797189, 1e-12);
  EXPECT_NEAR(*r.x_kk, 0.309920691018352, 1e-12);

  // -log([[2,1],[1,1]]) multipliers give the block Z*[[0.4,0.2],[0.2,0.2]], Z = 5.
  r = me::forward_expectations(lset(4, 2, -0.430408940964004, -0.860817881928008, 0.430408940964004));
  EXPECT_NEAR(r.x_11, 0.4, 1e-12);
  EXPECT_NEAR(r.x_1k.real(), 0.2, 1e-12);
  EXPECT_NEAR(*r.x_kk, 0.2, 1e-12);
}

TEST(Forward, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const me::LagrangeSet ls = lset(trial % 2 ? 8 : 4, 2, u(rng), Complex(u(rng), u(rng)), u(rng));
    const Eigen::Matrix4d jac = me::expectation_jacobian(ls);
    const double h = 1e-6;
    for (int c = 0; c < 4; ++c) {
      me::LagrangeSet lp = ls, lm = ls;
      switch (c) {
        case 0: lp.lam_11 += h; lm.lam_11 -= h; break;
        case 1: lp.lam_1k += h; lm.lam_1k -= h; break;
        case 2: lp.lam_1k += Complex(0, h); lm.lam_1k -= Complex(0, h); break;
        case 3: lp.lam_kk += h; lm.lam_kk -= h; break;
      }
      const auto rp = me::forward_expectations(lp);
      const auto rm = me::forward_expectations(lm);
      const Eigen::Vector4d fd((rp.x_11 - rm.x_11) / (2 * h), (rp.x_1k - rm.x_1k).real() / (2 * h),
                               (rp.x_1k - rm.x_1k).imag() / (2 * h), (*rp.x_kk - *rm.x_kk) / (2 * h));
      EXPECT_LE((jac.col(c) - fd).cwiseAbs().maxCoeff(), 1e-7) << "trial " << trial << " col " << c;
    }
  }
}

// --- predict_population -----------------------------------------------------

TEST(Predict, Examples) {
  EXPECT_DOUBLE_EQ(me::predict_population(0.5, 0.5).value, 0.5);
  EXPECT_DOUBLE_EQ(me::predict_population(0.25, 0.25).value, 0.25);
  EXPECT_FALSE(me::predict_population(0.25, 0.25).clamped);
  EXPECT_NEAR(me::predict_population(0.4, 0.2).value, 0.1, 1e-16);
}

TEST(Predict, ExactForPureStates) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = trial % 2 ? 8 : 4;
    const Eigen::VectorXcd psi = oracle::random_state(rng, dim);
    for (int k = 2; k <= dim; ++k) {
      const double x11 = std::norm(psi[0]);
      const Complex x1k = std::conj(psi[0]) * psi[k - 1];
      EXPECT_NEAR(me::predict_population(x11, x1k).value, std::norm(psi[k - 1]), 1e-9);
    }
  }
}

TEST(Predict, ClampsWithWarning) {
  const me::Prediction p = me::predict_population(0.5, 0.6);
  EXPECT_TRUE(p.clamped);
  EXPECT_DOUBLE_EQ(p.value, 0.5);
}

TEST(Predict, DegenerateAtFloor) {
  EXPECT_THROW(me::predict_population(0.0, 0.0), mtomo::DegenerateInputError);
  EXPECT_THROW(me::predict_population(1e-12, 0.0), mtomo::DegenerateInputError);
  EXPECT_NO_THROW(me::predict_population(1e-11, 0.0));
}

// --- solve_lagrange ---------------------------------------------------------

TEST(Solve, MaximallyMixedGivesZeroMultipliers) {
  for (auto method : {me::SolveMethod::closed_form, me::SolveMethod::newton, me::SolveMethod::grid}) {
    const me::SolveResult s = me::solve_lagrange(record(4, 2, 0.25, 0.0, 0.25), method);
    EXPECT_NEAR(s.lambdas.lam_11, 0.0, 1e-12);
    EXPECT_NEAR(std::abs(s.lambdas.lam_1k), 0.0, 1e-12);
    EXPECT_NEAR(s.lambdas.lam_kk, 0.0, 1e-12);
  }
}

TEST(Solve, HandComputedLogInverse) {
  const me::SolveResult s = me::solve_lagrange(record(4, 2, 0.4, 0.2, 0.2));
  EXPECT_NEAR(s.lambdas.lam_11, -0.430408940964004, 1e-12);
  EXPECT_NEAR(s.lambdas.lam_1k.real(), -0.860817881928008, 1e-12);
  EXPECT_NEAR(s.lambdas.lam_1k.imag(), 0.0, 1e-12);
  EXPECT_NEAR(s.lambdas.lam_kk, 0.430408940964004, 1e-12);
  EXPECT_FALSE(s.near_singular);
  // Series oracle reproduces the record.
  const ComplexMatrix rho = oracle::maxent_density(4, 2, s.lambdas.lam_11, s.lambdas.lam_1k, s.lambdas.lam_kk);
  EXPECT_NEAR(rho(0, 0).real(), 0.4, 1e-12);
  EXPECT_NEAR(rho(0, 1).real(), 0.2, 1e-12);
  EXPECT_NEAR(rho(1, 1).real(), 0.2, 1e-12);
}

TEST(Solve, RoundTripOfFourDigitForwardValues) {
  const me::MeasurementRecord in = record(4, 2, 0.1234, -0.0933, 0.3099);
  for (auto method : {me::SolveMethod::closed_form, me::SolveMethod::newton, me::SolveMethod::grid}) {
    const me::SolveResult s = me::solve_lagrange(in, method);
    EXPECT_NEAR(s.lambdas.lam_11, 1.0, 1e-3);
    EXPECT_NEAR(s.lambdas.lam_1k.real(), 0.5, 1e-3);
    EXPECT_NEAR(s.lambdas.lam_kk, 0.0, 1e-3);
    expect_record_near(me::forward_expectations(s.lambdas), in, 1e-8);
  }
}

TEST(Solve, RoundTripRandomFeasibleRecords) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = trial % 2 ? 8 : 4;
    const me::MeasurementRecord in = random_record(rng, n, 2 + trial % (n - 1), 1e-6);
    const me::SolveResult cf = me::solve_lagrange(in, me::SolveMethod::closed_form);
    const me::SolveResult nt = me::solve_lagrange(in, me::SolveMethod::newton);
    expect_record_near(me::forward_expectations(cf.lambdas), in, 1e-8);
    expect_record_near(me::forward_expectations(nt.lambdas), in, 1e-8);
    EXPECT_NEAR(cf.lambdas.lam_11, nt.lambdas.lam_11, 1e-6);
    EXPECT_NEAR(std::abs(cf.lambdas.lam_1k - nt.lambdas.lam_1k), 0.0, 1e-6);
    EXPECT_NEAR(cf.lambdas.lam_kk, nt.lambdas.lam_kk, 1e-6);
  }
}

TEST(Solve, GridAgreesWithClosedForm) {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    const me::MeasurementRecord in = random_record(rng, 4, 3, 1e-3);
    const auto cf = me::solve_lagrange(in, me::SolveMethod::closed_form);
    const auto gr = me::solve_lagrange(in, me::SolveMethod::grid);
    expect_record_near(me::forward_expectations(gr.lambdas), in, 1e-8);
    EXPECT_NEAR(cf.lambdas.lam_11, gr.lambdas.lam_11, 1e-6);
  }
}

TEST(Solve, InfeasibleWhenNoWeightLeft) {
  EXPECT_THROW(me::solve_lagrange(record(4, 2, 0.5, 0.0, 0.5)), mtomo::InfeasibleRecordError);
  EXPECT_THROW(me::solve_lagrange(record(4, 2, 0.6, 0.0, 0.4 - 1e-13)), mtomo::InfeasibleRecordError);
}

TEST(Solve, RequiresCompleteRecord) {
  EXPECT_THROW(me::solve_lagrange(record(4, 2, 0.4, 0.2, std::nullopt)), mtomo::ValidationError);
}

TEST(Solve, RankDeficientMinorIsFlagged) {
  // |x1K|^2 = x11 * xKK: pure-state block.
  const me::SolveResult s = me::solve_lagrange(record(4, 2, 0.4, 0.2, 0.1));
  EXPECT_TRUE(s.near_singular);
  EXPECT_TRUE(std::isfinite(s.lambdas.lam_11));
  expect_record_near(me::forward_expectations(s.lambdas), record(4, 2, 0.4, 0.2, 0.1), 4 * 1e-12);
}

// --- reconstruct ------------------------------------------------------------

TEST(Reconstruct, BellRecordFloorRegularised) {
  const me::Reconstruction r = me::reconstruct(record(4, 4, 0.5, 0.5, std::nullopt));
  EXPECT_EQ(r.record.kk_source, me::Source::predicted);
  EXPECT_DOUBLE_EQ(*r.record.x_kk, 0.5);
  EXPECT_TRUE(r.near_singular);
  EXPECT_NEAR(r.rho.at(1, 1).real(), 0.5, 1e-8);
  EXPECT_NEAR(r.rho.at(4, 4).real(), 0.5, 1e-8);
  EXPECT_NEAR(r.rho.at(1, 4).real(), 0.5, 1e-8);
  EXPECT_LT(r.rho.at(2, 2).real(), 1e-10);
  EXPECT_LT(r.rho.at(3, 3).real(), 1e-10);
  EXPECT_TRUE(r.rho.is_valid());
}

TEST(Reconstruct, PredictsThenSolves) {
  const me::Reconstruction r = me::reconstruct(record(4, 2, 0.4, 0.2, std::nullopt));
  EXPECT_NEAR(*r.record.x_kk, 0.1, 1e-15);
  EXPECT_NEAR(r.rho.at(1, 1).real(), 0.4, 1e-8);
  EXPECT_NEAR(r.rho.at(1, 2).real(), 0.2, 1e-8);
  EXPECT_NEAR(r.rho.at(2, 2).real(), 0.1, 1e-8);
  expect_record_near(me::forward_expectations(r.lambdas), r.record, 1e-8);
}

TEST(Reconstruct, ExplicitDimensionOverload) {
  const me::Reconstruction r = me::reconstruct(record(4, 2, 0.3, 0.1, 0.2), 8, 5);
  EXPECT_EQ(r.rho.dim(), 8);
  EXPECT_NEAR(r.rho.at(1, 5).real(), 0.1, 1e-12);
}

TEST(Reconstruct, ShrinksNonPositiveCoherence) {
  // Noisy data: |x1K|^2 > x11 xKK.
  const me::Reconstruction r = me::reconstruct(record(4, 2, 0.3, 0.3, 0.2));
  EXPECT_TRUE(r.near_singular);
  EXPECT_TRUE(r.rho.is_valid());
  EXPECT_NEAR(std::abs(r.rho.at(1, 2)), std::sqrt(0.06), 1e-8);
}

TEST(Reconstruct, SampledRecordAtFullMass) {
  // Shot-sampled Bell-like data: the prediction clamps to xKK = 1 - x11, so
  // Z ~ 1e12 in the closed form. Must regularise, not throw.
  const me::Reconstruction r =
      me::reconstruct(record(4, 4, 0.490966796875, Complex(-0.5, -0.00030517578125), std::nullopt));
  EXPECT_TRUE(r.prediction_clamped);
  EXPECT_TRUE(r.near_singular);
  EXPECT_NEAR(*r.record.x_kk, 1.0 - 0.490966796875, 1e-15);
  EXPECT_TRUE(r.rho.is_valid());
  EXPECT_NEAR(r.rho.at(1, 1).real(), 0.490966796875, 1e-8);
  EXPECT_NEAR(r.rho.at(4, 4).real(), *r.record.x_kk, 1e-8);
}

TEST(Solve, ClosedFormStableNearFullMass) {
  // Rank-one block with 1 - x11 - xKK = 1e-11: forward map still reproduces it.
  const double x11 = 0.3, xkk = 0.7 - 1e-11;
  const me::MeasurementRecord in = record(4, 2, x11, std::sqrt(x11 * xkk), xkk);
  const me::SolveResult s = me::solve_lagrange(in);
  EXPECT_TRUE(s.near_singular);
  expect_record_near(me::forward_expectations(s.lambdas), in, 1e-8);
}

TEST(Reconstruct, SuppliedSaturatedRecordIsInfeasibleUnlessAllowed) {
  const me::MeasurementRecord bell = record(4, 4, 0.5, 0.5, 0.5);
  EXPECT_THROW(me::reconstruct(bell), mtomo::InfeasibleRecordError);
  const me::Reconstruction r = me::reconstruct(bell, me::Saturation::regularise_always);
  EXPECT_TRUE(r.near_singular);
  EXPECT_EQ(r.record.kk_source, me::Source::measured);
  EXPECT_NEAR(r.rho.at(1, 4).real(), 0.5, 1e-8);
  EXPECT_LT(r.rho.at(2, 2).real(), 1e-10);
}

TEST(Reconstruct, PropagatesDegenerateInput) {
  EXPECT_THROW(me::reconstruct(record(4, 2, 0.0, 0.0, std::nullopt)), mtomo::DegenerateInputError);
  EXPECT_THROW(me::reconstruct(record(4, 2, 1.5, 0.0, std::nullopt)), mtomo::ValidationError);
}

// --- properties -------------------------------------------------------------

TEST(Properties, PureStateRecordsSatisfyMinorEquality) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXcd psi = oracle::random_state(rng, 8);
    const ComplexMatrix rho = psi * psi.adjoint();
    for (int k = 2; k <= 8; ++k) {
      EXPECT_NEAR(std::norm(rho(0, k - 1)), rho(0, 0).real() * rho(k - 1, k - 1).real(), 1e-9);
    }
  }
}

TEST(Properties, MaxEntIsEntropyMaximal) {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = trial % 2 ? 8 : 4;
    const int k = 2 + trial % (n - 1);
    const me::MeasurementRecord in = random_record(rng, n, k, 1e-3);
    const me::Reconstruction r = me::reconstruct(in);
    const double s0 = mtomo::linalg::von_neumann_entropy(r.rho.matrix());
    const double lo = mtomo::linalg::hermitian_eig(r.rho.matrix()).values.minCoeff();
    for (int p = 0; p < 50; ++p) {
      // Traceless Hermitian direction that leaves rho_11, rho_1K, rho_KK untouched.
      ComplexMatrix h = oracle::random_hermitian(rng, n);
      h(0, 0) = h(0, k - 1) = h(k - 1, 0) = h(k - 1, k - 1) = 0.0;
      Complex tr = h.trace();
      for (int i = 1; i < n; ++i)
        if (i != k - 1) h(i, i) -= tr / static_cast<double>(n - 2);
      const double scale = 0.9 * lo / h.cwiseAbs().rowwise().sum().maxCoeff() * std::abs(u(rng));
      const ComplexMatrix perturbed = r.rho.matrix() + scale * h;
      EXPECT_NEAR(perturbed(0, 0).real(), r.rho.at(1, 1).real(), 1e-15);
      EXPECT_GE(s0 + 1e-9, mtomo::linalg::von_neumann_entropy(perturbed));
    }
  }
}

// --- fidelity ---------------------------------------------------------------

TEST(Fidelity, Examples) {
  const me::DensityMatrix mixed(ComplexMatrix::Identity(4, 4) / 4.0);
  EXPECT_NEAR(me::fidelity(mixed, mixed), 1.0, 1e-12);
  ComplexMatrix p = ComplexMatrix::Zero(4, 4);
  p(0, 0) = 1.0;
  const me::DensityMatrix pure(p);
  EXPECT_NEAR(me::fidelity(pure, mixed), 0.25, 1e-12);
  EXPECT_NEAR(me::fidelity(mixed, pure), 0.25, 1e-9);
  const me::DensityMatrix rho = me::density_from_lagrange(lset(4, 2, 1.0, 0.5, 0.0));
  EXPECT_NEAR(me::fidelity(rho, rho), 1.0, 1e-12);
}

TEST(Fidelity, SymmetricAndMatchesPureOverlap) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const me::DensityMatrix a = me::density_from_lagrange(lset(4, 2 + trial % 3, u(rng), Complex(u(rng), u(rng)), u(rng)));
    const me::DensityMatrix b = me::density_from_lagrange(lset(4, 2, u(rng), Complex(u(rng), u(rng)), u(rng)));
    EXPECT_NEAR(me::fidelity(a, b), me::fidelity(b, a), 1e-9);
    const Eigen::VectorXcd psi = oracle::random_state(rng, 4);
    const me::DensityMatrix pure(psi * psi.adjoint());
    const double overlap = psi.dot(a.matrix() * psi).real();
    EXPECT_NEAR(me::fidelity(pure, a), overlap, 1e-9);
  }
}

TEST(Fidelity, DimensionMismatch) {
  EXPECT_THROW(me::fidelity(me::DensityMatrix(ComplexMatrix::Identity(4, 4) / 4.0),
                            me::DensityMatrix(ComplexMatrix::Identity(8, 8) / 8.0)),
               mtomo::ValidationError);
}

// --- heatmap ----------------------------------------------------------------

TEST(Heatmap, OriginHasNoCoherence) {
  me::HeatmapGrid g;
  g.l11_min = -1;
  g.l11_max = 1;
  g.l11_steps = 3;
  g.re_l1k_min = -1;
  g.re_l1k_max = 1;
  g.re_l1k_steps = 3;
  const auto rows = me::heatmap_scan(g);
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[4].lam_11, 0.0);
  EXPECT_EQ(rows[4].lam_1k, Complex(0.0));
  EXPECT_EQ(rows[4].x_1k, Complex(0.0));
  EXPECT_DOUBLE_EQ(rows[4].x_11, 0.25);
  // Row-major: lam_11 outer.
  EXPECT_EQ(rows[1].lam_11, -1.0);
  EXPECT_EQ(rows[1].lam_1k.real(), 0.0);
  EXPECT_EQ(rows[3].lam_11, 0.0);
}

TEST(Heatmap, SinglePoint) {
  me::HeatmapGrid g;
  g.l11_min = g.l11_max = 1.0;
  g.l11_steps = 1;
  g.re_l1k_min = g.re_l1k_max = 0.5;
  g.re_l1k_steps = 1;
  const auto rows = me::heatmap_scan(g);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].x_11, 0.123374657423973, 1e-12);
  EXPECT_NEAR(rows[0].x_1k.real(), -0.093273016797189, 1e-12);
}

TEST(Heatmap, CoherenceOddInReLambdaWhenDiagonalEqual) {
  me::HeatmapGrid g;
  g.l11_min = g.l11_max = 0.7;
  g.l11_steps = 1;
  g.lam_kk = 0.7;
  g.re_l1k_min = -2;
  g.re_l1k_max = 2;
  g.re_l1k_steps = 21;
  const auto rows = me::heatmap_scan(g);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto& mirror = rows[rows.size() - 1 - j];
    EXPECT_NEAR(rows[j].x_1k.real(), -mirror.x_1k.real(), 1e-14);
    EXPECT_NEAR(rows[j].x_11, mirror.x_11, 1e-14);
  }
}

// --- record text form -------------------------------------------------------

TEST(RecordIo, ParseAndFormat) {
  const me::MeasurementRecord r = me::parse_record("# bell\nn = 4\nk = 4\nx11 = 0.5\nre_x1k = 0.5\n");
  EXPECT_EQ(r.dim_n, 4);
  EXPECT_EQ(r.index_k, 4);
  EXPECT_FALSE(r.x_kk.has_value());
  EXPECT_EQ(r.x_1k, Complex(0.5, 0.0));

  me::MeasurementRecord full = record(8, 3, 0.3, Complex(0.1, -0.05), 0.2);
  const me::MeasurementRecord back = me::parse_record(me::format_record(full));
  EXPECT_EQ(back.x_11, full.x_11);
  EXPECT_EQ(back.x_1k, full.x_1k);
  EXPECT_EQ(back.x_kk, full.x_kk);
}

TEST(RecordIo, Errors) {
  EXPECT_THROW(me::parse_record("n = 4\nk = 2\nx11 = 0.5\n"), mtomo::ValidationError);
  EXPECT_THROW(me::parse_record("n = 4\nk = 2\nx11 = abc\nre_x1k = 0\n"), mtomo::ParseError);
  EXPECT_THROW(me::parse_record("n = 4\nk = 2\nx11 = 0.9\nre_x1k = 0\nxkk = 0.5\n"), mtomo::ValidationError);
}
