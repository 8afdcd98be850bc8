#include "mtomo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtomo/errors.hpp"

namespace mtomo::linalg {
namespace {

// Component magnitude below which the phase convention skips to the next one.
constexpr double kPhaseEps = 1e-14;

void fix_phase(ComplexMatrix& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double mag = std::abs(vectors(r, c));
      if (mag > kPhaseEps) {
        const Complex phase = std::conj(vectors(r, c)) / mag;
        vectors.col(c) *= phase;
        vectors(r, c) = mag;
        break;
      }
    }
  }
}

EigenSystem eig_small(const ComplexMatrix& m) {
  EigenSystem es;
  const auto n = m.rows();
  es.values.resize(n);
  es.vectors = ComplexMatrix::Identity(n, n);
  if (n == 1) {
    es.values[0] = m(0, 0).real();
    return es;
  }
  const double a = m(0, 0).real();
  const double d = m(1, 1).real();
  const Complex c = m(0, 1);
  if (c == Complex(0.0)) {
    if (d < a) {
      es.values << d, a;
      es.vectors.col(0).swap(es.vectors.col(1));
    } else {
      es.values << a, d;
    }
    return es;
  }
  const double mean = 0.5 * (a + d);
  const double half_gap = std::hypot(0.5 * (a - d), std::abs(c));
  es.values << mean - half_gap, mean + half_gap;
  for (int i = 0; i < 2; ++i) {
    const double e = es.values[i];
    // Two candidate null vectors of (m - e I); keep the better-scaled one.
    Eigen::Vector2cd u(c, e - a);
    Eigen::Vector2cd v(e - d, std::conj(c));
    Eigen::Vector2cd w = u.squaredNorm() >= v.squaredNorm() ? u : v;
    es.vectors.col(i) = w.normalized();
  }
  fix_phase(es.vectors);
  return es;
}

}  // namespace

std::optional<std::pair<int, int>> hermiticity_violation(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return std::pair<int, int>{-1, -1};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i; j < m.cols(); ++j) {
      if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) {
        return std::pair<int, int>{static_cast<int>(i), static_cast<int>(j)};
      }
    }
  }
  return std::nullopt;
}

void require_hermitian(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "matrix is not square (" << m.rows() << "x" << m.cols() << ")";
    throw ValidationError(os.str());
  }
  if (auto bad = hermiticity_violation(m, tol)) {
    std::ostringstream os;
    os << "matrix is not Hermitian: entry (" << bad->first << "," << bad->second << ") = "
       << m(bad->first, bad->second) << " but entry (" << bad->second << "," << bad->first
       << ") = " << m(bad->second, bad->first);
    throw ValidationError(os.str());
  }
}

EigenSystem hermitian_eig(const ComplexMatrix& m) {
  require_hermitian(m);
  if (m.rows() <= 2) return eig_small(m);

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eig: eigensolver did not converge");
  }
  EigenSystem es{solver.eigenvalues(), solver.eigenvectors()};
  fix_phase(es.vectors);
  return es;
}

ComplexMatrix matrix_exp_hermitian(const ComplexMatrix& m) {
  return spectral_apply(hermitian_eig(m), [](double e) { return std::exp(e); });
}

PsdLog matrix_log_psd_info(const ComplexMatrix& m, double floor) {
  if (!(floor > 0.0)) throw ValidationError("matrix_log_psd: floor must be positive");
  const EigenSystem es = hermitian_eig(m);
  PsdLog out;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (es.values[i] < -kPolicy.negative_eig_tol) {
      std::ostringstream os;
      os << "matrix_log_psd: eigenvalue " << es.values[i] << " is negative";
      throw DomainError(os.str());
    }
    if (es.values[i] < floor) out.clamped = true;
  }
  out.log = spectral_apply(es, [floor](double e) { return std::log(std::max(e, floor)); });
  return out;
}

ComplexMatrix sqrt_psd(const ComplexMatrix& m) {
  return spectral_apply(hermitian_eig(m), [](double e) { return std::sqrt(std::max(e, 0.0)); });
}

double von_neumann_entropy(const ComplexMatrix& m) {
  const EigenSystem es = hermitian_eig(m);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double p = es.values[i];
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace mtomo::linalg
