#pragma once

#include <complex>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "mtomo/policy.hpp"

namespace mtomo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

namespace linalg {

/// Eigenvalues ascending; column i of `vectors` is the unit eigenvector of
/// `values[i]`, with its first non-negligible component real and positive.
struct EigenSystem {
  Eigen::VectorXd values;
  ComplexMatrix vectors;
};

/// First (i, j) with |m(i,j) - conj(m(j,i))| > tol, if any.
std::optional<std::pair<int, int>> hermiticity_violation(const ComplexMatrix& m,
                                                         double tol = kPolicy.hermitian_tol);

/// Throws ValidationError naming the offending entry pair.
void require_hermitian(const ComplexMatrix& m, double tol = kPolicy.hermitian_tol);

/// Closed form for dim <= 2, Eigen's self-adjoint solver otherwise.
EigenSystem hermitian_eig(const ComplexMatrix& m);

/// V diag(f(eps)) V^dagger for a real function f of the eigenvalues.
template <typename F>
ComplexMatrix spectral_apply(const EigenSystem& es, F&& f) {
  Eigen::VectorXcd d(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i) d[i] = f(es.values[i]);
  return es.vectors * d.asDiagonal() * es.vectors.adjoint();
}

ComplexMatrix matrix_exp_hermitian(const ComplexMatrix& m);

struct PsdLog {
  ComplexMatrix log;
  bool clamped = false;  // some eigenvalue was raised to the floor
};

/// Logarithm of a Hermitian PSD matrix. Eigenvalues below `floor` are raised
/// to `floor`; an eigenvalue below -negative_eig_tol raises DomainError.
PsdLog matrix_log_psd_info(const ComplexMatrix& m, double floor = kPolicy.log_floor);

inline ComplexMatrix matrix_log_psd(const ComplexMatrix& m, double floor = kPolicy.log_floor) {
  return matrix_log_psd_info(m, floor).log;
}

/// Principal square root of a PSD matrix; tiny negative eigenvalues are zeroed.
ComplexMatrix sqrt_psd(const ComplexMatrix& m);

/// -Tr(m log m) in nats, ignoring eigenvalues <= 0.
double von_neumann_entropy(const ComplexMatrix& m);

/// Kronecker product a (x) b.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace linalg
}  // namespace mtomo
