#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtomo/circuit.hpp"
#include "mtomo/linalg.hpp"

namespace mtomo::pauli {

enum class Letter : unsigned char { I, X, Y, Z };

/// Tensor product of single-qubit Paulis; letters[q] acts on qubit q. The
/// text form lists qubit 0 first, so "XZ" is X on qubit 0 and Z on qubit 1.
struct PauliString {
  std::vector<Letter> letters;

  int num_qubits() const { return static_cast<int>(letters.size()); }
  bool is_identity() const;
  std::string str() const;
  static PauliString parse(std::string_view text);

  auto operator<=>(const PauliString&) const = default;
  bool operator==(const PauliString&) const = default;
};

/// Dense matrix with qubit 0 as the least significant index bit.
ComplexMatrix to_matrix(const PauliString& p);

struct PauliDecomposition {
  int num_qubits = 0;
  std::map<PauliString, Complex> terms;  // zero coefficients are omitted

  ComplexMatrix to_matrix() const;
};

/// |i><j| (1-based) as sum_P c_P P with c_P = Tr(P |i><j|) / 2^n.
PauliDecomposition decompose_ketbra(int i, int j, int num_qubits);

/// sum_P c_P <P>; the identity string contributes c_I. Throws
/// IncompleteDataError listing every missing string.
Complex expectation_from_paulis(const PauliDecomposition& d, const std::map<PauliString, double>& means);

/// Rotations that map the eigenbasis of `p` onto the computational basis,
/// and the qubits whose outcome bits enter the parity.
struct MeasurementSetting {
  std::vector<circuit::Gate> rotations;
  std::vector<int> mask;

  std::uint64_t mask_bits() const;
};

MeasurementSetting measurement_settings(const PauliString& p);

/// <psi|P|psi> from the dense matrix.
double dense_expectation(const circuit::StateVector& sv, const PauliString& p);

/// Mean of (-1)^{parity of masked bits} under a distribution over basis indices.
double parity_mean(const std::vector<double>& distribution, std::uint64_t mask);

}  // namespace mtomo::pauli
