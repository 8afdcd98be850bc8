#include "mtomo/pauli.hpp"

#include <array>
#include <bit>
#include <numbers>

#include "mtomo/errors.hpp"

namespace mtomo::pauli {
namespace {

ComplexMatrix letter_matrix(Letter l) {
  ComplexMatrix m(2, 2);
  const Complex i1(0.0, 1.0);
  switch (l) {
    case Letter::I: m << 1.0, 0.0, 0.0, 1.0; break;
    case Letter::X: m << 0.0, 1.0, 1.0, 0.0; break;
    case Letter::Y: m << 0.0, -i1, i1, 0.0; break;
    case Letter::Z: m << 1.0, 0.0, 0.0, -1.0; break;
  }
  return m;
}

// One-qubit |b_row><b_col| as two (letter, coefficient) pairs:
//   |0><0| = (I + Z)/2   |1><1| = (I - Z)/2
//   |0><1| = (X + iY)/2  |1><0| = (X - iY)/2
struct LetterTerm {
  Letter letter;
  Complex coeff;
};

std::array<LetterTerm, 2> single_ketbra(int row_bit, int col_bit) {
  const Complex half(0.5, 0.0);
  const Complex ihalf(0.0, 0.5);
  if (row_bit == col_bit) {
    return {{{Letter::I, half}, {Letter::Z, row_bit == 0 ? half : -half}}};
  }
  return {{{Letter::X, half}, {Letter::Y, row_bit == 0 ? ihalf : -ihalf}}};
}

}  // namespace

bool PauliString::is_identity() const {
  for (Letter l : letters)
    if (l != Letter::I) return false;
  return true;
}

std::string PauliString::str() const {
  std::string s;
  for (Letter l : letters) s.push_back("IXYZ"[static_cast<int>(l)]);
  return s;
}

PauliString PauliString::parse(std::string_view text) {
  PauliString p;
  for (char ch : text) {
    switch (ch) {
      case 'I': p.letters.push_back(Letter::I); break;
      case 'X': p.letters.push_back(Letter::X); break;
      case 'Y': p.letters.push_back(Letter::Y); break;
      case 'Z': p.letters.push_back(Letter::Z); break;
      default: throw ValidationError("PauliString: bad letter '" + std::string(1, ch) + "' in '" + std::string(text) + "'");
    }
  }
  if (p.letters.empty()) throw ValidationError("PauliString: empty string");
  return p;
}

ComplexMatrix to_matrix(const PauliString& p) {
  ComplexMatrix m = ComplexMatrix::Identity(1, 1);
  // Highest qubit is the leftmost Kronecker factor.
  for (int q = p.num_qubits() - 1; q >= 0; --q) m = linalg::kron(m, letter_matrix(p.letters[q]));
  return m;
}

ComplexMatrix PauliDecomposition::to_matrix() const {
  const Eigen::Index dim = Eigen::Index{1} << num_qubits;
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (const auto& [p, c] : terms) m += c * pauli::to_matrix(p);
  return m;
}

PauliDecomposition decompose_ketbra(int i, int j, int num_qubits) {
  if (num_qubits < 1 || num_qubits > circuit::kMaxQubits) throw ValidationError("decompose_ketbra: bad qubit count");
  const int dim = 1 << num_qubits;
  if (i < 1 || i > dim || j < 1 || j > dim) {
    throw ValidationError("decompose_ketbra: basis index (" + std::to_string(i) + "," + std::to_string(j) +
                          ") outside [1, " + std::to_string(dim) + "]");
  }
  const unsigned row = static_cast<unsigned>(i - 1);
  const unsigned col = static_cast<unsigned>(j - 1);

  PauliDecomposition d;
  d.num_qubits = num_qubits;
  // Expand the product of per-qubit two-term sums; every one of the 2^n
  // products is a distinct string with coefficient of modulus 2^-n.
  for (unsigned choice = 0; choice < (1u << num_qubits); ++choice) {
    PauliString p;
    p.letters.resize(static_cast<std::size_t>(num_qubits));
    Complex coeff(1.0, 0.0);
    for (int q = 0; q < num_qubits; ++q) {
      const auto pair = single_ketbra(static_cast<int>((row >> q) & 1u), static_cast<int>((col >> q) & 1u));
      const LetterTerm& t = pair[(choice >> q) & 1u];
      p.letters[q] = t.letter;
      coeff *= t.coeff;
    }
    d.terms.emplace(std::move(p), coeff);
  }
  return d;
}

Complex expectation_from_paulis(const PauliDecomposition& d, const std::map<PauliString, double>& means) {
  Complex total(0.0, 0.0);
  std::string missing;
  for (const auto& [p, c] : d.terms) {
    if (p.is_identity()) {
      total += c;
      continue;
    }
    const auto it = means.find(p);
    if (it == means.end()) {
      missing += (missing.empty() ? "" : ", ") + p.str();
      continue;
    }
    total += c * it->second;
  }
  if (!missing.empty()) throw IncompleteDataError("missing Pauli means for: " + missing);
  return total;
}

std::uint64_t MeasurementSetting::mask_bits() const {
  std::uint64_t bits = 0;
  for (int q : mask) bits |= std::uint64_t{1} << q;
  return bits;
}

MeasurementSetting measurement_settings(const PauliString& p) {
  if (p.is_identity()) throw ValidationError("measurement_settings: identity string has mean 1 and needs no setting");
  MeasurementSetting s;
  for (int q = 0; q < p.num_qubits(); ++q) {
    switch (p.letters[q]) {
      case Letter::I:
        continue;
      case Letter::X:
        s.rotations.push_back(circuit::Gate::h(q));
        break;
      case Letter::Y:
        // S^dagger (RZ(-pi/2) up to global phase), then H.
        s.rotations.push_back(circuit::Gate::rz(-std::numbers::pi / 2.0, q));
        s.rotations.push_back(circuit::Gate::h(q));
        break;
      case Letter::Z:
        break;
    }
    s.mask.push_back(q);
  }
  return s;
}

double dense_expectation(const circuit::StateVector& sv, const PauliString& p) {
  if (p.num_qubits() != sv.num_qubits) throw ValidationError("dense_expectation: qubit count mismatch");
  const Complex v = sv.amplitudes.dot(to_matrix(p) * sv.amplitudes);
  return v.real();
}

double parity_mean(const std::vector<double>& distribution, std::uint64_t mask) {
  double m = 0.0;
  for (std::size_t b = 0; b < distribution.size(); ++b) {
    const bool odd = std::popcount(static_cast<std::uint64_t>(b) & mask) & 1;
    m += odd ? -distribution[b] : distribution[b];
  }
  return m;
}

}  // namespace mtomo::pauli
