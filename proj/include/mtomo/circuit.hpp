#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtomo/linalg.hpp"

namespace mtomo::circuit {

inline constexpr int kMaxQubits = 6;

enum class GateKind { H, X, CX, CZ, RX, RY, RZ };

std::string_view mnemonic(GateKind kind);

struct Gate {
  GateKind kind = GateKind::H;
  std::array<int, 2> targets{0, -1};  // targets[1] only for CX (control, target) and CZ
  double angle = 0.0;                 // radians, rotation gates only

  static Gate h(int q) { return {GateKind::H, {q, -1}, 0.0}; }
  static Gate x(int q) { return {GateKind::X, {q, -1}, 0.0}; }
  static Gate cx(int control, int target) { return {GateKind::CX, {control, target}, 0.0}; }
  static Gate cz(int a, int b) { return {GateKind::CZ, {a, b}, 0.0}; }
  static Gate rx(double theta, int q) { return {GateKind::RX, {q, -1}, theta}; }
  static Gate ry(double theta, int q) { return {GateKind::RY, {q, -1}, theta}; }
  static Gate rz(double theta, int q) { return {GateKind::RZ, {q, -1}, theta}; }

  bool two_qubit() const { return kind == GateKind::CX || kind == GateKind::CZ; }
  bool rotation() const { return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ; }
  bool operator==(const Gate&) const = default;
};

struct Circuit {
  int num_qubits = 1;
  std::vector<Gate> gates;

  /// Throws ValidationError on qubit count or target range violations.
  void validate() const;
};

/// Parse the line-oriented gate language:
///
///   qubits 2
///   h 0
///   cx 0 1          # control, target
///   ry(pi/2) 1
///   rx(2*theta) 0
///
/// Angle expressions are products and quotients of literals, `pi` and
/// `theta`, with an optional leading minus. `theta` must be bound.
Circuit parse_circuit(std::string_view text, std::optional<double> theta = std::nullopt);

/// Inverse of parse_circuit for already-bound circuits.
std::string format_circuit(const Circuit& c);

/// Amplitudes indexed by the integer whose bit q is the value of qubit q.
struct StateVector {
  int num_qubits = 0;
  ComplexVector amplitudes;

  std::size_t size() const { return static_cast<std::size_t>(amplitudes.size()); }
};

StateVector zero_state(int num_qubits);

/// Applies a single gate in place.
void apply_gate(StateVector& sv, const Gate& g);

/// Runs the circuit from |0...0>.
StateVector simulate(const Circuit& c);

/// x_ii = |a_{i-1}|^2 for i = 1..2^n.
std::vector<double> populations(const StateVector& sv);

/// <psi| (|i><j|) |psi> = conj(a_{i-1}) a_{j-1}, 1-based indices.
Complex coherence(const StateVector& sv, int i, int j);

/// |psi><psi|.
ComplexMatrix outer_product(const StateVector& sv);

}  // namespace mtomo::circuit
