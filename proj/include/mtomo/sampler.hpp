#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtomo/circuit.hpp"
#include "mtomo/pauli.hpp"

namespace mtomo::sampler {

/// SplitMix64 in counter mode: draw k (0-based) is mix(mix(seed) + (k+1)*gamma),
/// gamma = 0x9E3779B97F4A7C15. Streams depend only on (seed, k), so results
/// are identical across platforms and scheduling orders.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform();
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Independent per-qubit readout flips: p01 = P(read 1 | 0), p10 = P(read 0 | 1).
struct ReadoutNoise {
  std::vector<double> p01;
  std::vector<double> p10;

  static ReadoutNoise uniform(int num_qubits, double p01, double p10);
  int num_qubits() const { return static_cast<int>(p01.size()); }
  void validate() const;
};

struct CountsTable {
  int num_qubits = 0;
  std::uint64_t shots = 0;
  std::map<std::string, std::uint64_t> counts;  // bitstring, qubit 0 rightmost
  std::uint64_t seed = 0;

  /// Frequencies indexed by basis index (bit q = qubit q).
  std::vector<double> frequencies() const;
};

/// Bitstring of `index` with qubit 0 as the rightmost character.
std::string to_bitstring(std::uint64_t index, int num_qubits);
std::uint64_t from_bitstring(std::string_view bits);

/// Text form: `shots <n>`, `seed <s>`, then `<bitstring> <count>` lines.
std::string format_counts(const CountsTable& ct);
CountsTable parse_counts(std::string_view text);

CountsTable sample_counts(const circuit::StateVector& sv, std::uint64_t shots, const std::optional<ReadoutNoise>& noise,
                          std::uint64_t seed);

std::vector<double> estimate_populations(const CountsTable& ct);

/// Column-stochastic confusion matrix, M(r, t) = P(read r | prepared t).
struct CalibrationMatrix {
  int num_qubits = 0;
  Eigen::MatrixXd m;

  void validate() const;
};

CalibrationMatrix build_calibration(const ReadoutNoise& noise, int num_qubits);

/// Estimates each column by preparing basis state t and sampling `shots`
/// noisy readouts (seed + t for column t).
CalibrationMatrix build_calibration_empirical(const ReadoutNoise& noise, int num_qubits, std::uint64_t shots,
                                              std::uint64_t seed);

/// Least-squares solution of M p = f over the probability simplex.
std::vector<double> mitigate(const CountsTable& ct, const CalibrationMatrix& cal);
std::vector<double> mitigate_distribution(const std::vector<double>& freqs, const CalibrationMatrix& cal);

/// Exact readout distribution M_noise |a|^2.
std::vector<double> apply_readout_noise(std::vector<double> probs, const ReadoutNoise& noise);

/// How a circuit is measured. `shots` unset means the exact (infinite-shot)
/// distribution; readout noise and mitigation apply in either mode.
struct SamplingOptions {
  std::optional<std::uint64_t> shots;
  std::optional<ReadoutNoise> noise;
  std::optional<CalibrationMatrix> calibration;
  std::uint64_t seed = 0;
};

/// Z-basis outcome distribution of the circuit under the given options.
std::vector<double> measure_distribution(const circuit::Circuit& c, const SamplingOptions& opts);

/// <P> from the rotated circuit; uses opts.seed for the sampler stream.
double estimate_pauli(const circuit::Circuit& c, const pauli::PauliString& p, const SamplingOptions& opts);

struct CoherenceEstimate {
  Complex value;
  /// sqrt(sum |c_P|^2 (1 - <P>^2) / shots); zero in exact mode.
  double std_error = 0.0;
};

/// <|i><j|> via Pauli decomposition. The s-th non-identity string (in
/// decomposition order) is sampled with seed opts.seed + s.
CoherenceEstimate estimate_coherence(const circuit::Circuit& c, int i, int j, const SamplingOptions& opts);

}  // namespace mtomo::sampler
