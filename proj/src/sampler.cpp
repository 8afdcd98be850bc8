#include "mtomo/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mtomo/errors.hpp"
#include "mtomo/kvfile.hpp"

namespace mtomo::sampler {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

void check_qubits(int n) {
  if (n < 1 || n > circuit::kMaxQubits) throw ValidationError("sampler: unsupported qubit count " + std::to_string(n));
}

// Euclidean projection onto {p >= 0, sum p = 1}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  return (v.array() - tau).max(0.0).matrix();
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed) : key_(mix(seed)) {}

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::next() {
  ++counter_;
  return mix(key_ + counter_ * kGamma);
}

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

ReadoutNoise ReadoutNoise::uniform(int num_qubits, double p01, double p10) {
  check_qubits(num_qubits);
  ReadoutNoise n;
  n.p01.assign(static_cast<std::size_t>(num_qubits), p01);
  n.p10.assign(static_cast<std::size_t>(num_qubits), p10);
  n.validate();
  return n;
}

void ReadoutNoise::validate() const {
  if (p01.size() != p10.size()) throw ValidationError("ReadoutNoise: p01 and p10 lengths differ");
  for (std::size_t q = 0; q < p01.size(); ++q) {
    if (!(p01[q] >= 0.0 && p01[q] <= 0.5) || !(p10[q] >= 0.0 && p10[q] <= 0.5)) {
      throw ValidationError("ReadoutNoise: flip probabilities for qubit " + std::to_string(q) + " outside [0, 0.5]");
    }
  }
}

std::string to_bitstring(std::uint64_t index, int num_qubits) {
  std::string s(static_cast<std::size_t>(num_qubits), '0');
  for (int q = 0; q < num_qubits; ++q) {
    if ((index >> q) & 1u) s[static_cast<std::size_t>(num_qubits - 1 - q)] = '1';
  }
  return s;
}

std::uint64_t from_bitstring(std::string_view bits) {
  if (bits.empty() || bits.size() > static_cast<std::size_t>(circuit::kMaxQubits)) {
    throw ValidationError("bitstring '" + std::string(bits) + "' has unsupported length");
  }
  std::uint64_t idx = 0;
  for (char ch : bits) {
    if (ch != '0' && ch != '1') throw ValidationError("bitstring '" + std::string(bits) + "' contains non-binary characters");
    idx = (idx << 1) | static_cast<std::uint64_t>(ch == '1');
  }
  return idx;
}

std::vector<double> CountsTable::frequencies() const {
  std::vector<double> f(std::size_t{1} << num_qubits, 0.0);
  for (const auto& [bits, n] : counts) f[from_bitstring(bits)] = static_cast<double>(n) / static_cast<double>(shots);
  return f;
}

std::string format_counts(const CountsTable& ct) {
  std::ostringstream os;
  os << "shots " << ct.shots << "\n" << "seed " << ct.seed << "\n";
  for (const auto& [bits, n] : ct.counts) os << bits << " " << n << "\n";
  return os.str();
}

CountsTable parse_counts(std::string_view text) {
  const KeyValueFile kv = KeyValueFile::parse(text);
  CountsTable ct;
  ct.shots = static_cast<std::uint64_t>(kv.require_int("shots"));
  ct.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  std::uint64_t total = 0;
  for (const auto& [key, value] : kv.entries()) {
    if (key == "shots" || key == "seed") continue;
    from_bitstring(key);
    if (ct.num_qubits == 0) ct.num_qubits = static_cast<int>(key.size());
    if (static_cast<int>(key.size()) != ct.num_qubits) throw ValidationError("counts: bitstrings have mixed lengths");
    const auto n = static_cast<std::uint64_t>(kv.require_int(key));
    ct.counts[key] = n;
    total += n;
  }
  if (ct.num_qubits == 0) throw ValidationError("counts: no bitstring lines");
  if (total != ct.shots) throw ValidationError("counts: entries sum to " + std::to_string(total) + ", not shots");
  return ct;
}

std::vector<double> apply_readout_noise(std::vector<double> probs, const ReadoutNoise& noise) {
  noise.validate();
  for (int q = 0; q < noise.num_qubits(); ++q) {
    const std::size_t stride = std::size_t{1} << q;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (i & stride) continue;
      const double p0 = probs[i];
      const double p1 = probs[i | stride];
      probs[i] = (1.0 - noise.p01[q]) * p0 + noise.p10[q] * p1;
      probs[i | stride] = noise.p01[q] * p0 + (1.0 - noise.p10[q]) * p1;
    }
  }
  return probs;
}

CountsTable sample_counts(const circuit::StateVector& sv, std::uint64_t shots, const std::optional<ReadoutNoise>& noise,
                          std::uint64_t seed) {
  if (shots == 0) throw ValidationError("sample_counts: shots must be positive");
  if (noise) {
    noise->validate();
    if (noise->num_qubits() != sv.num_qubits) throw ValidationError("sample_counts: noise/qubit count mismatch");
  }
  const std::vector<double> probs = circuit::populations(sv);
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());
  // Last outcome with nonzero weight absorbs rounding in the final cdf entry.
  std::size_t last = probs.size() - 1;
  while (last > 0 && probs[last] == 0.0) --last;

  CounterRng rng(seed);
  std::vector<std::uint64_t> tally(probs.size(), 0);
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * cdf.back();
    std::size_t idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    idx = std::min(idx, last);
    if (noise) {
      for (int q = 0; q < sv.num_qubits; ++q) {
        const bool one = (idx >> q) & 1u;
        const double flip = one ? noise->p10[q] : noise->p01[q];
        if (rng.uniform() < flip) idx ^= std::size_t{1} << q;
      }
    }
    ++tally[idx];
  }

  CountsTable ct{sv.num_qubits, shots, {}, seed};
  for (std::size_t i = 0; i < tally.size(); ++i) {
    if (tally[i]) ct.counts[to_bitstring(i, sv.num_qubits)] = tally[i];
  }
  return ct;
}

std::vector<double> estimate_populations(const CountsTable& ct) { return ct.frequencies(); }

void CalibrationMatrix::validate() const {
  const Eigen::Index dim = Eigen::Index{1} << num_qubits;
  if (m.rows() != dim || m.cols() != dim) throw ValidationError("CalibrationMatrix: wrong dimension");
  if ((m.array() < 0.0).any()) throw ValidationError("CalibrationMatrix: negative entry");
  for (Eigen::Index c = 0; c < dim; ++c) {
    if (std::abs(m.col(c).sum() - 1.0) > 1e-12) throw ValidationError("CalibrationMatrix: column does not sum to 1");
  }
}

CalibrationMatrix build_calibration(const ReadoutNoise& noise, int num_qubits) {
  check_qubits(num_qubits);
  noise.validate();
  if (noise.num_qubits() != num_qubits) throw ValidationError("build_calibration: noise/qubit count mismatch");
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(1, 1);
  for (int q = num_qubits - 1; q >= 0; --q) {
    Eigen::Matrix2d single;
    single << 1.0 - noise.p01[q], noise.p10[q], noise.p01[q], 1.0 - noise.p10[q];
    Eigen::MatrixXd next(m.rows() * 2, m.cols() * 2);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) next.block(i * 2, j * 2, 2, 2) = m(i, j) * single;
    m = std::move(next);
  }
  return {num_qubits, std::move(m)};
}

CalibrationMatrix build_calibration_empirical(const ReadoutNoise& noise, int num_qubits, std::uint64_t shots,
                                              std::uint64_t seed) {
  check_qubits(num_qubits);
  const Eigen::Index dim = Eigen::Index{1} << num_qubits;
  CalibrationMatrix cal{num_qubits, Eigen::MatrixXd::Zero(dim, dim)};
  for (Eigen::Index t = 0; t < dim; ++t) {
    circuit::StateVector basis = circuit::zero_state(num_qubits);
    basis.amplitudes.setZero();
    basis.amplitudes[t] = 1.0;
    const std::vector<double> f = sample_counts(basis, shots, noise, seed + static_cast<std::uint64_t>(t)).frequencies();
    for (Eigen::Index r = 0; r < dim; ++r) cal.m(r, t) = f[static_cast<std::size_t>(r)];
  }
  return cal;
}

std::vector<double> mitigate_distribution(const std::vector<double>& freqs, const CalibrationMatrix& cal) {
  cal.validate();
  const Eigen::Index dim = cal.m.rows();
  if (static_cast<Eigen::Index>(freqs.size()) != dim) throw ValidationError("mitigate: dimension mismatch");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cal.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv[dim - 1] < 1e-10 * sv[0]) {
    throw IllConditionedError("mitigate: calibration matrix is singular (some p01 + p10 = 1)");
  }
  const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(freqs.data(), dim);
  Eigen::VectorXd p = svd.solve(f);
  if ((p.array() < 0.0).any()) {
    // Accelerated projected gradient on 0.5 |M p - f|^2 over the simplex.
    const double lip = sv[0] * sv[0];
    const Eigen::MatrixXd mtm = cal.m.transpose() * cal.m;
    const Eigen::VectorXd mtf = cal.m.transpose() * f;
    p = project_simplex(p);
    Eigen::VectorXd y = p;
    double t = 1.0;
    for (int it = 0; it < 100000; ++it) {
      const Eigen::VectorXd next = project_simplex(y - (mtm * y - mtf) / lip);
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - p);
      const double change = (next - p).lpNorm<Eigen::Infinity>();
      p = next;
      t = t_next;
      if (change < 1e-15) break;
    }
    p = p.array().max(0.0);
    p /= p.sum();
  }
  return {p.data(), p.data() + dim};
}

std::vector<double> mitigate(const CountsTable& ct, const CalibrationMatrix& cal) {
  if (ct.num_qubits != cal.num_qubits) throw ValidationError("mitigate: counts/calibration qubit count mismatch");
  return mitigate_distribution(ct.frequencies(), cal);
}

std::vector<double> measure_distribution(const circuit::Circuit& c, const SamplingOptions& opts) {
  const circuit::StateVector sv = circuit::simulate(c);
  std::vector<double> dist;
  if (opts.shots) {
    dist = sample_counts(sv, *opts.shots, opts.noise, opts.seed).frequencies();
  } else {
    dist = circuit::populations(sv);
    if (opts.noise) dist = apply_readout_noise(std::move(dist), *opts.noise);
  }
  if (opts.calibration) dist = mitigate_distribution(dist, *opts.calibration);
  return dist;
}

double estimate_pauli(const circuit::Circuit& c, const pauli::PauliString& p, const SamplingOptions& opts) {
  if (p.num_qubits() != c.num_qubits) throw ValidationError("estimate_pauli: Pauli string / circuit qubit count mismatch");
  const pauli::MeasurementSetting setting = pauli::measurement_settings(p);
  circuit::Circuit rotated = c;
  rotated.gates.insert(rotated.gates.end(), setting.rotations.begin(), setting.rotations.end());
  return pauli::parity_mean(measure_distribution(rotated, opts), setting.mask_bits());
}

CoherenceEstimate estimate_coherence(const circuit::Circuit& c, int i, int j, const SamplingOptions& opts) {
  if (i == j) throw ValidationError("estimate_coherence: i and j must differ (use populations for i == j)");
  const pauli::PauliDecomposition d = pauli::decompose_ketbra(i, j, c.num_qubits);
  std::map<pauli::PauliString, double> means;
  double variance = 0.0;
  std::uint64_t setting = 0;
  for (const auto& [p, coeff] : d.terms) {
    if (p.is_identity()) continue;
    SamplingOptions sub = opts;
    sub.seed = opts.seed + setting++;
    const double m = estimate_pauli(c, p, sub);
    means[p] = m;
    variance += std::norm(coeff) * std::max(0.0, 1.0 - m * m);
  }
  CoherenceEstimate out{pauli::expectation_from_paulis(d, means), 0.0};
  if (opts.shots) out.std_error = std::sqrt(variance / static_cast<double>(*opts.shots));
  return out;
}

}  // namespace mtomo::sampler
