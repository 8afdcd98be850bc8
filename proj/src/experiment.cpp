#include "mtomo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mtomo/circuit.hpp"
#include "mtomo/errors.hpp"
#include "mtomo/kvfile.hpp"

namespace mtomo::experiment {
namespace {

constexpr std::uint64_t kPointSeedStride = 8192;
constexpr std::uint64_t kTargetSeedStride = 64;

struct PointData {
  double theta = 0.0;
  int k = 0;
  double x11 = 0.0;
  Complex x1k{};
  double xkk_true = 0.0;
};

// Measured (x11, x1K, xKK) for every target K at every sweep point.
std::vector<PointData> measure_points(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> thetas = cfg.theta_sweep.values();
  std::vector<PointData> out;
  out.reserve(thetas.size() * cfg.k_targets.size());

  for (std::size_t pt = 0; pt < thetas.size(); ++pt) {
    const circuit::Circuit c = circuit::parse_circuit(cfg.circuit_text, thetas[pt]);
    const int dim = 1 << c.num_qubits;
    for (int k : cfg.k_targets) {
      if (k < 2 || k > dim) {
        throw ValidationError("config: K = " + std::to_string(k) + " outside [2, " + std::to_string(dim) + "]");
      }
    }

    std::vector<double> pops;
    std::vector<Complex> coherences;
    if (cfg.backend == Backend::exact) {
      const circuit::StateVector sv = circuit::simulate(c);
      pops = circuit::populations(sv);
      for (int k : cfg.k_targets) coherences.push_back(circuit::coherence(sv, 1, k));
    } else {
      sampler::SamplingOptions opts;
      opts.shots = cfg.shots;
      if (cfg.backend == Backend::noisy) {
        opts.noise = sampler::ReadoutNoise::uniform(c.num_qubits, cfg.p01, cfg.p10);
      }
      if (cfg.mitigate) {
        const sampler::ReadoutNoise model = opts.noise ? *opts.noise : sampler::ReadoutNoise::uniform(c.num_qubits, 0, 0);
        opts.calibration = cfg.empirical_calibration
                               ? sampler::build_calibration_empirical(model, c.num_qubits, cfg.calibration_shots,
                                                                      cfg.seed + 0x5EED0000ULL)
                               : sampler::build_calibration(model, c.num_qubits);
      }
      const std::uint64_t point_seed = cfg.seed + kPointSeedStride * pt;
      opts.seed = point_seed;
      pops = sampler::measure_distribution(c, opts);
      for (int k : cfg.k_targets) {
        sampler::SamplingOptions sub = opts;
        sub.seed = point_seed + 1 + kTargetSeedStride * static_cast<std::uint64_t>(k - 2);
        coherences.push_back(sampler::estimate_coherence(c, 1, k, sub).value);
      }
    }
    for (std::size_t idx = 0; idx < cfg.k_targets.size(); ++idx) {
      const int k = cfg.k_targets[idx];
      out.push_back({thetas[pt], k, pops[0], coherences[idx], pops[static_cast<std::size_t>(k - 1)]});
    }
  }
  return out;
}

struct CasePair {
  maxent::Reconstruction a;
  maxent::Reconstruction b;
  double fidelity;
};

CasePair reconstruct_pair(const PointData& p, int dim) {
  maxent::MeasurementRecord rec;
  rec.dim_n = dim;
  rec.index_k = p.k;
  rec.x_11 = p.x11;
  rec.x_1k = p.x1k;
  maxent::Reconstruction a = maxent::reconstruct(rec);
  rec.x_kk = p.xkk_true;
  // Backend truth of a pure state can saturate x11 + xKK = 1 (Bell, K = 4).
  maxent::Reconstruction b = maxent::reconstruct(rec, maxent::Saturation::regularise_always);
  const double f = maxent::fidelity(a.rho, b.rho);
  return {std::move(a), std::move(b), f};
}

int circuit_dim(const ExperimentConfig& cfg) {
  return 1 << circuit::parse_circuit(cfg.circuit_text, cfg.theta_sweep.start).num_qubits;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

Backend parse_backend(const std::string& name) {
  if (name == "exact") return Backend::exact;
  if (name == "shots") return Backend::shots;
  if (name == "noisy") return Backend::noisy;
  throw ValidationError("unknown backend '" + name + "' (expected exact, shots or noisy)");
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::exact: return "exact";
    case Backend::shots: return "shots";
    case Backend::noisy: return "noisy";
  }
  return "?";
}

std::vector<double> ThetaSweep::values() const {
  std::vector<double> v;
  for (int i = 0; i < steps; ++i) {
    v.push_back(steps == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(steps - 1));
  }
  return v;
}

void ExperimentConfig::validate() const {
  if (circuit_text.empty()) throw ValidationError("config: no circuit");
  if (theta_sweep.steps < 1) throw ValidationError("config: theta_steps must be >= 1");
  if (k_targets.empty()) throw ValidationError("config: no K targets");
  if (backend != Backend::exact && shots == 0) throw ValidationError("config: shots required for backend " + backend_name(backend));
  if (backend == Backend::noisy) sampler::ReadoutNoise::uniform(1, p01, p10);
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& base_dir) {
  const KeyValueFile kv = KeyValueFile::parse(text);
  ExperimentConfig cfg;
  cfg.circuit_path = kv.require("circuit");
  std::filesystem::path cp(cfg.circuit_path);
  if (cp.is_relative() && !base_dir.empty()) cp = std::filesystem::path(base_dir) / cp;
  cfg.circuit_path = cp.lexically_normal().string();
  cfg.circuit_text = read_text_file(cfg.circuit_path);
  cfg.theta_sweep.start = kv.get_double("theta_start", 0.0);
  cfg.theta_sweep.stop = kv.get_double("theta_stop", cfg.theta_sweep.start);
  cfg.theta_sweep.steps = static_cast<int>(kv.get_int("theta_steps", 1));
  for (const std::string& item : kv.get_list("k")) {
    try {
      std::size_t used = 0;
      cfg.k_targets.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ValidationError("config: bad K value '" + item + "'");
    }
  }
  cfg.backend = parse_backend(kv.get("backend").value_or("exact"));
  cfg.shots = static_cast<std::uint64_t>(kv.get_int("shots", 0));
  cfg.p01 = kv.get_double("p01", cfg.p01);
  cfg.p10 = kv.get_double("p10", cfg.p10);
  cfg.mitigate = kv.get_bool("mitigate", false);
  const std::string cal = kv.get("calibration").value_or("model");
  if (cal != "model" && cal != "empirical") throw ValidationError("config: calibration must be model or empirical");
  cfg.empirical_calibration = cal == "empirical";
  cfg.calibration_shots = static_cast<std::uint64_t>(kv.get_int("calibration_shots", 100000));
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  cfg.output_path = kv.get("output").value_or("");
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return parse(read_text_file(path), std::filesystem::path(path).parent_path().string());
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
  const int dim = circuit_dim(cfg);
  std::vector<SweepRow> rows;
  for (const PointData& p : measure_points(cfg)) {
    SweepRow row;
    row.theta = p.theta;
    row.k = p.k;
    row.x11 = p.x11;
    row.re_x1k = p.x1k.real();
    row.im_x1k = p.x1k.imag();
    row.xkk_true = p.xkk_true;
    try {
      const CasePair pair = reconstruct_pair(p, dim);
      row.xkk_pred = *pair.a.record.x_kk;
      row.abs_diff = std::abs(row.xkk_true - row.xkk_pred);
      row.fidelity = pair.fidelity;
      row.near_singular = pair.a.near_singular || pair.b.near_singular;
    } catch (const ValidationError&) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.xkk_pred = row.abs_diff = row.fidelity = nan;
      row.near_singular = true;
      row.degenerate = true;
    }
    rows.push_back(row);
  }
  return rows;
}

CaseAbReport run_case_ab(const ExperimentConfig& cfg) {
  const int dim = circuit_dim(cfg);
  CaseAbReport report;
  std::vector<double> fids;
  for (const PointData& p : measure_points(cfg)) {
    CaseAbRow row;
    row.theta = p.theta;
    row.k = p.k;
    row.xkk_b = p.xkk_true;
    try {
      const CasePair pair = reconstruct_pair(p, dim);
      row.xkk_a = *pair.a.record.x_kk;
      row.lambdas_a = pair.a.lambdas;
      row.lambdas_b = pair.b.lambdas;
      row.fidelity = pair.fidelity;
      row.near_singular = pair.a.near_singular || pair.b.near_singular;
      fids.push_back(row.fidelity);
    } catch (const ValidationError&) {
      row.xkk_a = row.fidelity = std::numeric_limits<double>::quiet_NaN();
      row.degenerate = true;
    }
    report.rows.push_back(row);
  }
  if (!fids.empty()) {
    report.min_fidelity = *std::min_element(fids.begin(), fids.end());
    report.median_fidelity = median(fids);
  }
  return report;
}

std::string format_csv(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw ValidationError("emit_csv: no rows");
  std::string out = "theta,k,x11,re_x1k,im_x1k,xkk_true,xkk_pred,abs_diff,fidelity,near_singular\n";
  for (const SweepRow& r : rows) {
    out += fmt(r.theta) + "," + std::to_string(r.k) + "," + fmt(r.x11) + "," + fmt(r.re_x1k) + "," + fmt(r.im_x1k) +
           "," + fmt(r.xkk_true) + "," + fmt(r.xkk_pred) + "," + fmt(r.abs_diff) + "," + fmt(r.fidelity) + "," +
           (r.near_singular ? "1" : "0") + "\n";
  }
  return out;
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) { write_text_file(path, format_csv(rows)); }

std::string format_case_ab_csv(const CaseAbReport& report) {
  if (report.rows.empty()) throw ValidationError("case A/B report has no rows");
  std::string out =
      "theta,k,xkk_a,xkk_b,fidelity,l11_a,re_l1k_a,im_l1k_a,lkk_a,l11_b,re_l1k_b,im_l1k_b,lkk_b,near_singular\n";
  for (const CaseAbRow& r : report.rows) {
    out += fmt(r.theta) + "," + std::to_string(r.k) + "," + fmt(r.xkk_a) + "," + fmt(r.xkk_b) + "," + fmt(r.fidelity);
    for (const maxent::LagrangeSet* ls : {&r.lambdas_a, &r.lambdas_b}) {
      out += "," + fmt(ls->lam_11) + "," + fmt(ls->lam_1k.real()) + "," + fmt(ls->lam_1k.imag()) + "," + fmt(ls->lam_kk);
    }
    out += std::string(",") + (r.near_singular || r.degenerate ? "1" : "0") + "\n";
  }
  return out;
}

std::string format_heatmap_csv(const std::vector<maxent::HeatmapRow>& rows) {
  std::string out = "lam_11,re_lam_1k,im_lam_1k,x11,re_x1k,im_x1k\n";
  for (const maxent::HeatmapRow& r : rows) {
    out += fmt(r.lam_11) + "," + fmt(r.lam_1k.real()) + "," + fmt(r.lam_1k.imag()) + "," + fmt(r.x_11) + "," +
           fmt(r.x_1k.real()) + "," + fmt(r.x_1k.imag()) + "\n";
  }
  return out;
}

maxent::HeatmapGrid parse_heatmap_config(const std::string& text) {
  const KeyValueFile kv = KeyValueFile::parse(text);
  maxent::HeatmapGrid g;
  g.dim_n = static_cast<int>(kv.get_int("n", g.dim_n));
  g.index_k = static_cast<int>(kv.get_int("k", g.index_k));
  g.l11_min = kv.get_double("l11_min", g.l11_min);
  g.l11_max = kv.get_double("l11_max", g.l11_max);
  g.l11_steps = static_cast<int>(kv.get_int("l11_steps", g.l11_steps));
  g.re_l1k_min = kv.get_double("re_l1k_min", g.re_l1k_min);
  g.re_l1k_max = kv.get_double("re_l1k_max", g.re_l1k_max);
  g.re_l1k_steps = static_cast<int>(kv.get_int("re_l1k_steps", g.re_l1k_steps));
  g.im_l1k = kv.get_double("im_l1k", g.im_l1k);
  g.lam_kk = kv.get_double("lkk", g.lam_kk);
  return g;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace mtomo::experiment
