#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtomo/maxent.hpp"
#include "mtomo/sampler.hpp"

namespace mtomo::experiment {

enum class Backend { exact, shots, noisy };

Backend parse_backend(const std::string& name);
std::string backend_name(Backend b);

struct ThetaSweep {
  double start = 0.0;
  double stop = 0.0;
  int steps = 1;

  /// `steps` evenly spaced values including both ends (just `start` when steps == 1).
  std::vector<double> values() const;
};

/// One experiment, loaded from a flat key-value file:
///
///   circuit = ../circuits/model1.qc   # relative to the config file
///   theta_start = 0
///   theta_stop = 6.283185307179586
///   theta_steps = 21
///   k = 2, 3, 4
///   backend = noisy                   # exact | shots | noisy
///   shots = 8192
///   p01 = 0.02                        # noisy backend only
///   p10 = 0.04
///   mitigate = true
///   calibration = model               # model | empirical
///   calibration_shots = 100000
///   seed = 7
///   output = sweep.csv
struct ExperimentConfig {
  std::string circuit_path;
  std::string circuit_text;
  ThetaSweep theta_sweep;
  std::vector<int> k_targets;
  Backend backend = Backend::exact;
  std::uint64_t shots = 0;
  double p01 = 0.02;
  double p10 = 0.04;
  bool mitigate = false;
  bool empirical_calibration = false;
  std::uint64_t calibration_shots = 100000;
  std::uint64_t seed = 0;
  std::string output_path;

  void validate() const;
  static ExperimentConfig load(const std::string& path);
  /// `base_dir` resolves a relative circuit path; circuit text is read eagerly.
  static ExperimentConfig parse(const std::string& text, const std::string& base_dir);
};

struct SweepRow {
  double theta = 0.0;
  int k = 0;
  double x11 = 0.0;
  double re_x1k = 0.0;
  double im_x1k = 0.0;
  double xkk_true = 0.0;
  double xkk_pred = 0.0;
  double abs_diff = 0.0;
  double fidelity = 0.0;  // case-A vs case-B reconstruction
  bool near_singular = false;
  bool degenerate = false;  // x11 at the floor; prediction columns are NaN
};

/// Theta outer, K inner. Point p uses seed + 8192 * p; its population
/// setting uses that seed, the coherence settings for target K start at
/// point seed + 1 + 64 * (K - 2).
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

struct CaseAbRow {
  double theta = 0.0;
  int k = 0;
  double xkk_a = 0.0;  // predicted
  double xkk_b = 0.0;  // supplied by the backend
  maxent::LagrangeSet lambdas_a;
  maxent::LagrangeSet lambdas_b;
  double fidelity = 0.0;
  bool near_singular = false;
  bool degenerate = false;
};

struct CaseAbReport {
  std::vector<CaseAbRow> rows;
  double min_fidelity = 0.0;
  double median_fidelity = 0.0;
};

CaseAbReport run_case_ab(const ExperimentConfig& cfg);

/// Header plus one line per row, %.12g numbers, LF endings.
std::string format_csv(const std::vector<SweepRow>& rows);
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);

std::string format_case_ab_csv(const CaseAbReport& report);
std::string format_heatmap_csv(const std::vector<maxent::HeatmapRow>& rows);

/// Keys: n, k, l11_min, l11_max, l11_steps, re_l1k_min, re_l1k_max,
/// re_l1k_steps, im_l1k, lkk (all optional, defaults of HeatmapGrid).
maxent::HeatmapGrid parse_heatmap_config(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);

/// Median of the non-NaN entries (degenerate rows carry NaN); NaN if none.
double median(std::vector<double> values);

}  // namespace mtomo::experiment
