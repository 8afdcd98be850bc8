// mtomo: MaxEnt density-matrix reconstruction from partial measurements.
//
//   mtomo reconstruct <record-file>
//   mtomo sweep <config-file>       [--seed S] [--out FILE] [--format csv]
//   mtomo caseab <config-file>
//   mtomo heatmap <config-file>
//   mtomo decompose <i> <j> <n>
//
// Exit codes: 0 success, 2 validation error, 3 infeasible record.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mtomo/errors.hpp"
#include "mtomo/experiment.hpp"
#include "mtomo/kvfile.hpp"
#include "mtomo/pauli.hpp"
#include "mtomo/record_io.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;

std::string num(double v) {
  char buf[40];
  if (v == 0) v = 0.0;  // no "-0"
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string complex_str(mtomo::Complex c) {
  return num(c.real()) + (c.imag() < 0 ? " - " : " + ") + num(std::abs(c.imag())) + "i";
}

void write_or_print(const std::string& content, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    mtomo::experiment::write_text_file(path, content);
    std::cerr << "wrote " << path << "\n";
  }
}

int cmd_reconstruct(const std::string& path) {
  using namespace mtomo::maxent;
  const MeasurementRecord rec = parse_record(mtomo::read_text_file(path));
  const Reconstruction r = reconstruct(rec);
  std::cout << "# completed record\n" << format_record(r.record);
  std::cout << "# multipliers\n"
            << "lambda_11 = " << num(r.lambdas.lam_11) << "\n"
            << "lambda_1k = " << complex_str(r.lambdas.lam_1k) << "\n"
            << "lambda_kk = " << num(r.lambdas.lam_kk) << "\n";
  if (r.near_singular) std::cout << "# near-singular: data saturate the positivity bound; floor-regularised\n";
  if (r.prediction_clamped) std::cout << "# warning: predicted xkk clamped to [0, 1 - x11]\n";
  std::cout << "# density matrix (row-major, re im pairs)\n";
  const auto& m = r.rho.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::cout << (j ? "  " : "") << num(m(i, j).real()) << " " << num(m(i, j).imag());
    }
    std::cout << "\n";
  }
  return 0;
}

mtomo::experiment::ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed,
                                                const std::string& out) {
  auto cfg = mtomo::experiment::ExperimentConfig::load(path);
  if (seed) cfg.seed = *seed;
  if (!out.empty()) cfg.output_path = out;
  return cfg;
}

int cmd_sweep(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out) {
  const auto cfg = load_config(path, seed, out);
  write_or_print(mtomo::experiment::format_csv(mtomo::experiment::run_sweep(cfg)), cfg.output_path);
  return 0;
}

int cmd_caseab(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out) {
  const auto cfg = load_config(path, seed, out);
  const auto report = mtomo::experiment::run_case_ab(cfg);
  write_or_print(mtomo::experiment::format_case_ab_csv(report), cfg.output_path);
  std::cerr << "case A vs B fidelity: min " << num(report.min_fidelity) << ", median " << num(report.median_fidelity)
            << " over " << report.rows.size() << " points\n";
  return 0;
}

int cmd_heatmap(const std::string& path, const std::string& out) {
  const std::string text = mtomo::read_text_file(path);
  const auto grid = mtomo::experiment::parse_heatmap_config(text);
  std::string target = out;
  if (target.empty()) target = mtomo::KeyValueFile::parse(text).get("output").value_or("");
  write_or_print(mtomo::experiment::format_heatmap_csv(mtomo::maxent::heatmap_scan(grid)), target);
  return 0;
}

int cmd_decompose(int i, int j, int n) {
  const auto d = mtomo::pauli::decompose_ketbra(i, j, n);
  std::cout << "# |" << i << "><" << j << "| on " << n << " qubit(s); letters qubit 0 first\n";
  for (const auto& [p, c] : d.terms) std::cout << p.str() << "  " << complex_str(c) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MaxEnt density-matrix reconstruction from partial measurements"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out, "Output file ('-' for stdout)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));

  std::string record_path;
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct rho from a measurement record");
  rec->add_option("record", record_path, "Record file (n, k, x11, re_x1k, im_x1k[, xkk])")->required();

  std::string config_path;
  auto* sweep = app.add_subcommand("sweep", "Theta sweep: true vs predicted xKK as CSV");
  sweep->add_option("config", config_path, "Experiment config")->required();
  auto* caseab = app.add_subcommand("caseab", "Case A (predicted xKK) vs case B (measured xKK)");
  caseab->add_option("config", config_path, "Experiment config")->required();
  auto* heatmap = app.add_subcommand("heatmap", "Forward-map grid over lambda_11 and Re lambda_1K");
  heatmap->add_option("config", config_path, "Heatmap config")->required();

  int ki = 0, kj = 0, kn = 0;
  auto* decompose = app.add_subcommand("decompose", "Pauli terms of |i><j|");
  decompose->add_option("i", ki)->required();
  decompose->add_option("j", kj)->required();
  decompose->add_option("n", kn)->required();

  for (auto* sub : {rec, sweep, caseab, heatmap, decompose}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*rec) return cmd_reconstruct(record_path);
    if (*sweep) return cmd_sweep(config_path, seed, out);
    if (*caseab) return cmd_caseab(config_path, seed, out);
    if (*heatmap) return cmd_heatmap(config_path, out);
    if (*decompose) return cmd_decompose(ki, kj, kn);
  } catch (const mtomo::InfeasibleRecordError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const mtomo::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
