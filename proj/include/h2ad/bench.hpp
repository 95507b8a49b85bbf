#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "h2ad/array_model.hpp"
#include "h2ad/signal_sim.hpp"
#include "h2ad/subspace.hpp"

namespace h2ad {

/// Root-mean-squared error in degrees. Throws EmptyTrialSet.
double compute_rmse(std::span<const double> estimates_deg, double theta0_deg);

enum class BenchMethod { crlb_ratio, exact_crlb, mbdnn };

std::string to_string(BenchMethod m);
BenchMethod parse_bench_method(std::string_view name);

/// Candidate generation for one trial; replaceable so tests can record or
/// fake what the harness consumes.
using CandidateSource = std::function<std::vector<CandidateSet>(const SimScenario&)>;

/// Called once per (method, cell, trial) with the candidates that method used.
using TrialObserver = std::function<void(BenchMethod, std::size_t cell, std::size_t trial,
                                         std::span<const CandidateSet>)>;

struct BenchSpec {
  ArrayConfig cfg;
  double theta0_deg = 41.0;
  std::vector<double> snr_grid{-15, -10, -5, 0, 5, 10, 15};
  std::vector<int> snapshot_grid{200};
  std::vector<int> k_grid;  // empty: keep the config's K; otherwise uniform K per cell
  int trials = 200;
  std::vector<BenchMethod> methods{BenchMethod::crlb_ratio, BenchMethod::exact_crlb};
  std::optional<std::string> model_path;
  std::uint64_t master_seed = 1;
  bool record_timing = true;
  unsigned threads = 0;  // 0: hardware concurrency

  CandidateSource candidate_source;  // default: simulate + root-MUSIC
  TrialObserver observer;
};

struct ResultRow {
  std::string method;
  double snr_db = 0.0;
  int snapshots = 0;
  int k = 0;
  double rmse_deg = 0.0;
  double crlb_fused_deg = 0.0;
  int trials_used = 0;
  int failures = 0;
  double wall_ms = 0.0;

  bool operator==(const ResultRow&) const = default;
};

/// Throws ConfigError for an invalid spec.
void validate_bench_spec(const BenchSpec& spec);

/// Every (snr, T, K) cell x method, `trials` Monte-Carlo trials each. Trial l
/// of every cell and every method uses the seed derive(master_seed, l), and
/// all methods in a cell share one candidate computation per trial. Rows are
/// ordered by method, then snr, T, K grid index. Failed trials are counted,
/// not imputed; rmse is NaN when every trial failed.
std::vector<ResultRow> run_sweep(const BenchSpec& spec);

inline constexpr const char* kCsvHeader =
    "method,snr_db,snapshots,K,rmse_deg,crlb_fused_deg,trials_used,failures,wall_ms";

void emit_csv(std::ostream& out, std::span<const ResultRow> rows);
void emit_csv(const std::string& path, std::span<const ResultRow> rows);
std::vector<ResultRow> parse_csv(std::istream& in);

/// One "<prefix>_<method>.dat" per method with "x rmse_deg crlb_fused_deg"
/// lines, x being the first swept axis among snr, snapshots, K.
std::vector<std::string> write_plot_data(const std::string& prefix, std::span<const ResultRow> rows);

}  // namespace h2ad
