#include "h2ad/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "h2ad/errors.hpp"
#include "h2ad/fusion.hpp"
#include "h2ad/mbdnn.hpp"
#include "h2ad/parallel.hpp"
#include "h2ad/rng.hpp"

namespace h2ad {

double compute_rmse(std::span<const double> estimates_deg, double theta0_deg) {
  if (estimates_deg.empty()) throw EmptyTrialSet();
  double sum = 0.0;
  for (double e : estimates_deg) sum += (e - theta0_deg) * (e - theta0_deg);
  return std::sqrt(sum / double(estimates_deg.size()));
}

std::string to_string(BenchMethod m) {
  switch (m) {
    case BenchMethod::crlb_ratio: return "crlb_ratio";
    case BenchMethod::exact_crlb: return "exact_crlb";
    case BenchMethod::mbdnn: return "mbdnn";
  }
  return "?";
}

BenchMethod parse_bench_method(std::string_view name) {
  if (name == "crlb_ratio") return BenchMethod::crlb_ratio;
  if (name == "exact_crlb") return BenchMethod::exact_crlb;
  if (name == "mbdnn") return BenchMethod::mbdnn;
  throw ConfigError(fmt::format("unknown method '{}'", name));
}

void validate_bench_spec(const BenchSpec& spec) {
  validate_config(spec.cfg);
  if (spec.trials < 1) throw ConfigError("trials must be >= 1");
  if (spec.snr_grid.empty() || spec.snapshot_grid.empty()) throw ConfigError("grids must be non-empty");
  if (spec.methods.empty()) throw ConfigError("no methods requested");
  if (!(std::abs(spec.theta0_deg) <= 90.0)) throw ConfigError("theta0 must lie in [-90, 90] deg");
  for (int t : spec.snapshot_grid) {
    if (t < 1) throw ConfigError("snapshot counts must be >= 1");
  }
  for (int k : spec.k_grid) {
    if (k < 2) throw ConfigError("K values must be >= 2");
  }
  const bool wants_mbdnn =
      std::find(spec.methods.begin(), spec.methods.end(), BenchMethod::mbdnn) != spec.methods.end();
  if (wants_mbdnn && !spec.model_path) throw ConfigError("method mbdnn requires a model path");
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct TrialOutcome {
  std::vector<double> estimate_deg;  // per method, NaN on failure
  std::vector<double> elapsed_ms;    // per method, shared candidate time included
};

}  // namespace

std::vector<ResultRow> run_sweep(const BenchSpec& spec) {
  validate_bench_spec(spec);

  std::optional<MlpModel> model;
  if (spec.model_path) {
    try {
      model = load_model(*spec.model_path);
    } catch (const Error& e) {
      throw ModelLoadError(e.what());
    }
    if (model->spec.group_sizes != spec.cfg.antennas_per_subarray) {
      throw ModelLoadError(fmt::format("{}: model group sizes do not match the array", *spec.model_path));
    }
  }
  const CandidateSource source =
      spec.candidate_source ? spec.candidate_source : CandidateSource(scenario_candidates);

  struct Cell {
    double snr_db;
    int snapshots;
    int k;
  };
  std::vector<Cell> cells;
  const std::vector<int> k_axis = spec.k_grid.empty() ? std::vector<int>{0} : spec.k_grid;
  for (double snr : spec.snr_grid) {
    for (int t : spec.snapshot_grid) {
      for (int k : k_axis) cells.push_back({snr, t, k});
    }
  }

  const std::size_t n_methods = spec.methods.size();
  std::vector<std::vector<ResultRow>> by_method(n_methods);
  const double theta0 = deg_to_rad(spec.theta0_deg);

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    ArrayConfig cfg = spec.cfg;
    if (cell.k > 0) std::fill(cfg.subarrays_per_group.begin(), cfg.subarrays_per_group.end(), cell.k);
    const int k_label = cell.k > 0 ? cell.k : cfg.subarrays_per_group.front();

    std::vector<TrialOutcome> outcomes(std::size_t(spec.trials));
    parallel_for(
        outcomes.size(),
        [&](std::size_t l) {
          TrialOutcome& out = outcomes[l];
          out.estimate_deg.assign(n_methods, std::nan(""));
          out.elapsed_ms.assign(n_methods, 0.0);

          SimScenario sc;
          sc.cfg = cfg;
          sc.theta0 = theta0;
          sc.snr_db = cell.snr_db;
          sc.snapshots = cell.snapshots;
          sc.seed = derive_seed({spec.master_seed, l});

          const auto start = Clock::now();
          std::vector<CandidateSet> candidates;
          try {
            candidates = source(sc);
          } catch (const GroupFailure&) {
            return;
          }
          const double candidate_ms = ms_since(start);

          for (std::size_t mi = 0; mi < n_methods; ++mi) {
            const auto method_start = Clock::now();
            const BenchMethod method = spec.methods[mi];
            if (spec.observer) spec.observer(method, ci, l, candidates);
            try {
              if (method == BenchMethod::mbdnn) {
                out.estimate_deg[mi] = predict_doa(*model, candidates);
              } else {
                const WeightMethod wm = method == BenchMethod::crlb_ratio ? WeightMethod::crlb_ratio
                                                                          : WeightMethod::exact_crlb;
                out.estimate_deg[mi] =
                    rad_to_deg(fuse_candidates(cfg, candidates, wm, cell.snr_db, cell.snapshots).angle);
              }
            } catch (const AngleOutOfGuard&) {
              // Plug-in angle left the CRLB domain; counted as a failed trial.
            } catch (const NonPositiveCrlb&) {
            }
            out.elapsed_ms[mi] = candidate_ms + ms_since(method_start);
          }
        },
        spec.threads);

    double crlb_deg = std::nan("");
    try {
      crlb_deg = rad_to_deg(std::sqrt(fused_crlb(cfg, theta0, cell.snr_db, cell.snapshots).fused_bound));
    } catch (const AngleOutOfGuard&) {
    }

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      std::vector<double> estimates;
      double wall = 0.0;
      for (const auto& o : outcomes) {
        if (std::isfinite(o.estimate_deg[mi])) estimates.push_back(o.estimate_deg[mi]);
        wall += o.elapsed_ms[mi];
      }
      ResultRow row;
      row.method = to_string(spec.methods[mi]);
      row.snr_db = cell.snr_db;
      row.snapshots = cell.snapshots;
      row.k = k_label;
      row.rmse_deg = estimates.empty() ? std::nan("") : compute_rmse(estimates, spec.theta0_deg);
      row.crlb_fused_deg = crlb_deg;
      row.trials_used = static_cast<int>(estimates.size());
      row.failures = spec.trials - row.trials_used;
      row.wall_ms = spec.record_timing ? wall : 0.0;
      by_method[mi].push_back(std::move(row));
    }
  }

  std::vector<ResultRow> rows;
  for (auto& v : by_method) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

void emit_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.method, r.snr_db, r.snapshots, r.k, r.rmse_deg,
                       r.crlb_fused_deg, r.trials_used, r.failures, r.wall_ms);
  }
}

void emit_csv(const std::string& path, std::span<const ResultRow> rows) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
  emit_csv(out, rows);
  if (!out) throw IoError(fmt::format("write to '{}' failed", path));
}

namespace {

template <class T>
T parse_field(std::string_view field, std::size_t line_no) {
  T v{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw IoError(fmt::format("csv line {}: bad field '{}'", line_no, field));
  }
  return v;
}

}  // namespace

std::vector<ResultRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw IoError("csv header mismatch");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 9) throw IoError(fmt::format("csv line {}: expected 9 fields", line_no));
    ResultRow r;
    r.method = std::string(f[0]);
    r.snr_db = parse_field<double>(f[1], line_no);
    r.snapshots = parse_field<int>(f[2], line_no);
    r.k = parse_field<int>(f[3], line_no);
    r.rmse_deg = parse_field<double>(f[4], line_no);
    r.crlb_fused_deg = parse_field<double>(f[5], line_no);
    r.trials_used = parse_field<int>(f[6], line_no);
    r.failures = parse_field<int>(f[7], line_no);
    r.wall_ms = parse_field<double>(f[8], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> write_plot_data(const std::string& prefix, std::span<const ResultRow> rows) {
  auto distinct = [&](auto key) {
    std::vector<double> seen;
    for (const auto& r : rows) {
      const double v = key(r);
      if (std::find(seen.begin(), seen.end(), v) == seen.end()) seen.push_back(v);
    }
    return seen.size();
  };
  enum class Axis { snr, snapshots, k } axis = Axis::snr;
  if (distinct([](const ResultRow& r) { return r.snr_db; }) <= 1) {
    if (distinct([](const ResultRow& r) { return double(r.snapshots); }) > 1) {
      axis = Axis::snapshots;
    } else if (distinct([](const ResultRow& r) { return double(r.k); }) > 1) {
      axis = Axis::k;
    }
  }

  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  std::vector<std::string> paths;
  for (const auto& m : methods) {
    const std::string path = fmt::format("{}_{}.dat", prefix, m);
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
    for (const auto& r : rows) {
      if (r.method != m) continue;
      const double x = axis == Axis::snr ? r.snr_db : axis == Axis::snapshots ? r.snapshots : r.k;
      out << fmt::format("{} {} {}\n", x, r.rmse_deg, r.crlb_fused_deg);
    }
    paths.push_back(path);
  }
  return paths;
}

}  // namespace h2ad
