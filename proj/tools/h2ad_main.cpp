// h2ad: command-line front end for simulation, estimation, MBDNN training and
// Monte-Carlo benchmarking on heterogeneous hybrid analog-digital arrays.
//
// Exit codes: 0 success, 2 configuration / usage error, 3 runtime failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "h2ad/bench.hpp"
#include "h2ad/errors.hpp"
#include "h2ad/fusion.hpp"
#include "h2ad/mbdnn.hpp"
#include "h2ad/signal_sim.hpp"

using namespace h2ad;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// "a:step:b" (inclusive) or "a,b,c".
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw ConfigError(fmt::format("bad number '{}' in grid '{}'", s, text));
    return v;
  };
  if (std::count(text.begin(), text.end(), ':') == 2) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    const double lo = number(text.substr(0, c1));
    const double step = number(text.substr(c1 + 1, c2 - c1 - 1));
    const double hi = number(text.substr(c2 + 1));
    if (!(step > 0.0) || hi < lo) throw ConfigError(fmt::format("bad range '{}'", text));
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(lo + double(i) * step);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(number(item));
  if (out.empty()) throw ConfigError(fmt::format("empty grid '{}'", text));
  return out;
}

std::vector<int> parse_int_grid(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_grid(text)) {
    if (v != std::floor(v)) throw ConfigError(fmt::format("grid '{}' must hold integers", text));
    out.push_back(static_cast<int>(v));
  }
  return out;
}

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "+inf" || s == "noiseless") return std::numeric_limits<double>::infinity();
  return parse_grid(s).at(0);
}

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", c.config, "array config file (groups, M, K, d_over_lambda, lambda_m)");
  if (needs_config) opt->required();
  cmd->add_option("--seed", c.seed, "master seed")->capture_default_str();
  cmd->add_option("--out", c.out, "output path");
}

struct ScenarioArgs {
  double theta = 41.0;
  std::string snr = "10";
  int snapshots = 200;
};

void add_scenario(CLI::App* cmd, ScenarioArgs& s) {
  cmd->add_option("--theta", s.theta, "emitter angle, degrees")->capture_default_str();
  cmd->add_option("--snr", s.snr, "per-element SNR in dB, or 'inf'")->capture_default_str();
  cmd->add_option("--snapshots", s.snapshots, "snapshots T")->capture_default_str();
}

SimScenario make_scenario(const ArrayConfig& cfg, const ScenarioArgs& s, std::uint64_t seed) {
  SimScenario sc;
  sc.cfg = cfg;
  sc.theta0 = deg_to_rad(s.theta);
  sc.snr_db = parse_snr(s.snr);
  sc.snapshots = s.snapshots;
  sc.seed = seed;
  validate_scenario(sc);
  return sc;
}

// Candidates from snapshot files (one per group, any order) or a fresh simulation.
std::vector<CandidateSet> candidates_for(const ArrayConfig& cfg, const std::vector<std::string>& inputs,
                                         const SimScenario& sc) {
  if (inputs.empty()) return scenario_candidates(sc);
  if (static_cast<int>(inputs.size()) != cfg.num_groups) {
    throw ConfigError(fmt::format("{} snapshot files given, config has {} groups", inputs.size(), cfg.num_groups));
  }
  std::vector<CandidateSet> sets(inputs.size());
  std::vector<bool> seen(inputs.size(), false);
  for (const auto& path : inputs) {
    const GroupSnapshots gs = read_snapshots(path);
    if (gs.group_index < 0 || gs.group_index >= cfg.num_groups || seen[gs.group_index]) {
      throw ConfigError(fmt::format("{}: group index {} missing from config or repeated", path, gs.group_index));
    }
    const auto geom = cfg.group(gs.group_index);
    if (gs.data.rows() != geom.subarrays) {
      throw ConfigError(fmt::format("{}: K = {} but config says {}", path, gs.data.rows(), geom.subarrays));
    }
    try {
      sets[gs.group_index] = group_candidates(sample_covariance(gs), geom);
    } catch (const Error& e) {
      throw GroupFailure(gs.group_index, e.what());
    }
    seen[gs.group_index] = true;
  }
  return sets;
}

std::vector<double> degrees(const std::vector<double>& rad) {
  std::vector<double> out;
  for (double r : rad) out.push_back(rad_to_deg(r));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"h2ad: DOA estimation on heterogeneous hybrid analog-digital arrays"};
  app.require_subcommand(1);

  Common common;
  ScenarioArgs scen;

  auto* validate = app.add_subcommand("validate", "check a config file and print its geometry");
  add_common(validate, common);

  auto* simulate = app.add_subcommand("simulate", "write per-group snapshot files");
  add_common(simulate, common);
  add_scenario(simulate, scen);

  std::string method = "crlb_ratio";
  bool dump_candidates = false, as_json = false;
  std::vector<std::string> inputs;
  auto* estimate = app.add_subcommand("estimate", "estimate the DOA of one scenario");
  add_common(estimate, common);
  add_scenario(estimate, scen);
  estimate->add_option("--method", method, "crlb_ratio | exact_crlb")->capture_default_str();
  estimate->add_option("--input", inputs, "snapshot files, one per group (skips simulation)");
  estimate->add_flag("--dump-candidates", dump_candidates, "include every group's candidate angles");
  estimate->add_flag("--json", as_json, "JSON output");

  std::string theta_grid = "-90:1:89", snr_grid = "-15:5:15";
  int trials_per_cell = 10;
  auto* dataset = app.add_subcommand("dataset", "generate an MBDNN training set (CSV)");
  add_common(dataset, common);
  dataset->add_option("--theta-grid", theta_grid, "angles, deg: a:step:b or a,b,...")->capture_default_str();
  dataset->add_option("--snr-grid", snr_grid, "SNRs, dB: a:step:b or a,b,...")->capture_default_str();
  dataset->add_option("--trials", trials_per_cell, "trials per (angle, SNR) cell")->capture_default_str();
  dataset->add_option("--snapshots", scen.snapshots, "snapshots T")->capture_default_str();

  TrainConfig tc;
  std::string stage = "all", data_path, model_in;
  auto* train_cmd = app.add_subcommand("train", "train the MBDNN on a dataset CSV");
  add_common(train_cmd, common);
  train_cmd->add_option("--data", data_path, "dataset CSV")->required();
  train_cmd->add_option("--stage", stage, "mb_fcnn | fusion_net | joint | all")->capture_default_str();
  train_cmd->add_option("--model", model_in, "start from this model instead of a fresh one");
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
  train_cmd->add_option("--batch", tc.batch_size)->capture_default_str();

  std::string model_path;
  auto* predict = app.add_subcommand("predict", "MBDNN estimate for one scenario");
  add_common(predict, common);
  add_scenario(predict, scen);
  predict->add_option("--model", model_path, "model file")->required();
  predict->add_option("--input", inputs, "snapshot files, one per group (skips simulation)");
  predict->add_flag("--json", as_json, "JSON output");

  std::string bench_snr = "-15:5:15", bench_t = "200", bench_k, methods = "crlb_ratio,exact_crlb", plot_prefix;
  int bench_trials = 200;
  unsigned threads = 0;
  bool no_timing = false;
  auto* bench = app.add_subcommand("bench", "Monte-Carlo RMSE sweep to CSV");
  add_common(bench, common);
  bench->add_option("--theta", scen.theta, "emitter angle, degrees")->capture_default_str();
  bench->add_option("--snr-grid", bench_snr)->capture_default_str();
  bench->add_option("--snapshots", bench_t, "snapshot grid")->capture_default_str();
  bench->add_option("--k-grid", bench_k, "uniform K per group; default keeps the config's K");
  bench->add_option("--trials", bench_trials, "Monte-Carlo trials per cell")->capture_default_str();
  bench->add_option("--methods", methods, "comma list of crlb_ratio, exact_crlb, mbdnn")->capture_default_str();
  bench->add_option("--model", model_path, "model file for mbdnn");
  bench->add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();
  bench->add_option("--emit-plot-data", plot_prefix, "write <prefix>_<method>.dat (x rmse crlb) files");
  bench->add_flag("--no-timing", no_timing, "report wall_ms = 0 for byte-reproducible output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() != 0) std::cerr << app.help();
    return kExitConfig;
  }

  try {
    const ArrayConfig cfg = load_config(common.config);

    if (*validate) {
      std::string text = fmt::format("ok: Q={} N={} candidates={} d/lambda={} lambda={} m\n", cfg.num_groups,
                                     cfg.total_antennas(), cfg.total_candidates(), cfg.d_over_lambda, cfg.wavelength);
      for (int q = 0; q < cfg.num_groups; ++q) {
        text += fmt::format("group {}: M={} K={}\n", q, cfg.antennas_per_subarray[q], cfg.subarrays_per_group[q]);
      }
      write_text(common.out, text);
    } else if (*simulate) {
      const SimScenario sc = make_scenario(cfg, scen, common.seed);
      const std::string prefix = common.out.empty() ? "snapshots" : common.out;
      for (int q = 0; q < cfg.num_groups; ++q) {
        const std::string path = fmt::format("{}_g{}.snap", prefix, q);
        write_snapshots(path, simulate_group(sc, q));
        std::cout << path << '\n';
      }
    } else if (*estimate) {
      const SimScenario sc = make_scenario(cfg, scen, common.seed);
      const WeightMethod wm = parse_weight_method(method);
      auto sets = candidates_for(cfg, inputs, sc);
      // From files the nominal SNR cancels in the weights; 0 dB keeps them finite.
      const double snr = inputs.empty() ? sc.snr_db : 0.0;
      const FusedEstimate est = fuse_candidates(cfg, std::move(sets), wm, snr, sc.snapshots);
      std::string text;
      if (as_json) {
        nlohmann::json j;
        j["theta_deg"] = rad_to_deg(est.angle);
        j["method"] = std::string(to_string(wm));
        j["tuple_deg"] = degrees(est.tuple.angles);
        j["weights"] = est.weights.w;
        if (dump_candidates) {
          for (const auto& s : est.candidates) {
            j["candidates"].push_back({{"group", s.group_index}, {"phase", s.phase}, {"angles_deg", degrees(s.angles)}});
          }
        }
        text = j.dump(2) + "\n";
      } else {
        text = fmt::format("theta_deg {:.10g}\n", rad_to_deg(est.angle));
        if (dump_candidates) {
          for (const auto& s : est.candidates) {
            text += fmt::format("group {} phase {:.10g} candidates_deg", s.group_index, s.phase);
            for (double a : s.angles) text += fmt::format(" {:.10g}", rad_to_deg(a));
            text += '\n';
          }
          text += "tuple_deg";
          for (double a : est.tuple.angles) text += fmt::format(" {:.10g}", rad_to_deg(a));
          text += "\nweights";
          for (double w : est.weights.w) text += fmt::format(" {:.10g}", w);
          text += '\n';
        }
      }
      write_text(common.out, text);
    } else if (*dataset) {
      if (common.out.empty()) throw ConfigError("dataset needs --out");
      const auto thetas = parse_grid(theta_grid);
      std::vector<double> snrs;
      for (const auto& s : CLI::detail::split(snr_grid, ',')) {
        const auto part = s.find(':') != std::string::npos ? parse_grid(s) : std::vector<double>{parse_snr(s)};
        snrs.insert(snrs.end(), part.begin(), part.end());
      }
      const Dataset ds = generate_dataset(cfg, thetas, snrs, trials_per_cell, scen.snapshots, common.seed);
      write_dataset_csv(common.out, ds);
      std::cerr << fmt::format("{} samples, {} skipped\n", ds.samples.size(), ds.skipped);
    } else if (*train_cmd) {
      if (common.out.empty()) throw ConfigError("train needs --out");
      const Dataset ds = read_dataset_csv(data_path, cfg.antennas_per_subarray);
      MlpModel model = model_in.empty() ? init_model(MlpSpec{cfg.antennas_per_subarray}, common.seed) : load_model(model_in);
      tc.seed = common.seed;
      std::vector<TrainStage> stages;
      if (stage == "all") {
        stages = {TrainStage::mb_fcnn, TrainStage::fusion_net};
      } else {
        stages = {parse_train_stage(stage)};
      }
      for (TrainStage s : stages) {
        tc.stage = s;
        const auto h = train(model, ds, tc);
        std::cerr << fmt::format("{}: loss {:.6g} -> {:.6g}\n", to_string(s), h.epoch_loss.front(), h.epoch_loss.back());
      }
      save_model(common.out, model);
      std::cout << fmt::format("L_MB_FCNN {:.6g} L_FusionNet {:.6g} L_MBNN {:.6g}\n", model.info.final_losses[0],
                               model.info.final_losses[1], model.info.final_losses[2]);
    } else if (*predict) {
      const MlpModel model = load_model(model_path);
      if (model.spec.group_sizes != cfg.antennas_per_subarray) {
        throw ConfigError("model group sizes do not match the config");
      }
      const SimScenario sc = make_scenario(cfg, scen, common.seed);
      const double theta = predict_doa(model, candidates_for(cfg, inputs, sc));
      write_text(common.out, as_json ? nlohmann::json{{"theta_deg", theta}}.dump() + "\n"
                                     : fmt::format("theta_deg {:.10g}\n", theta));
    } else if (*bench) {
      BenchSpec spec;
      spec.cfg = cfg;
      spec.theta0_deg = scen.theta;
      spec.snr_grid = parse_grid(bench_snr);
      spec.snapshot_grid = parse_int_grid(bench_t);
      if (!bench_k.empty()) spec.k_grid = parse_int_grid(bench_k);
      spec.trials = bench_trials;
      spec.methods.clear();
      for (const auto& m : CLI::detail::split(methods, ',')) spec.methods.push_back(parse_bench_method(m));
      if (!model_path.empty()) spec.model_path = model_path;
      spec.master_seed = common.seed;
      spec.record_timing = !no_timing;
      spec.threads = threads;
      const auto rows = run_sweep(spec);
      if (common.out.empty()) {
        emit_csv(std::cout, rows);
      } else {
        emit_csv(common.out, rows);
      }
      if (!plot_prefix.empty()) {
        for (const auto& p : write_plot_data(plot_prefix, rows)) std::cerr << p << '\n';
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
