#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "h2ad/errors.hpp"
#include "h2ad/fusion.hpp"
#include "h2ad/mbdnn.hpp"
#include "h2ad/parallel.hpp"
#include "h2ad/rng.hpp"

namespace h2ad {

std::vector<double> candidate_features(std::span<const CandidateSet> sets) {
  std::vector<double> features;
  for (const auto& s : sets) {
    std::vector<double> block(s.angles.begin(), s.angles.end());
    std::sort(block.begin(), block.end());
    for (double a : block) features.push_back(rad_to_deg(a));
  }
  return features;
}

Batch Dataset::to_batch() const {
  std::vector<std::size_t> rows(samples.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return to_batch(rows);
}

Batch Dataset::to_batch(std::span<const std::size_t> rows) const {
  const int feat = std::accumulate(group_sizes.begin(), group_sizes.end(), 0);
  const int q_count = static_cast<int>(group_sizes.size());
  const auto n = Eigen::Index(rows.size());
  Batch b{Eigen::MatrixXd(feat, n), Eigen::MatrixXd(q_count, n), Eigen::RowVectorXd(n)};
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& s = samples.at(rows[c]);
    if (static_cast<int>(s.features.size()) != feat || static_cast<int>(s.label_tuple.size()) != q_count) {
      throw ShapeMismatch(fmt::format("sample {} has the wrong feature or label length", rows[c]));
    }
    b.features.col(c) = Eigen::Map<const Eigen::VectorXd>(s.features.data(), feat);
    b.label_tuple.col(c) = Eigen::Map<const Eigen::VectorXd>(s.label_tuple.data(), q_count);
    b.label_theta[c] = s.label_theta;
  }
  return b;
}

Dataset generate_dataset(const ArrayConfig& cfg, std::span<const double> thetas_deg,
                         std::span<const double> snrs_db, int trials_per_cell, int snapshots,
                         std::uint64_t seed) {
  validate_config(cfg);
  if (thetas_deg.empty() || snrs_db.empty() || trials_per_cell < 1) {
    throw ConfigError("dataset grids must be non-empty and trials_per_cell >= 1");
  }
  const std::size_t n_theta = thetas_deg.size();
  const std::size_t n_snr = snrs_db.size();
  const std::size_t total = n_theta * n_snr * std::size_t(trials_per_cell);

  std::vector<std::optional<DatasetSample>> slots(total);
  parallel_for(total, [&](std::size_t i) {
    const std::size_t trial = i % std::size_t(trials_per_cell);
    const std::size_t cell = i / std::size_t(trials_per_cell);
    const std::size_t it = cell / n_snr;
    const std::size_t is = cell % n_snr;

    SimScenario sc;
    sc.cfg = cfg;
    sc.theta0 = deg_to_rad(thetas_deg[it]);
    sc.snr_db = snrs_db[is];
    sc.snapshots = snapshots;
    sc.seed = derive_seed({seed, it, is, trial});

    std::vector<CandidateSet> sets;
    try {
      sets = scenario_candidates(sc);
    } catch (const GroupFailure&) {
      return;
    }
    DatasetSample s;
    s.features = candidate_features(sets);
    s.label_theta = thetas_deg[it];
    s.snr_db = snrs_db[is];
    std::size_t offset = 0;
    for (const auto& set : sets) {
      auto block = std::span(s.features).subspan(offset, set.angles.size());
      const auto nearest = std::min_element(block.begin(), block.end(), [&](double a, double b) {
        return std::abs(a - s.label_theta) < std::abs(b - s.label_theta);
      });
      s.label_tuple.push_back(*nearest);
      offset += set.angles.size();
    }
    slots[i] = std::move(s);
  });

  Dataset ds;
  ds.group_sizes = cfg.antennas_per_subarray;
  ds.samples.reserve(total);
  for (auto& slot : slots) {
    if (slot) {
      ds.samples.push_back(std::move(*slot));
    } else {
      ++ds.skipped;
    }
  }
  return ds;
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
  const int q_count = static_cast<int>(ds.group_sizes.size());
  const int feat = std::accumulate(ds.group_sizes.begin(), ds.group_sizes.end(), 0);
  out << "snr_db,theta_true";
  for (int q = 1; q <= q_count; ++q) out << ",label_" << q;
  for (int f = 1; f <= feat; ++f) out << ",feat_" << f;
  out << '\n';
  for (const auto& s : ds.samples) {
    out << fmt::format("{},{}", s.snr_db, s.label_theta);
    for (double v : s.label_tuple) out << ',' << fmt::format("{}", v);
    for (double v : s.features) out << ',' << fmt::format("{}", v);
    out << '\n';
  }
  if (!out) throw IoError(fmt::format("write to '{}' failed", path));
}

Dataset read_dataset_csv(const std::string& path, std::span<const int> group_sizes) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path));
  Dataset ds;
  ds.group_sizes.assign(group_sizes.begin(), group_sizes.end());
  const std::size_t q_count = group_sizes.size();
  const auto feat = std::size_t(std::accumulate(group_sizes.begin(), group_sizes.end(), 0));
  const std::size_t columns = 2 + q_count + feat;

  std::string line;
  if (!std::getline(in, line)) throw IoError(fmt::format("{}: empty dataset file", path));
  if (std::size_t(std::count(line.begin(), line.end(), ',')) + 1 != columns) {
    throw ShapeMismatch(fmt::format("{}: header has the wrong column count for this config", path));
  }
  std::size_t line_no = 1;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    values.clear();
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const auto field = rest.substr(0, comma);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw IoError(fmt::format("{}:{}: bad number '{}'", path, line_no, field));
      }
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (values.size() != columns) {
      throw ShapeMismatch(fmt::format("{}:{}: expected {} columns, got {}", path, line_no, columns,
                                      values.size()));
    }
    DatasetSample s;
    s.snr_db = values[0];
    s.label_theta = values[1];
    s.label_tuple.assign(values.begin() + 2, values.begin() + 2 + long(q_count));
    s.features.assign(values.begin() + 2 + long(q_count), values.end());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace h2ad
