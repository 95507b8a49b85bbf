#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "h2ad/array_model.hpp"
#include "h2ad/errors.hpp"

namespace h2ad {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

int parse_int(std::string_view key, std::string_view text) {
  text = trim(text);
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("key '{}': '{}' is not an integer", key, text));
  }
  return value;
}

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  std::string owned(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(owned, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != owned.size()) {
    throw ConfigError(fmt::format("key '{}': '{}' is not a number", key, text));
  }
  return value;
}

std::vector<int> parse_int_list(std::string_view key, std::string_view text) {
  std::vector<int> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse_int(key, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

ArrayConfig parse_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> entries;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    std::string key(trim(line.substr(0, eq)));
    if (key != "groups" && key != "M" && key != "K" && key != "d_over_lambda" && key != "lambda_m") {
      throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    }
    if (!entries.emplace(key, std::string(trim(line.substr(eq + 1)))).second) {
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    }
  }
  for (const char* required : {"groups", "M", "K"}) {
    if (!entries.contains(required)) throw ConfigError(fmt::format("missing key '{}'", required));
  }

  ArrayConfig cfg;
  cfg.num_groups = parse_int("groups", entries["groups"]);
  cfg.antennas_per_subarray = parse_int_list("M", entries["M"]);
  cfg.subarrays_per_group = parse_int_list("K", entries["K"]);
  if (auto it = entries.find("d_over_lambda"); it != entries.end()) {
    cfg.d_over_lambda = parse_double("d_over_lambda", it->second);
  }
  if (auto it = entries.find("lambda_m"); it != entries.end()) {
    cfg.wavelength = parse_double("lambda_m", it->second);
  }
  return validate_config(std::move(cfg));
}

ArrayConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const NonCoprimeError&) {
    throw;
  } catch (const TooSmallError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

std::string format_config(const ArrayConfig& cfg) {
  return fmt::format("groups = {}\nM = {}\nK = {}\nd_over_lambda = {}\nlambda_m = {}\n",
                     cfg.num_groups, fmt::join(cfg.antennas_per_subarray, ","),
                     fmt::join(cfg.subarrays_per_group, ","), cfg.d_over_lambda, cfg.wavelength);
}

}  // namespace h2ad
