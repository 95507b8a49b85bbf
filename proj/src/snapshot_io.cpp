#include <array>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "h2ad/errors.hpp"
#include "h2ad/signal_sim.hpp"

namespace h2ad {
namespace {

constexpr std::array<char, 9> kMagic{'H', '2', 'A', 'D', '-', 'S', 'N', 'A', 'P'};

template <class T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw IoError(fmt::format("{}: truncated snapshot file", path));
  }
  return value;
}

}  // namespace

void write_snapshots(const std::string& path, const GroupSnapshots& gs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
  out.write(kMagic.data(), kMagic.size());
  put<std::uint16_t>(out, kSnapshotFileVersion);
  put<std::uint32_t>(out, std::uint32_t(gs.group_index));
  put<std::uint32_t>(out, std::uint32_t(gs.data.rows()));
  put<std::uint32_t>(out, std::uint32_t(gs.data.cols()));
  for (Eigen::Index k = 0; k < gs.data.rows(); ++k) {
    for (Eigen::Index n = 0; n < gs.data.cols(); ++n) {
      put<double>(out, gs.data(k, n).real());
      put<double>(out, gs.data(k, n).imag());
    }
  }
  if (!out) throw IoError(fmt::format("write to '{}' failed", path));
}

GroupSnapshots read_snapshots(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path));
  std::array<char, 9> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError(fmt::format("{}: not a snapshot file", path));
  }
  const auto version = get<std::uint16_t>(in, path);
  if (version != kSnapshotFileVersion) {
    throw IoError(fmt::format("{}: unsupported snapshot version {}", path, version));
  }
  GroupSnapshots gs;
  gs.group_index = int(get<std::uint32_t>(in, path));
  const auto rows = get<std::uint32_t>(in, path);
  const auto cols = get<std::uint32_t>(in, path);
  gs.data.resize(rows, cols);
  for (std::uint32_t k = 0; k < rows; ++k) {
    for (std::uint32_t n = 0; n < cols; ++n) {
      const double re = get<double>(in, path);
      const double im = get<double>(in, path);
      gs.data(k, n) = {re, im};
    }
  }
  return gs;
}

}  // namespace h2ad
