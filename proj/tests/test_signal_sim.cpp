#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "h2ad/errors.hpp"
#include "h2ad/signal_sim.hpp"

using namespace h2ad;

namespace {

SimScenario table1(double snr_db, int snapshots, std::uint64_t seed = 7) {
  SimScenario sc;
  sc.cfg = table1_config();
  sc.theta0 = deg_to_rad(41.0);
  sc.snr_db = snr_db;
  sc.snapshots = snapshots;
  sc.seed = seed;
  return sc;
}

Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& r) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(r).eigenvalues();
}

}  // namespace

TEST_CASE("noise variance follows the per-element SNR") {
  CHECK(table1(0.0, 1).noise_variance() == 1.0);
  CHECK(table1(10.0, 1).noise_variance() == doctest::Approx(0.1));
  CHECK(table1(std::numeric_limits<double>::infinity(), 1).noise_variance() == 0.0);
}

TEST_CASE("noiseless single snapshot is a scaled virtual steering vector") {
  const SimScenario sc = table1(std::numeric_limits<double>::infinity(), 1);
  const auto gs = simulate_group(sc, 0);
  REQUIRE(gs.data.rows() == 16);
  REQUIRE(gs.data.cols() == 1);
  const auto geom = sc.cfg.group(0);
  const auto a = virtual_steering(geom, sc.theta0);
  const std::complex<double> scale = gs.data(0, 0);  // a[0] = 1
  CHECK(std::abs(scale) > 0.0);
  CHECK((gs.data.col(0) - scale * a).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("snapshots are reproducible and groups independent") {
  const SimScenario sc = table1(5.0, 50);
  CHECK(simulate_group(sc, 1).data == simulate_group(sc, 1).data);
  SimScenario other = sc;
  other.seed = 8;
  CHECK(simulate_group(other, 1).data != simulate_group(sc, 1).data);
  CHECK(simulate_group(sc, 0).data.rows() == 16);
}

TEST_CASE("empirical signal power approaches |e_q|^2 / M_q") {
  SimScenario sc = table1(std::numeric_limits<double>::infinity(), 100000);
  const auto gs = simulate_group(sc, 0);
  const double expected = std::norm(gain_coefficient(sc.cfg.group(0), sc.theta0)) / 7.0;
  const double measured = gs.data.cwiseAbs2().mean();
  // Sample mean of |x|^2 over 1e5 draws: relative std 1/sqrt(1e5) ~ 0.3%.
  CHECK(measured == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("sample covariance") {
  SUBCASE("all-ones snapshot gives all-ones matrix") {
    GroupSnapshots gs{0, Eigen::MatrixXcd::Ones(4, 1)};
    const auto r = sample_covariance(gs);
    CHECK((r - Eigen::MatrixXcd::Ones(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("Hermitian and PSD") {
    const auto r = sample_covariance(simulate_group(table1(0.0, 30), 2));
    CHECK((r - r.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(hermitian_eigenvalues(r).minCoeff() > -1e-12);
  }
  SUBCASE("15 dB: one dominant eigenvalue, rest near sigma_v^2") {
    const SimScenario sc = table1(15.0, 200);
    const auto ev = hermitian_eigenvalues(sample_covariance(simulate_group(sc, 0)));
    const auto exact = hermitian_eigenvalues(exact_covariance(sc, 0));
    const double sigma2 = sc.noise_variance();
    CHECK(exact[15] == doctest::Approx(16.0 * std::norm(gain_coefficient(sc.cfg.group(0), sc.theta0)) / 7.0 + sigma2));
    CHECK(ev[15] > 10.0 * ev[14]);
    for (int i = 0; i < 15; ++i) {
      CHECK(ev[i] > 0.3 * sigma2);
      CHECK(ev[i] < 2.5 * sigma2);
    }
  }
  SUBCASE("Frobenius error shrinks roughly like 1/sqrt(T)") {
    const SimScenario small = table1(0.0, 100, 21);
    const SimScenario large = table1(0.0, 10000, 21);
    const double e_small = (sample_covariance(simulate_group(small, 1)) - exact_covariance(small, 1)).norm();
    const double e_large = (sample_covariance(simulate_group(large, 1)) - exact_covariance(large, 1)).norm();
    // Ideal ratio 10; allow Monte-Carlo slack.
    CHECK(e_small / e_large > 4.0);
    CHECK(e_small / e_large < 25.0);
  }
  SUBCASE("noise-only eigenvalues stay inside the bulk edge") {
    SimScenario sc = table1(0.0, 200, 5);
    sc.signal_amplitude = 0.0;
    for (int q = 0; q < 3; ++q) {
      const auto ev = hermitian_eigenvalues(sample_covariance(simulate_group(sc, q)));
      const double edge = std::pow(1.0 + std::sqrt(16.0 / 200.0), 2);
      CHECK(ev.maxCoeff() < 1.5 * edge);
    }
  }
}

TEST_CASE("exact covariance") {
  SUBCASE("M = 11 group at 0 dB: trace") {
    // mpmath: 16 (|e|^2 / 11 + 1)
    CHECK(exact_covariance(table1(0.0, 1), 1).trace().real() ==
          doctest::Approx(17.757459047035719236).epsilon(1e-13));
  }
  SUBCASE("broadside rank-one part is M times all-ones") {
    SimScenario sc = table1(0.0, 1);
    sc.theta0 = 0.0;
    Eigen::MatrixXcd expected = 7.0 * Eigen::MatrixXcd::Ones(16, 16);
    expected.diagonal().array() += 1.0;
    CHECK((exact_covariance(sc, 0) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("very low SNR: off-diagonals vanish relative to the diagonal") {
    const auto r = exact_covariance(table1(-80.0, 1), 2);
    Eigen::MatrixXcd off = r;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() / r.diagonal().real().minCoeff() < 1e-6);
  }
}

TEST_CASE("scenario validation") {
  SimScenario sc = table1(0.0, 0);
  CHECK_THROWS_AS(simulate_group(sc, 0), ConfigError);
  sc = table1(0.0, 10);
  sc.theta0 = 2.0;
  CHECK_THROWS_AS(simulate_group(sc, 0), ConfigError);
}

TEST_CASE("snapshot file round trip and header") {
  const auto gs = simulate_group(table1(3.0, 17), 2);
  const std::string path = std::string(H2AD_TMP_DIR) + "/snap_q2.bin";
  write_snapshots(path, gs);
  const auto back = read_snapshots(path);
  CHECK(back.group_index == 2);
  CHECK(back.data == gs.data);

  std::ifstream in(path, std::ios::binary);
  char magic[9];
  in.read(magic, 9);
  CHECK(std::string(magic, 9) == "H2AD-SNAP");
  std::uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 2);
  CHECK(version == 1);
  in.seekg(0, std::ios::end);
  CHECK(std::size_t(in.tellg()) == 9 + 2 + 3 * 4 + 16 * 17 * 16);
}
