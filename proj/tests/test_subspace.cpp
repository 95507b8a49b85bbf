#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "h2ad/errors.hpp"
#include "h2ad/signal_sim.hpp"
#include "h2ad/subspace.hpp"

using namespace h2ad;

namespace {

SimScenario scenario(double theta_deg, double snr_db, int snapshots, std::uint64_t seed = 3) {
  SimScenario sc;
  sc.cfg = table1_config();
  sc.theta0 = deg_to_rad(theta_deg);
  sc.snr_db = snr_db;
  sc.snapshots = snapshots;
  sc.seed = seed;
  return sc;
}

std::vector<double> to_deg(const std::vector<double>& rad) {
  std::vector<double> out;
  for (double r : rad) out.push_back(rad_to_deg(r));
  return out;
}

// Frozen with mpmath at 41 deg.
const std::vector<std::vector<double>> kCandidates41 = {
    {-50.5800393314, -29.1303472489, -11.6003455036, 4.85477507799, 21.7368800602, 41.0, 70.3515262428},
    {-78.6096953631, -52.9858087479, -38.0732381054, -25.7757534704, -14.6569960447, -4.08370100171,
     6.35016255846, 17.0030532661, 28.309933167, 41.0, 56.9166325544},
    {-61.9335487752, -46.7655043964, -35.0793399752, -24.8891504691, -15.4868909426, -6.4981850361,
     2.33111530461, 11.2167178449, 20.3874489901, 30.1465109508, 41.0, 54.0866685584, 74.5259385311},
};

}  // namespace

TEST_CASE("noise subspace of the exact covariance") {
  const SimScenario sc = scenario(41.0, 0.0, 1);
  const auto r = exact_covariance(sc, 0);
  const auto ns = noise_subspace(r);
  CHECK(ns.basis.cols() == 15);
  CHECK(ns.eigenvalues.size() == 16);
  for (int i = 1; i < 16; ++i) CHECK(ns.eigenvalues[i - 1] >= ns.eigenvalues[i]);
  CHECK(ns.noise_floor == doctest::Approx(1.0));
  const auto orth = ns.basis.adjoint() * ns.basis;
  CHECK((orth - Eigen::MatrixXcd::Identity(15, 15)).cwiseAbs().maxCoeff() < 1e-12);
  const auto a = virtual_steering(sc.cfg.group(0), sc.theta0);
  CHECK((ns.basis.adjoint() * a).norm() < 1e-10);
}

TEST_CASE("degenerate spectra are rejected") {
  CHECK_THROWS_AS(noise_subspace(Eigen::MatrixXcd::Identity(8, 8)), DegenerateSpectrum);
  CHECK_THROWS_AS(noise_subspace(Eigen::MatrixXcd::Zero(8, 8)), DegenerateSpectrum);
  CHECK_THROWS_AS(noise_subspace(Eigen::MatrixXcd::Identity(1, 1)), ShapeMismatch);
}

TEST_CASE("root-MUSIC polynomial") {
  SUBCASE("diagonal sums") {
    Eigen::MatrixXcd f(3, 3);
    f << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    const auto c = root_music_polynomial(f);
    REQUIRE(c.size() == 5);
    CHECK(c[0] == std::complex<double>(7, 0));
    CHECK(c[1] == std::complex<double>(12, 0));
    CHECK(c[2] == std::complex<double>(15, 0));
    CHECK(c[3] == std::complex<double>(8, 0));
    CHECK(c[4] == std::complex<double>(3, 0));
  }
  SUBCASE("roots of a known quadratic") {
    Eigen::VectorXcd c(3);
    c << 2.0, -3.0, 1.0;  // (z-1)(z-2)
    auto roots = polynomial_roots(c);
    REQUIRE(roots.size() == 2);
    std::sort(roots.begin(), roots.end(), [](auto a, auto b) { return a.real() < b.real(); });
    CHECK(std::abs(roots[0] - 1.0) < 1e-12);
    CHECK(std::abs(roots[1] - 2.0) < 1e-12);
  }
  SUBCASE("trailing zero coefficients are trimmed") {
    Eigen::VectorXcd c(4);
    c << -1.0, 1.0, 0.0, 0.0;
    CHECK(polynomial_roots(c).size() == 1);
    CHECK_THROWS_AS(polynomial_roots(Eigen::VectorXcd::Zero(3)), NoRootFound);
  }
}

TEST_CASE("root-MUSIC phase is exact for the true covariance") {
  const SimScenario sc = scenario(41.0, 0.0, 1);
  const auto ns = noise_subspace(exact_covariance(sc, 0));
  // mpmath: wrap(7 pi sin 41 deg). The true root is double, so it is only
  // resolved to about sqrt(machine epsilon).
  CHECK(std::abs(root_music_phase(ns, sc.cfg.group(0)) - 1.8611209662256431498) < 1e-7);

  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-85.0, 85.0);
  for (int i = 0; i < 100; ++i) {
    const SimScenario s = scenario(u(gen), 10.0, 1);
    for (int q = 0; q < 3; ++q) {
      const auto geom = s.cfg.group(q);
      const double expected = wrap_phase(geom.phase_scale() * std::sin(s.theta0));
      const double got = root_music_phase(noise_subspace(exact_covariance(s, q)), geom);
      CHECK(std::abs(wrap_phase(got - expected)) < 1e-7);
    }
  }
}

TEST_CASE("candidate enumeration") {
  const ArrayConfig cfg = table1_config();
  SUBCASE("frozen sets at 41 deg") {
    for (int q = 0; q < 3; ++q) {
      const auto geom = cfg.group(q);
      const auto set = enumerate_candidates(wrap_phase(geom.phase_scale() * std::sin(deg_to_rad(41.0))), geom);
      const auto got = to_deg(set.angles);
      REQUIRE(got.size() == kCandidates41[q].size());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(kCandidates41[q][i]).epsilon(1e-9));
    }
  }
  SUBCASE("exactly M_q ascending angles for any phase") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int i = 0; i < 2000; ++i) {
      const double phi = u(gen);
      for (int q = 0; q < 3; ++q) {
        const auto set = enumerate_candidates(phi, cfg.group(q));
        CHECK(static_cast<int>(set.angles.size()) == cfg.antennas_per_subarray[q]);
        CHECK(std::is_sorted(set.angles.begin(), set.angles.end()));
      }
    }
  }
  SUBCASE("boundary phase pi drops one endpoint") {
    for (int q = 0; q < 3; ++q) {
      const auto set = enumerate_candidates(kPi, cfg.group(q));
      CHECK(static_cast<int>(set.angles.size()) == cfg.antennas_per_subarray[q]);
      CHECK(set.angles.front() == doctest::Approx(-kPi / 2));
      CHECK(set.angles.back() < kPi / 2);
    }
  }
  SUBCASE("every candidate reproduces the phase") {
    const auto geom = cfg.group(2);
    const double phi = 0.77;
    for (double th : enumerate_candidates(phi, geom).angles) {
      CHECK(std::abs(wrap_phase(geom.phase_scale() * std::sin(th) - phi)) < 1e-10);
    }
  }
  SUBCASE("wider spacing yields more candidates") {
    ArrayConfig wide = cfg;
    wide.d_over_lambda = 1.0;
    const auto set = enumerate_candidates(0.3, wide.group(0));
    CHECK(set.angles.size() == 14);
  }
}

TEST_CASE("noiseless truth is among the candidates") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(-80.0, 80.0);
  for (int i = 0; i < 50; ++i) {
    const double theta_deg = u(gen);
    SimScenario sc = scenario(theta_deg, std::numeric_limits<double>::infinity(), 64, i);
    for (int q = 0; q < 3; ++q) {
      const auto r = sample_covariance(simulate_group(sc, q)) + 1e-9 * Eigen::MatrixXcd::Identity(16, 16);
      const auto set = group_candidates(r, sc.cfg.group(q));
      double best = 1e9;
      for (double a : set.angles) best = std::min(best, std::abs(a - sc.theta0));
      CHECK(rad_to_deg(best) < 1e-5);
    }
  }
}

TEST_CASE("pseudospectrum peaks at the candidates") {
  const SimScenario sc = scenario(41.0, 10.0, 200);
  const auto geom = sc.cfg.group(1);
  const auto ns = noise_subspace(sample_covariance(simulate_group(sc, 1)));
  const auto set = enumerate_candidates(root_music_phase(ns, geom), geom);
  for (double c : set.angles) {
    if (std::abs(c) > deg_to_rad(80.0)) continue;
    const double d = 0.02;
    const std::vector<double> grid{c - d, c, c + d};
    const auto p = music_pseudospectrum(ns, geom, grid);
    // Projection onto the noise subspace is minimal at the candidate; the
    // gain term varies slowly so the local maximum survives.
    const double proj_c = (ns.basis.adjoint() * virtual_steering(geom, c)).squaredNorm();
    const double proj_l = (ns.basis.adjoint() * virtual_steering(geom, c - d)).squaredNorm();
    const double proj_r = (ns.basis.adjoint() * virtual_steering(geom, c + d)).squaredNorm();
    CHECK(proj_c < proj_l);
    CHECK(proj_c < proj_r);
    CHECK(p[1] > 0.0);
  }
}
