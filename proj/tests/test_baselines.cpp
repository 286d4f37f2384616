#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rdbev/baselines.hpp"
#include "rdbev/radar_sim.hpp"

using namespace rdbev;

namespace {

Scatterer at(double range, double az_deg) {
  Scatterer s;
  s.x = range * std::cos(deg2rad(az_deg));
  s.y = range * std::sin(deg2rad(az_deg));
  return s;
}

RdFrame quiet_frame(const std::vector<Scatterer>& targets) {
  Scene sc;
  sc.scatterers = targets;
  PropagationParams p;
  p.add_noise = false;
  return simulate_rd(sc, RadarConfig::standard(), p);
}

// Nearest FFT bin to u = sin(theta) on the grid u_m = -1 + 2m/64.
int expected_bin(double az_deg) {
  return static_cast<int>(std::lround((std::sin(deg2rad(az_deg)) + 1.0) * 32.0));
}

}  // namespace

TEST_CASE("random prior") {
  const auto g = BevGridSpec::with_resolution(0.5);
  const PredictionMap p = random_prior(0.05, g);
  CHECK(std::all_of(p.values().begin(), p.values().end(), [](float v) { return v == 0.05F; }));
  CHECK_THROWS(random_prior(1.5, g));
}

TEST_CASE("range energy of one boresight target is a ring") {
  const auto g = BevGridSpec::with_resolution(0.5);
  const RdFrame f = quiet_frame({at(10.0, 0.0)});
  const auto e = range_energy_profile(f);
  CHECK(e[30] == 1.0);
  const PredictionMap m = range_energy_projection(f, g, {0, 0});
  const BevMask fov = hfov_mask(g, {0, 0}, 64.0, 65.0);
  std::size_t lit = 0;
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) {
      const float v = m.get(i, j);
      if (!fov.get(i, j)) {
        CHECK(v == 0.0F);
        continue;
      }
      auto [x, y] = g.cell_center(i, j);
      const double r = std::hypot(x, y);
      if (v > 0.0F) {
        ++lit;
        const long bin = std::lround(r / 0.33);
        CHECK((bin >= 29 && bin <= 31));  // PSF main lobe around bin 30
      }
      if (std::lround(r / 0.33) == 30) CHECK(v == 1.0F);
    }
  CHECK(lit > 20);
}

TEST_CASE("zero tensor gives zero range-energy map") {
  const auto g = BevGridSpec::with_resolution(0.5);
  const PredictionMap m = range_energy_projection(RdFrame(RadarConfig::standard()), g, {0, 0});
  CHECK(std::all_of(m.values().begin(), m.values().end(), [](float v) { return v == 0.0F; }));
}

TEST_CASE("beamform peak at 10 degrees") {
  const auto ra = beamform_oracle(quiet_frame({at(20.0, 10.0)}), Chirp::A);
  CHECK(expected_bin(10.0) == 38);
  const auto pk = ra.peak();
  CHECK(std::abs(pk.angle_bin - 38) <= 1);
  CHECK(pk.range_bin == 61);
}

TEST_CASE("beamform peak at boresight") {
  const auto pk = beamform_oracle(quiet_frame({at(15.0, 0.0)}), Chirp::A).peak();
  CHECK(pk.angle_bin == 32);
  CHECK(pk.range_bin == 45);
}

TEST_CASE("two targets at +-20 degrees resolve") {
  const auto ra = beamform_oracle(quiet_frame({at(25.0, -20.0), at(25.0, 20.0)}), Chirp::A);
  const int r = static_cast<int>(std::lround(25.0 / 0.33));
  const int lo = expected_bin(-20.0), hi = expected_bin(20.0);
  // Both lobes stand well above the midpoint between them.
  const double mid = ra.at(r, 32);
  CHECK(ra.at(r, lo) > 2.0 * mid);
  CHECK(ra.at(r, hi) > 2.0 * mid);
  CHECK(ra.at(r, lo) == doctest::Approx(ra.at(r, hi)).epsilon(1e-3));
  // Local maxima near each expected bin.
  auto local_max = [&](int m) { return ra.at(r, m) >= ra.at(r, m - 1) && ra.at(r, m) >= ra.at(r, m + 1); };
  CHECK((local_max(lo) || local_max(lo - 1) || local_max(lo + 1)));
  CHECK((local_max(hi) || local_max(hi - 1) || local_max(hi + 1)));
}

TEST_CASE("angle sweep") {
  for (double deg = -30.0; deg <= 30.0; deg += 2.5) {
    const auto pk = beamform_oracle(quiet_frame({at(30.0, deg)}), Chirp::A).peak();
    CHECK_MESSAGE(std::abs(pk.angle_bin - expected_bin(deg)) <= 1, "theta " << deg);
  }
}

TEST_CASE("chirp B localizes too") {
  const auto pk = beamform_oracle(quiet_frame({at(30.0, -14.0)}), Chirp::B).peak();
  CHECK(std::abs(pk.angle_bin - expected_bin(-14.0)) <= 1);
}

TEST_CASE("relabeling RX channels together with positions changes nothing") {
  RdFrame f = quiet_frame({at(18.0, 12.0), at(40.0, -6.0)});
  RadarConfig perm = f.config();
  const std::vector<int> order{3, 0, 7, 5, 1, 6, 2, 4};
  for (int j = 0; j < 8; ++j) perm.rx_positions[j] = f.config().rx_positions[order[j]];
  RdFrame g(perm);
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < 8; ++j)
      for (int r = 0; r < 200; ++r)
        for (int d = 0; d < 128; ++d) g.at(c, j, r, d) = f.at(c, order[j], r, d);
  const auto a = beamform_oracle(f, Chirp::A);
  const auto b = beamform_oracle(g, Chirp::A);
  double err = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    err = std::max(err, std::abs(a.values()[i] - b.values()[i]));
  CHECK(err < 1e-12);
}

TEST_CASE("empty chirp is rejected") {
  const RdFrame f = select_chirps(quiet_frame({at(20.0, 0.0)}), ChirpSelection::BOnly);
  CHECK_THROWS_WITH_AS(beamform_oracle(f, Chirp::A), "empty chirp", EmptyChirp);
  CHECK_NOTHROW(beamform_oracle(f, Chirp::B));
}

TEST_CASE("RA to BEV projection") {
  const auto g = BevGridSpec::with_resolution(0.5);
  const RdFrame f = quiet_frame({at(20.0, 10.0)});
  const PredictionMap m = project_ra_to_bev(beamform_oracle(f, Chirp::A), f.config(), g, {0, 0});
  const auto mx = std::max_element(m.values().begin(), m.values().end());
  CHECK(*mx == 1.0F);
  const std::size_t flat = static_cast<std::size_t>(mx - m.values().begin());
  auto [x, y] = g.cell_center(static_cast<int>(flat / g.cols()), static_cast<int>(flat % g.cols()));
  CHECK(std::hypot(x, y) == doctest::Approx(20.0).epsilon(0.03));
  CHECK(rad2deg(std::atan2(y, x)) == doctest::Approx(10.0).epsilon(0.2));
  m.validate();
}
