#include <doctest.h>

#include <cmath>
#include <random>

#include "rdbev/core.hpp"

using namespace rdbev;

TEST_CASE("radar defaults") {
  const RadarConfig r = RadarConfig::standard();
  r.validate();
  CHECK(r.num_tx == 6);
  CHECK(r.num_rx == 8);
  CHECK(r.num_chirps() == 2);
  CHECK(r.chirp_tx_sets[0] == std::vector<int>{0});
  CHECK(r.chirp_tx_sets[1].size() == 6);
  CHECK(r.doppler_resolution() == doctest::Approx(50.0 / 128.0));
  const double half = r.wavelength() / 2;
  for (int j = 1; j < r.num_rx; ++j)
    CHECK(r.rx_positions[j] - r.rx_positions[j - 1] == doctest::Approx(half));
  for (int t = 1; t < r.num_tx; ++t)
    CHECK(r.tx_positions[t] - r.tx_positions[t - 1] == doctest::Approx(8 * half));
}

TEST_CASE("radar config serialization round-trips") {
  RadarConfig r = RadarConfig::standard();
  r.snr_db = 13.7;
  r.hfov_deg = 1.0 / 3.0;
  const RadarConfig back = RadarConfig::parse(r.serialize());
  CHECK(back == r);
  CHECK(back.hfov_deg == r.hfov_deg);
  CHECK(back.digest() == r.digest());
  r.snr_db = 14.0;
  CHECK(back.digest() != r.digest());
  CHECK_THROWS_AS(RadarConfig::parse("carrier_freq=abc"), ConfigError);
}

TEST_CASE("radar config validation") {
  RadarConfig r = RadarConfig::standard();
  r.num_rx = 7;
  CHECK_THROWS_AS(r.validate(), ConfigError);
  r = RadarConfig::standard();
  r.chirp_tx_sets[1].push_back(6);
  CHECK_THROWS_AS(r.validate(), ConfigError);
}

TEST_CASE("grid shapes") {
  CHECK(BevGridSpec::with_resolution(0.5).rows() == 120);
  CHECK(BevGridSpec::with_resolution(0.5).cols() == 152);
  CHECK(BevGridSpec::with_resolution(0.4).rows() == 150);
  CHECK(BevGridSpec::with_resolution(0.4).cols() == 190);
  CHECK(BevGridSpec::with_resolution(0.35).rows() == 172);
  CHECK(BevGridSpec::with_resolution(0.35).cols() == 218);
  CHECK_THROWS(BevGridSpec::with_resolution(0.0));
}

TEST_CASE("world_to_cell examples") {
  const auto g = BevGridSpec::with_resolution(0.5);
  CHECK(world_to_cell(0.1, 0.1, g) == CellIndex{0, 76});
  CHECK(!world_to_cell(60.0, 0.0, g));
  CHECK(world_to_cell(29.9, -37.9, g) == CellIndex{59, 0});
  CHECK(world_to_cell(0.0, -38.0, g) == CellIndex{0, 0});
  CHECK(!world_to_cell(-0.01, 0.0, g));
  CHECK(!world_to_cell(10.0, 38.0, g));
}

TEST_CASE("cell centers map back to their cell") {
  for (double res : {0.5, 0.4, 0.35}) {
    const auto g = BevGridSpec::with_resolution(res);
    for (int i = 0; i < g.rows(); i += 7)
      for (int j = 0; j < g.cols(); j += 5) {
        auto [x, y] = g.cell_center(i, j);
        CHECK(world_to_cell(x, y, g) == CellIndex{i, j});
      }
  }
}

TEST_CASE("random points land in the cell that contains them") {
  const auto g = BevGridSpec::with_resolution(0.5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(0.0, 60.0), uy(-38.0, 38.0);
  for (int k = 0; k < 2000; ++k) {
    const double x = ux(rng), y = uy(rng);
    const auto c = world_to_cell(x, y, g);
    REQUIRE(c);
    auto [cx, cy] = g.cell_center(c->row, c->col);
    CHECK(std::abs(x - cx) <= 0.25 + 1e-12);
    CHECK(std::abs(y - cy) <= 0.25 + 1e-12);
  }
}

TEST_CASE("hfov mask") {
  const auto g = BevGridSpec::with_resolution(0.5);
  const BevMask m = hfov_mask(g, {0, 0}, 64.0, 65.0);
  const auto c0 = *world_to_cell(10.0, 0.0, g);
  CHECK(m.get(c0.row, c0.col));
  const double a = deg2rad(40.0);
  const auto c1 = *world_to_cell(20 * std::cos(a), 20 * std::sin(a), g);
  CHECK(!m.get(c1.row, c1.col));
  // Exhaustive count using a tangent criterion instead of atan2.
  std::size_t inside = 0;
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) {
      auto [x, y] = g.cell_center(i, j);
      if (std::abs(y) <= x * std::tan(deg2rad(32.0)) && x * x + y * y <= 65.0 * 65.0) ++inside;
    }
  CHECK(m.count() == inside);
  CHECK(m.count() == 8768);  // 0.4807 of 18,240 cells
}

TEST_CASE("mask algebra") {
  const auto g = BevGridSpec::with_resolution(0.5);
  BevMask a(g), b(g);
  a.set(1, 1);
  a.set(2, 2);
  b.set(2, 2);
  b.set(3, 3);
  CHECK((a & b).count() == 1);
  CHECK((a | b).count() == 3);
  CHECK((~a).count() == g.num_cells() - 2);
  BevMask other(BevGridSpec::with_resolution(0.4));
  CHECK_THROWS_AS(a & other, GridMismatch);
}

TEST_CASE("scene text round-trips") {
  const Scene s = parse_scene("# comment\n10 0 1.5 0.5 2 0 0\n\n20 -3 2 1 1 -1 0.5\n");
  REQUIRE(s.scatterers.size() == 2);
  CHECK(s.scatterers[1].y == -3.0);
  CHECK(s.scatterers[1].vy == 0.5);
  const Scene back = parse_scene(format_scene(s));
  CHECK(back.scatterers.size() == 2);
  CHECK(back.scatterers[0].reflectivity == 2.0);
  CHECK_THROWS(parse_scene("10 0 1\n"));
}

TEST_CASE("frame record validation") {
  const auto g = BevGridSpec::with_resolution(0.5);
  FrameRecord r;
  r.rd = RdFrame(RadarConfig::standard());
  r.hfov = hfov_mask(g, {0, 0}, 64.0);
  r.label = {BevMask(g), r.hfov};
  r.sup = r.hfov;
  r.validate();
  CHECK(r.unknown().count() == 0);
  r.label.occupancy.set(0, 0);  // outside the observable set
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}

TEST_CASE("fnv1a digest") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
