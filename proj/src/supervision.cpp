#include "rdbev/supervision.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace rdbev {

namespace {

// Marks every cell the segment from the origin to distance `limit` along the
// unit direction (dx, dy) passes through (Amanatides-Woo), endpoint included.
void traverse(double dx, double dy, double limit, const BevGridSpec& g, BevMask& obs) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double res = g.resolution;
  auto index = [&](double v, double lo) { return static_cast<long>(std::floor((v - lo) / res)); };
  long i = index(0.0, g.x_min);
  long j = index(0.0, g.y_min);
  const long end_i = index(limit * dx, g.x_min);
  const long end_j = index(limit * dy, g.y_min);
  const int step_i = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int step_j = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  double next_x = step_i == 0 ? kInf : (g.x_min + (i + (step_i > 0)) * res) / dx;
  double next_y = step_j == 0 ? kInf : (g.y_min + (j + (step_j > 0)) * res) / dy;
  const double delta_x = step_i == 0 ? kInf : res / std::abs(dx);
  const double delta_y = step_j == 0 ? kInf : res / std::abs(dy);
  auto mark = [&] {
    if (i >= 0 && i < g.rows() && j >= 0 && j < g.cols())
      obs.set(static_cast<int>(i), static_cast<int>(j));
  };
  for (;;) {
    mark();
    if (i == end_i && j == end_j) break;
    if (next_x < next_y) {
      if (next_x > limit) break;
      i += step_i;
      next_x += delta_x;
    } else {
      if (next_y > limit) break;
      j += step_j;
      next_y += delta_y;
    }
  }
  // Rounding can stop the walk one boundary short; the endpoint cell is always observed.
  if (auto c = world_to_cell(limit * dx, limit * dy, g)) obs.set(c->row, c->col);
}

}  // namespace

PointCloud remove_ground(const PointCloud& pc, double z_min) {
  PointCloud out;
  for (const auto& p : pc.points)
    // Compared at point precision so a stored z equal to z_min is ground.
    if (p.z > static_cast<float>(z_min)) out.points.push_back(p);
  return out;
}

BevMask occupancy_from_points(const PointCloud& nonground, const BevGridSpec& grid) {
  BevMask occ(grid);
  for (const auto& p : nonground.points)
    if (auto cell = world_to_cell(p.x, p.y, grid)) occ.set(cell->row, cell->col);
  return occ;
}

long azimuth_bin(double azimuth_deg, double res_deg) {
  const long n = std::lround(360.0 / res_deg);
  long k = static_cast<long>(std::floor(azimuth_deg / res_deg + 0.5));
  const long half = n / 2;
  k = ((k + half) % n + n) % n - half;
  return k;
}

BevMask observability_mask(const PointCloud& all, const PointCloud& nonground,
                           const BevGridSpec& grid, double azimuth_res_deg) {
  if (!(azimuth_res_deg > 0.0)) throw ConfigError("azimuth resolution must be > 0");
  const long n = std::lround(360.0 / azimuth_res_deg);
  const long half = n / 2;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  struct BinEnd {
    double nearest_obstacle = kInf;
    float ox = 0, oy = 0;
    double farthest = -1.0;
    float fx = 0, fy = 0;
  };
  std::vector<BinEnd> bins(static_cast<std::size_t>(n));
  auto bin_of = [&](const LidarPoint& p) -> BinEnd& {
    const long k = azimuth_bin(rad2deg(std::atan2(p.y, p.x)), azimuth_res_deg);
    return bins[static_cast<std::size_t>(k + half)];
  };
  for (const auto& p : nonground.points) {
    const double r = std::hypot(p.x, p.y);
    BinEnd& b = bin_of(p);
    if (r < b.nearest_obstacle) {
      b.nearest_obstacle = r;
      b.ox = p.x;
      b.oy = p.y;
    }
  }
  for (const auto& p : all.points) {
    const double r = std::hypot(p.x, p.y);
    BinEnd& b = bin_of(p);
    if (r > b.farthest) {
      b.farthest = r;
      b.fx = p.x;
      b.fy = p.y;
    }
  }

  // Beyond this distance from the origin the ray cannot touch the grid.
  double reach = 0.0;
  for (double x : {grid.x_min, grid.covered_x_max()})
    for (double y : {grid.y_min, grid.covered_y_max()}) reach = std::max(reach, std::hypot(x, y));
  reach += grid.resolution;

  BevMask obs(grid);
  auto mark = [&](double x, double y) {
    if (auto c = world_to_cell(x, y, grid)) obs.set(c->row, c->col);
  };
  for (long i = 0; i < n; ++i) {
    const BinEnd& b = bins[static_cast<std::size_t>(i)];
    double endpoint;
    if (b.nearest_obstacle < kInf) {
      endpoint = b.nearest_obstacle;
      mark(b.ox, b.oy);
    } else if (b.farthest >= 0.0) {
      endpoint = b.farthest;
      mark(b.fx, b.fy);
    } else {
      continue;
    }
    const double az = deg2rad(static_cast<double>(i - half) * azimuth_res_deg);
    traverse(std::cos(az), std::sin(az), std::min(endpoint, reach), grid, obs);
  }
  return obs;
}

Supervision build_supervision(const BevMask& occupancy, const BevMask& observable,
                              const BevMask& hfov) {
  if (!(occupancy.grid() == observable.grid()) || !(observable.grid() == hfov.grid()))
    throw GridMismatch("supervision inputs are on different grids");
  Supervision s;
  s.label.occupancy = occupancy & observable;
  s.label.observable = observable;
  s.sup = hfov & observable;
  s.unknown = hfov & ~observable;
  return s;
}

Supervision supervise_point_cloud(const PointCloud& pc, const BevGridSpec& grid,
                                  const BevMask& hfov, double z_min, double azimuth_res_deg) {
  const PointCloud nonground = remove_ground(pc, z_min);
  const BevMask occ = occupancy_from_points(nonground, grid);
  const BevMask obs = observability_mask(pc, nonground, grid, azimuth_res_deg);
  return build_supervision(occ, obs, hfov);
}

}  // namespace rdbev
