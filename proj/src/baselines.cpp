#include "rdbev/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

namespace rdbev {

namespace {

float clamp_unit(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

PredictionMap random_prior(double pos_frac, const BevGridSpec& grid) {
  if (!(pos_frac >= 0.0 && pos_frac <= 1.0))
    throw std::invalid_argument("pos_frac must lie in [0, 1]");
  return PredictionMap(grid, static_cast<float>(pos_frac));
}

double estimate_pos_frac(const std::vector<const FrameRecord*>& records) {
  std::size_t occupied = 0;
  std::size_t supervised = 0;
  for (const FrameRecord* r : records) {
    occupied += (r->label.occupancy & r->sup).count();
    supervised += r->sup.count();
  }
  if (supervised == 0) throw std::invalid_argument("no supervised cells to estimate pos_frac");
  return static_cast<double>(occupied) / static_cast<double>(supervised);
}

std::vector<double> range_energy_profile(const RdFrame& frame) {
  const int R = frame.ranges();
  std::vector<double> e(static_cast<std::size_t>(R), 0.0);
  const double n = static_cast<double>(frame.chirps()) * frame.rx() * frame.dopplers();
  for (int c = 0; c < frame.chirps(); ++c)
    for (int j = 0; j < frame.rx(); ++j)
      for (int r = 0; r < R; ++r) {
        double sum = 0.0;
        for (int d = 0; d < frame.dopplers(); ++d) sum += std::abs(frame.at(c, j, r, d));
        e[static_cast<std::size_t>(r)] += sum;
      }
  double peak = 0.0;
  for (double& v : e) {
    v /= n;
    peak = std::max(peak, v);
  }
  if (peak > 0.0)
    for (double& v : e) v /= peak;
  return e;
}

PredictionMap range_energy_projection(const RdFrame& frame, const BevGridSpec& grid,
                                      std::pair<double, double> radar_offset) {
  const RadarConfig& radar = frame.config();
  const std::vector<double> e = range_energy_profile(frame);
  const BevMask fov = hfov_mask(grid, radar_offset, radar.hfov_deg, radar.max_range);
  PredictionMap out(grid);
  for (int i = 0; i < grid.rows(); ++i)
    for (int j = 0; j < grid.cols(); ++j) {
      if (!fov.get(i, j)) continue;
      auto [cx, cy] = grid.cell_center(i, j);
      const double dist = std::hypot(cx - radar_offset.first, cy - radar_offset.second);
      const long bin = std::lround(dist / radar.range_resolution);
      if (bin < radar.num_range_bins) out.set(i, j, clamp_unit(e[static_cast<std::size_t>(bin)]));
    }
  return out;
}

int RangeAzimuthMap::nearest_angle_bin(double u) const {
  const long m = std::lround((u + 1.0) * angles_ / 2.0);
  return static_cast<int>(std::clamp<long>(m, 0, angles_ - 1));
}

RangeAzimuthMap::Peak RangeAzimuthMap::peak() const {
  Peak best{0, 0, values_.empty() ? 0.0 : values_[0]};
  for (int r = 0; r < ranges_; ++r)
    for (int m = 0; m < angles_; ++m)
      if (at(r, m) > best.value) best = {r, m, at(r, m)};
  return best;
}

RangeAzimuthMap::Peak RangeAzimuthMap::peak_random_tie(std::uint64_t seed) const {
  const Peak first = peak();
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] == first.value) ties.push_back(i);
  std::mt19937_64 rng(seed);
  const std::size_t pick =
      ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
  return {static_cast<int>(pick / angles_), static_cast<int>(pick % angles_), first.value};
}

RangeAzimuthMap beamform_oracle(const RdFrame& frame, Chirp chirp, int fft_size) {
  if (fft_size < frame.rx()) throw std::invalid_argument("fft_size smaller than RX count");
  const int c = static_cast<int>(chirp);
  if (c >= frame.chirps()) throw std::invalid_argument("chirp not present in frame");
  const RadarConfig& radar = frame.config();
  const int J = frame.rx();
  const int R = frame.ranges();
  const int D = frame.dopplers();

  bool any = false;
  for (int j = 0; j < J && !any; ++j)
    for (int r = 0; r < R && !any; ++r)
      for (int d = 0; d < D && !any; ++d)
        if (frame.at(c, j, r, d) != std::complex<float>(0.0F, 0.0F)) any = true;
  if (!any) throw EmptyChirp("empty chirp");

  RangeAzimuthMap ra(R, fft_size);
  // Conjugate steering over the physical RX positions; for a half-wavelength
  // ULA this is the fftshifted zero-padded DFT.
  const double k = 2.0 * kPi / radar.wavelength();
  std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(fft_size) * J);
  for (int m = 0; m < fft_size; ++m)
    for (int j = 0; j < J; ++j)
      twiddle[static_cast<std::size_t>(m) * J + j] =
          std::polar(1.0, -k * radar.rx_positions[static_cast<std::size_t>(j)] * ra.angle_bin_u(m));

  std::vector<std::complex<double>> x(static_cast<std::size_t>(J));
  for (int r = 0; r < R; ++r) {
    for (int d = 0; d < D; ++d) {
      for (int j = 0; j < J; ++j) x[static_cast<std::size_t>(j)] = frame.at(c, j, r, d);
      for (int m = 0; m < fft_size; ++m) {
        const std::complex<double>* w = &twiddle[static_cast<std::size_t>(m) * J];
        std::complex<double> s{0.0, 0.0};
        for (int j = 0; j < J; ++j) s += x[static_cast<std::size_t>(j)] * w[j];
        const double mag = std::norm(s);
        if (mag > ra.at(r, m)) ra.at(r, m) = mag;
      }
    }
  }
  for (int r = 0; r < R; ++r)
    for (int m = 0; m < fft_size; ++m) ra.at(r, m) = std::sqrt(ra.at(r, m));
  return ra;
}

PredictionMap project_ra_to_bev(const RangeAzimuthMap& ra, const RadarConfig& radar,
                                const BevGridSpec& grid,
                                std::pair<double, double> radar_offset) {
  const BevMask fov = hfov_mask(grid, radar_offset, radar.hfov_deg, radar.max_range);
  double peak = 0.0;
  for (double v : ra.values()) peak = std::max(peak, v);
  PredictionMap out(grid);
  if (peak <= 0.0) return out;
  for (int i = 0; i < grid.rows(); ++i)
    for (int j = 0; j < grid.cols(); ++j) {
      if (!fov.get(i, j)) continue;
      auto [cx, cy] = grid.cell_center(i, j);
      const double dx = cx - radar_offset.first;
      const double dy = cy - radar_offset.second;
      const long bin = std::lround(std::hypot(dx, dy) / radar.range_resolution);
      if (bin >= ra.ranges()) continue;
      const int m = ra.nearest_angle_bin(std::sin(std::atan2(dy, dx)));
      out.set(i, j, clamp_unit(ra.at(static_cast<int>(bin), m) / peak));
    }
  return out;
}

}  // namespace rdbev
