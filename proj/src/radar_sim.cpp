#include "rdbev/radar_sim.hpp"

#include <cmath>
#include <random>

namespace rdbev {

void PropagationParams::validate() const {
  if (!(amplitude_exponent >= 0.0)) throw ConfigError("amplitude exponent must be >= 0");
  if (psf_halfwidth_bins < 0) throw ConfigError("psf half-width must be >= 0");
}

TargetGeometry target_geometry(const Scatterer& s, const RadarConfig& radar,
                               std::pair<double, double> radar_offset) {
  TargetGeometry g;
  const double dx = s.x - radar_offset.first;
  const double dy = s.y - radar_offset.second;
  g.range = std::hypot(dx, dy);
  g.azimuth = std::atan2(dy, dx);
  if (g.range > 0.0) g.radial_speed = (s.vx * dx + s.vy * dy) / g.range;
  g.range_bin = g.range / radar.range_resolution;
  g.doppler_bin = radar.num_doppler_bins / 2.0 + g.radial_speed / radar.doppler_resolution();
  return g;
}

std::complex<double> tx_array_factor(const RadarConfig& radar, int chirp, double azimuth) {
  const double k = 2.0 * kPi / radar.wavelength();
  const double s = std::sin(azimuth);
  std::complex<double> af{0.0, 0.0};
  for (int tx : radar.chirp_tx_sets.at(static_cast<std::size_t>(chirp)))
    af += std::polar(1.0, k * radar.tx_positions[static_cast<std::size_t>(tx)] * s);
  return af;
}

std::complex<double> rx_steering(const RadarConfig& radar, int rx, double azimuth) {
  const double k = 2.0 * kPi / radar.wavelength();
  return std::polar(1.0, k * radar.rx_positions[static_cast<std::size_t>(rx)] *
                             std::sin(azimuth));
}

std::vector<std::pair<int, double>> psf_weights(double center, int halfwidth) {
  const int nearest = static_cast<int>(std::lround(center));
  if (halfwidth == 0) return {{nearest, 1.0}};
  std::vector<std::pair<int, double>> out;
  const double lobe = halfwidth + 1.0;
  for (int k = -halfwidth; k <= halfwidth; ++k) {
    const int bin = nearest + k;
    const double delta = bin - center;
    const double c = std::cos(kPi * delta / (2.0 * lobe));
    out.emplace_back(bin, c * c);
  }
  return out;
}

double noise_sigma(const RadarConfig& radar, const PropagationParams& prop) {
  const double ref_amplitude = 1.0 / std::pow(10.0, prop.amplitude_exponent);
  return ref_amplitude / std::sqrt(std::pow(10.0, radar.snr_db / 10.0));
}

RdFrame simulate_rd(const Scene& scene, const RadarConfig& radar,
                    const PropagationParams& prop) {
  scene.validate();
  radar.validate();
  prop.validate();
  RdFrame frame(radar);
  const int C = frame.chirps();
  const int J = frame.rx();
  const int R = frame.ranges();
  const int D = frame.dopplers();
  std::vector<std::complex<double>> acc(frame.data().size(), {0.0, 0.0});
  const double half_fov = deg2rad(radar.hfov_deg / 2.0);
  const double max_range = R * radar.range_resolution;

  for (const auto& s : scene.scatterers) {
    const TargetGeometry g = target_geometry(s, radar, scene.radar_origin_offset);
    if (g.range == 0.0) throw SingularTarget("scatterer at the radar origin");
    if (std::abs(g.azimuth) > half_fov || g.range >= max_range) continue;
    const double amplitude = s.reflectivity / std::pow(g.range, prop.amplitude_exponent);
    const auto range_psf = psf_weights(g.range_bin, prop.psf_halfwidth_bins);
    const auto doppler_psf = psf_weights(g.doppler_bin, prop.psf_halfwidth_bins);
    for (int c = 0; c < C; ++c) {
      const std::complex<double> af = tx_array_factor(radar, c, g.azimuth);
      for (int j = 0; j < J; ++j) {
        const std::complex<double> a = amplitude * af * rx_steering(radar, j, g.azimuth);
        for (const auto& [rb, wr] : range_psf) {
          if (rb < 0 || rb >= R) continue;
          for (const auto& [db, wd] : doppler_psf) {
            const int d = ((db % D) + D) % D;  // Doppler aliases circularly
            acc[frame.index(c, j, rb, d)] += a * (wr * wd);
          }
        }
      }
    }
  }

  if (prop.add_noise) {
    std::mt19937_64 rng(prop.seed);
    std::normal_distribution<double> normal(0.0, noise_sigma(radar, prop) / std::sqrt(2.0));
    for (auto& v : acc) {
      const double re = normal(rng);
      const double im = normal(rng);
      v += std::complex<double>(re, im);
    }
  }

  auto& data = frame.data();
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = {static_cast<float>(acc[i].real()), static_cast<float>(acc[i].imag())};
  return frame;
}

RdFrame normalize_rd(const RdFrame& frame, double eps) {
  RdFrame out = frame;
  const int J = frame.rx();
  for (int c = 0; c < frame.chirps(); ++c) {
    for (int r = 0; r < frame.ranges(); ++r) {
      for (int d = 0; d < frame.dopplers(); ++d) {
        double power = 0.0;
        for (int j = 0; j < J; ++j) power += std::norm(std::complex<double>(frame.at(c, j, r, d)));
        const double scale = 1.0 / std::sqrt(power / J + eps);
        for (int j = 0; j < J; ++j) {
          const std::complex<double> v(frame.at(c, j, r, d));
          out.at(c, j, r, d) = {static_cast<float>(v.real() * scale),
                                static_cast<float>(v.imag() * scale)};
        }
      }
    }
  }
  return out;
}

RdFrame select_chirps(const RdFrame& frame, ChirpSelection mode) {
  if (mode == ChirpSelection::AB) return frame;
  RdFrame out = frame;
  const int keep = mode == ChirpSelection::AOnly ? static_cast<int>(Chirp::A)
                                                 : static_cast<int>(Chirp::B);
  for (int c = 0; c < frame.chirps(); ++c) {
    if (c == keep) continue;
    for (int j = 0; j < frame.rx(); ++j)
      for (int r = 0; r < frame.ranges(); ++r)
        for (int d = 0; d < frame.dopplers(); ++d) out.at(c, j, r, d) = {0.0F, 0.0F};
  }
  return out;
}

RdFrame collapse_dim(const RdFrame& frame, CollapseDim dim) {
  RdFrame out = frame;
  const int R = frame.ranges();
  const int D = frame.dopplers();
  for (int c = 0; c < frame.chirps(); ++c) {
    for (int j = 0; j < frame.rx(); ++j) {
      if (dim == CollapseDim::Doppler) {
        for (int r = 0; r < R; ++r) {
          std::complex<double> sum{0.0, 0.0};
          for (int d = 0; d < D; ++d) sum += std::complex<double>(frame.at(c, j, r, d));
          const std::complex<double> mean = sum / static_cast<double>(D);
          const std::complex<float> m(static_cast<float>(mean.real()),
                                      static_cast<float>(mean.imag()));
          for (int d = 0; d < D; ++d) out.at(c, j, r, d) = m;
        }
      } else {
        for (int d = 0; d < D; ++d) {
          std::complex<double> sum{0.0, 0.0};
          for (int r = 0; r < R; ++r) sum += std::complex<double>(frame.at(c, j, r, d));
          const std::complex<double> mean = sum / static_cast<double>(R);
          const std::complex<float> m(static_cast<float>(mean.real()),
                                      static_cast<float>(mean.imag()));
          for (int r = 0; r < R; ++r) out.at(c, j, r, d) = m;
        }
      }
    }
  }
  return out;
}

}  // namespace rdbev
