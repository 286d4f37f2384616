#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rdbev/core.hpp"

namespace rdbev {

struct PropagationParams {
  double amplitude_exponent = 2.0;  // a = reflectivity / r^p
  int psf_halfwidth_bins = 1;       // 0 = nearest-bin injection
  bool add_noise = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Geometry of one scatterer as seen by the radar.
struct TargetGeometry {
  double range = 0.0;        // m
  double azimuth = 0.0;      // rad from boresight, positive toward +y
  double radial_speed = 0.0; // m/s, positive receding
  double range_bin = 0.0;    // fractional; bin r is centered on r * range_resolution
  double doppler_bin = 0.0;  // fractional; zero velocity at D/2
};

TargetGeometry target_geometry(const Scatterer& s, const RadarConfig& radar,
                               std::pair<double, double> radar_offset);

// Sum over the chirp's active TX of exp(i k x_tx sin(theta)).
std::complex<double> tx_array_factor(const RadarConfig& radar, int chirp, double azimuth);

// Per-RX steering phase exp(i k x_rx sin(theta)).
std::complex<double> rx_steering(const RadarConfig& radar, int rx, double azimuth);

// 1D PSF weights for a target at fractional bin `center`: bins round(center)+k,
// k in [-hw, hw], weighted by a Hann lobe of half-width hw+1 bins. hw = 0 gives
// a single unit weight.
std::vector<std::pair<int, double>> psf_weights(double center, int halfwidth);

// Per-cell complex noise standard deviation: a unit-reflectivity boresight
// target at 10 m on a single-TX chirp sits snr_db above it.
double noise_sigma(const RadarConfig& radar, const PropagationParams& prop);

class SingularTarget : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Coherent point-target forward model. Targets outside the HFOV or beyond
// R * range_resolution are not observed. Throws SingularTarget for a scatterer
// at the radar origin.
RdFrame simulate_rd(const Scene& scene, const RadarConfig& radar,
                    const PropagationParams& prop);

// Per chirp and RD cell, divides every RX value by sqrt(mean_j |x_j|^2 + eps).
inline constexpr double kNormalizeEps = 1e-12;
RdFrame normalize_rd(const RdFrame& frame, double eps = kNormalizeEps);

enum class ChirpSelection { AOnly, BOnly, AB };
RdFrame select_chirps(const RdFrame& frame, ChirpSelection mode);

enum class CollapseDim { Doppler, Range };
// Complex mean along `dim`, broadcast back over that dimension.
RdFrame collapse_dim(const RdFrame& frame, CollapseDim dim);

}  // namespace rdbev
