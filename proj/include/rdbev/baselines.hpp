#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rdbev/core.hpp"

namespace rdbev {

// Constant map at the supervised-region prevalence.
PredictionMap random_prior(double pos_frac, const BevGridSpec& grid);

// Pooled occupied fraction of M_sup over a set of records.
double estimate_pos_frac(const std::vector<const FrameRecord*>& records);

// e(r) = mean over chirps, RX and Doppler of |x|, divided by its maximum.
std::vector<double> range_energy_profile(const RdFrame& frame);

// Each in-HFOV cell takes the profile value at the range bin nearest to its
// radial distance from the radar origin; every other cell is 0.
PredictionMap range_energy_projection(const RdFrame& frame, const BevGridSpec& grid,
                                      std::pair<double, double> radar_offset);

class EmptyChirp : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Range-azimuth magnitude map from a spatial DFT over the RX channels of one
// chirp, zero-padded to fft_size angle bins; bin m sits at
// u = sin(theta) = -1 + 2m / fft_size. Magnitudes are maxed over Doppler.
class RangeAzimuthMap {
 public:
  RangeAzimuthMap(int ranges, int angles) : ranges_(ranges), angles_(angles),
      values_(static_cast<std::size_t>(ranges) * angles, 0.0) {}

  int ranges() const { return ranges_; }
  int angles() const { return angles_; }
  double& at(int r, int m) { return values_[static_cast<std::size_t>(r) * angles_ + m]; }
  double at(int r, int m) const { return values_[static_cast<std::size_t>(r) * angles_ + m]; }
  const std::vector<double>& values() const { return values_; }

  double angle_bin_u(int m) const { return -1.0 + 2.0 * m / angles_; }
  // Nearest angle bin to u = sin(theta); u = 1 maps onto the last bin.
  int nearest_angle_bin(double u) const;

  struct Peak {
    int range_bin = 0;
    int angle_bin = 0;
    double value = 0.0;
  };
  // Global maximum; ties go to the lowest (range, angle) index.
  Peak peak() const;
  // Global maximum; among exactly equal maxima one is drawn uniformly.
  Peak peak_random_tie(std::uint64_t seed) const;

 private:
  int ranges_;
  int angles_;
  std::vector<double> values_;
};

// Throws EmptyChirp when the selected chirp slice is all zeros.
RangeAzimuthMap beamform_oracle(const RdFrame& frame, Chirp chirp, int fft_size = 64);

// Samples the RA map at each in-HFOV cell's (range, azimuth) by nearest bin and
// normalizes by the map maximum.
PredictionMap project_ra_to_bev(const RangeAzimuthMap& ra, const RadarConfig& radar,
                                const BevGridSpec& grid,
                                std::pair<double, double> radar_offset);

}  // namespace rdbev
