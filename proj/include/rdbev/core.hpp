#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdbev {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Chirp : int { A = 0, B = 1 };

// Sensor description. Antenna positions are along the horizontal array axis,
// in meters, measured from the first element.
struct RadarConfig {
  double carrier_freq = 76.5e9;
  int num_tx = 6;
  int num_rx = 8;
  std::vector<double> tx_positions;
  std::vector<double> rx_positions;
  double hfov_deg = 64.0;
  double max_range = 65.0;
  int num_range_bins = 200;
  double range_resolution = 0.33;
  int num_doppler_bins = 128;
  double max_unambiguous_speed = 25.0;
  // chirp_tx_sets[c] lists the TX indices active during chirp type c.
  std::vector<std::vector<int>> chirp_tx_sets;
  double snr_db = 20.0;

  // 6 TX x 8 RX filling a 48-element virtual ULA; chirp A single-TX, chirp B
  // all TX.
  static RadarConfig standard();

  double wavelength() const { return kSpeedOfLight / carrier_freq; }
  double doppler_resolution() const {
    return 2.0 * max_unambiguous_speed / num_doppler_bins;
  }
  int num_chirps() const { return static_cast<int>(chirp_tx_sets.size()); }

  // Throws ConfigError when an invariant is violated.
  void validate() const;

  // Canonical one-line key=value form; round-trips every field bit-exactly.
  std::string serialize() const;
  static RadarConfig parse(const std::string& text);
  std::string digest() const;
};

bool operator==(const RadarConfig& a, const RadarConfig& b);

struct CellIndex {
  int row = 0;  // forward (x)
  int col = 0;  // lateral (y)
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// BEV plane in the LiDAR frame. Rows run along x (forward), columns along y
// (lateral). Cells are half-open squares.
struct BevGridSpec {
  double resolution = 0.5;
  double x_min = 0.0;
  double x_max = 60.0;
  double y_min = -38.0;
  double y_max = 38.0;

  static BevGridSpec with_resolution(double res);

  int rows() const;
  int cols() const;
  std::size_t num_cells() const {
    return static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols());
  }
  // Extent actually tiled by whole cells (>= the nominal extent).
  double covered_x_max() const { return x_min + rows() * resolution; }
  double covered_y_max() const { return y_min + cols() * resolution; }

  std::size_t flat(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols()) +
           static_cast<std::size_t>(col);
  }
  std::pair<double, double> cell_center(int row, int col) const {
    return {x_min + (row + 0.5) * resolution, y_min + (col + 0.5) * resolution};
  }

  void validate() const;
  friend bool operator==(const BevGridSpec&, const BevGridSpec&) = default;
};

std::optional<CellIndex> world_to_cell(double x, double y,
                                       const BevGridSpec& grid);

class BevMask {
 public:
  BevMask() = default;
  explicit BevMask(const BevGridSpec& grid, bool value = false)
      : grid_(grid), bits_(grid.num_cells(), value ? 1 : 0) {}

  const BevGridSpec& grid() const { return grid_; }
  std::size_t size() const { return bits_.size(); }

  bool get(int row, int col) const { return bits_[grid_.flat(row, col)] != 0; }
  void set(int row, int col, bool v = true) {
    bits_[grid_.flat(row, col)] = v ? 1 : 0;
  }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set_flat(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const;

  BevMask operator&(const BevMask& o) const;
  BevMask operator|(const BevMask& o) const;
  BevMask operator~() const;

  friend bool operator==(const BevMask&, const BevMask&) = default;

 private:
  void require_same_grid(const BevMask& o) const;

  BevGridSpec grid_;
  std::vector<std::uint8_t> bits_;
};

struct BevLabel {
  BevMask occupancy;
  BevMask observable;

  bool consistent() const;  // occupied => observable
  friend bool operator==(const BevLabel&, const BevLabel&) = default;
};

struct Scatterer {
  double x = 0.0;
  double y = 0.0;
  double height = 1.0;
  double radius = 0.5;
  double reflectivity = 1.0;
  double vx = 0.0;
  double vy = 0.0;
};

struct Scene {
  std::vector<Scatterer> scatterers;
  double ground_extent = 80.0;
  std::pair<double, double> radar_origin_offset{0.0, 0.0};

  void validate() const;
};

// One scatterer per line: `x y height radius reflectivity vx vy`. Blank lines
// and lines starting with '#' are skipped.
Scene parse_scene(const std::string& text);
std::string format_scene(const Scene& scene);

struct LidarPoint {
  float x = 0.0F;
  float y = 0.0F;
  float z = 0.0F;
  bool ground = false;
  friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};

struct PointCloud {
  std::vector<LidarPoint> points;
  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

// Complex range-Doppler tensor laid out [chirp][rx][range][doppler].
class RdFrame {
 public:
  RdFrame() = default;
  explicit RdFrame(RadarConfig config);

  const RadarConfig& config() const { return config_; }
  int chirps() const { return config_.num_chirps(); }
  int rx() const { return config_.num_rx; }
  int ranges() const { return config_.num_range_bins; }
  int dopplers() const { return config_.num_doppler_bins; }
  std::array<std::size_t, 4> shape() const;

  std::size_t index(int c, int j, int r, int d) const {
    return ((static_cast<std::size_t>(c) * rx() + j) * ranges() + r) *
               static_cast<std::size_t>(dopplers()) +
           d;
  }
  std::complex<float>& at(int c, int j, int r, int d) {
    return data_[index(c, j, r, d)];
  }
  const std::complex<float>& at(int c, int j, int r, int d) const {
    return data_[index(c, j, r, d)];
  }

  std::vector<std::complex<float>>& data() { return data_; }
  const std::vector<std::complex<float>>& data() const { return data_; }

  bool all_finite() const;
  friend bool operator==(const RdFrame&, const RdFrame&) = default;

 private:
  RadarConfig config_;
  std::vector<std::complex<float>> data_;
};

class PredictionMap {
 public:
  PredictionMap() = default;
  explicit PredictionMap(const BevGridSpec& grid, float value = 0.0F)
      : grid_(grid), probs_(grid.num_cells(), value) {}
  PredictionMap(const BevGridSpec& grid, std::vector<float> probs);

  const BevGridSpec& grid() const { return grid_; }
  float get(int row, int col) const { return probs_[grid_.flat(row, col)]; }
  void set(int row, int col, float v) { probs_[grid_.flat(row, col)] = v; }
  float operator[](std::size_t i) const { return probs_[i]; }
  std::vector<float>& values() { return probs_; }
  const std::vector<float>& values() const { return probs_; }

  // Throws std::invalid_argument when a value is outside [0, 1].
  void validate() const;
  friend bool operator==(const PredictionMap&, const PredictionMap&) = default;

 private:
  BevGridSpec grid_;
  std::vector<float> probs_;
};

struct FrameRecord {
  std::uint64_t frame_id = 0;
  std::uint64_t sequence_id = 0;
  RdFrame rd;
  BevLabel label;
  BevMask hfov;
  BevMask sup;
  std::optional<PointCloud> points;
  std::optional<PredictionMap> prediction;
  std::string prediction_method;

  const BevGridSpec& grid() const { return hfov.grid(); }
  BevMask unknown() const { return hfov & ~label.observable; }
  // Throws std::invalid_argument on a broken mask invariant.
  void validate() const;
  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

// Cells whose center, seen from the radar origin, lies within +-hfov/2 of
// boresight (+x) and within max_range.
BevMask hfov_mask(const BevGridSpec& grid,
                  std::pair<double, double> radar_offset, double hfov_deg,
                  double max_range = 65.0);

// Stable 64-bit FNV-1a digest, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace rdbev
