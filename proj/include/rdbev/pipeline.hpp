#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdbev/baselines.hpp"
#include "rdbev/container.hpp"
#include "rdbev/core.hpp"
#include "rdbev/lidar_sim.hpp"
#include "rdbev/metrics.hpp"
#include "rdbev/radar_sim.hpp"

namespace rdbev {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything `generate` needs. Read from a line-oriented `key = value` file;
// command-line flags override individual keys.
struct GeneratorConfig {
  double resolution = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t frames = 100;
  double snr_db = 20.0;
  double split_ratio = 0.7;
  std::uint64_t frames_per_sequence = 10;
  double frame_interval = 0.5;  // s between frames of a sequence

  // Scene sampling: positions uniform over the HFOV sector area between
  // min_range and max_range. Counts are sized so that the occupied fraction of
  // the supervised region lands near 0.04.
  int min_scatterers = 40;
  int max_scatterers = 70;
  double min_radius = 0.3;
  double max_radius = 2.0;
  double min_height = 0.5;
  double max_height = 3.0;
  double min_reflectivity = 0.5;
  double max_reflectivity = 5.0;
  double min_range = 8.0;
  double max_range = 60.0;
  double max_speed = 15.0;
  double static_fraction = 0.3;

  double amplitude_exponent = 2.0;
  int psf_halfwidth = 1;
  bool noise = true;

  double lidar_azimuth_step = 0.2;
  double lidar_max_range = 80.0;
  double ground_point_spacing = 1.0;
  int returns_per_hit = 3;
  double ground_z_min = 0.3;
  double observability_azimuth_res = 0.05;

  double radar_offset_x = 0.0;
  double radar_offset_y = 0.0;
  bool store_points = false;

  static GeneratorConfig parse(const std::string& text);
  static GeneratorConfig load(const std::filesystem::path& path);
  // Applies one `key`, `value` pair; throws ConfigError on unknown keys or
  // unparseable values.
  void set(const std::string& key, const std::string& value);
  std::string serialize() const;  // canonical, sorted key = value lines
  std::string digest() const;
  void validate() const;

  BevGridSpec grid() const { return BevGridSpec::with_resolution(resolution); }
  RadarConfig radar() const;
  std::pair<double, double> radar_offset() const { return {radar_offset_x, radar_offset_y}; }
};

// splitmix64-based derivation of independent per-frame streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

Scene sample_scene(const GeneratorConfig& cfg, std::mt19937_64& rng);

// Scene of a frame: the sequence's base scene advanced by the frame's offset
// within the sequence. Scatterers that would cover the sensor origin are dropped.
Scene scene_for_frame(const GeneratorConfig& cfg, std::uint64_t frame_id);

// Simulates radar + LiDAR for one scene and builds its labels and masks.
FrameRecord make_frame(const GeneratorConfig& cfg, const Scene& scene, std::uint64_t frame_id,
                       std::uint64_t sequence_id);
FrameRecord make_frame(const GeneratorConfig& cfg, std::uint64_t frame_id);

// Worker count from RDBEV_WORKERS, else hardware concurrency.
unsigned worker_count();
// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
// exception after all workers stop.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

std::string frame_file_name(std::uint64_t frame_id);

Manifest generate_dataset(const GeneratorConfig& cfg, const std::filesystem::path& out_dir,
                          unsigned workers = worker_count());

struct DatasetInfo {
  std::filesystem::path dir;
  Manifest manifest;
  BevGridSpec grid;
  std::pair<double, double> radar_offset{0.0, 0.0};
};
DatasetInfo open_dataset(const std::filesystem::path& dir);

enum class BaselineMethod { Prior, RangeEnergy, Beamform };
BaselineMethod parse_baseline_method(const std::string& name);  // throws ConfigError
const char* baseline_method_name(BaselineMethod m);

// Prediction for one frame. `pos_frac` is used only by the prior.
PredictionMap baseline_prediction(BaselineMethod method, const FrameRecord& record,
                                  std::pair<double, double> radar_offset, double pos_frac,
                                  Chirp chirp = Chirp::A);

// Writes one prediction file per validation frame plus a predictions manifest.
Manifest run_baseline(const std::filesystem::path& dataset_dir, BaselineMethod method,
                      const std::filesystem::path& out_dir, unsigned workers = worker_count(),
                      Chirp chirp = Chirp::A);

enum class AblationTransform { AOnly, BOnly, CollapseDoppler, CollapseRange };
AblationTransform parse_ablation(const std::string& name);  // throws ConfigError
const char* ablation_name(AblationTransform t);
RdFrame apply_ablation(const RdFrame& frame, AblationTransform t);

Manifest run_ablation(const std::filesystem::path& dataset_dir, AblationTransform transform,
                      const std::filesystem::path& out_dir, unsigned workers = worker_count());

// Evaluates a predictions directory against the validation split. Throws
// ValidationError naming every missing or unexpected frame id.
EvalReport run_evaluation(const std::filesystem::path& dataset_dir,
                          const std::filesystem::path& predictions_dir);

}  // namespace rdbev
