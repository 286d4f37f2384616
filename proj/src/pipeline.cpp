#include "rdbev/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "rdbev/supervision.hpp"

namespace rdbev {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("`" + key + "` expects a number, got `" + v + "`");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    auto n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("`" + key + "` expects a non-negative integer, got `" + v + "`");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const auto n = to_u64(key, v);
  if (n > 1000000) throw ConfigError("`" + key + "` is out of range");
  return static_cast<int>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("`" + key + "` expects true/false, got `" + v + "`");
}

std::string grid_meta(const BevGridSpec& g) {
  return fmt_double(g.resolution) + ' ' + fmt_double(g.x_min) + ' ' + fmt_double(g.x_max) + ' ' +
         fmt_double(g.y_min) + ' ' + fmt_double(g.y_max);
}

BevGridSpec parse_grid_meta(const std::string& s) {
  std::istringstream is(s);
  BevGridSpec g;
  if (!(is >> g.resolution >> g.x_min >> g.x_max >> g.y_min >> g.y_max))
    throw MalformedHeader("bad grid in manifest");
  g.validate();
  return g;
}

const std::string& meta_or_throw(const Manifest& m, const std::string& key) {
  auto it = m.meta.find(key);
  if (it == m.meta.end()) throw MalformedHeader("manifest missing meta `" + key + "`");
  return it->second;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw IoError("cannot write " + p.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create directory " + dir.string());
}

}  // namespace

void GeneratorConfig::set(const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "resolution") resolution = to_double(key, v);
  else if (key == "seed") seed = to_u64(key, v);
  else if (key == "frames") frames = to_u64(key, v);
  else if (key == "snr_db") snr_db = to_double(key, v);
  else if (key == "split_ratio") split_ratio = to_double(key, v);
  else if (key == "frames_per_sequence") frames_per_sequence = to_u64(key, v);
  else if (key == "frame_interval") frame_interval = to_double(key, v);
  else if (key == "min_scatterers") min_scatterers = to_int(key, v);
  else if (key == "max_scatterers") max_scatterers = to_int(key, v);
  else if (key == "min_radius") min_radius = to_double(key, v);
  else if (key == "max_radius") max_radius = to_double(key, v);
  else if (key == "min_height") min_height = to_double(key, v);
  else if (key == "max_height") max_height = to_double(key, v);
  else if (key == "min_reflectivity") min_reflectivity = to_double(key, v);
  else if (key == "max_reflectivity") max_reflectivity = to_double(key, v);
  else if (key == "min_range") min_range = to_double(key, v);
  else if (key == "max_range") max_range = to_double(key, v);
  else if (key == "max_speed") max_speed = to_double(key, v);
  else if (key == "static_fraction") static_fraction = to_double(key, v);
  else if (key == "amplitude_exponent") amplitude_exponent = to_double(key, v);
  else if (key == "psf_halfwidth") psf_halfwidth = to_int(key, v);
  else if (key == "noise") noise = to_bool(key, v);
  else if (key == "lidar_azimuth_step") lidar_azimuth_step = to_double(key, v);
  else if (key == "lidar_max_range") lidar_max_range = to_double(key, v);
  else if (key == "ground_point_spacing") ground_point_spacing = to_double(key, v);
  else if (key == "returns_per_hit") returns_per_hit = to_int(key, v);
  else if (key == "ground_z_min") ground_z_min = to_double(key, v);
  else if (key == "observability_azimuth_res") observability_azimuth_res = to_double(key, v);
  else if (key == "radar_offset_x") radar_offset_x = to_double(key, v);
  else if (key == "radar_offset_y") radar_offset_y = to_double(key, v);
  else if (key == "store_points") store_points = to_bool(key, v);
  else throw ConfigError("unknown config key `" + key + "`");
}

GeneratorConfig GeneratorConfig::parse(const std::string& text) {
  GeneratorConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected `key = value`");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

GeneratorConfig GeneratorConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string GeneratorConfig::serialize() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::map<std::string, std::string> kv{
      {"resolution", fmt_double(resolution)},
      {"seed", std::to_string(seed)},
      {"frames", std::to_string(frames)},
      {"snr_db", fmt_double(snr_db)},
      {"split_ratio", fmt_double(split_ratio)},
      {"frames_per_sequence", std::to_string(frames_per_sequence)},
      {"frame_interval", fmt_double(frame_interval)},
      {"min_scatterers", std::to_string(min_scatterers)},
      {"max_scatterers", std::to_string(max_scatterers)},
      {"min_radius", fmt_double(min_radius)},
      {"max_radius", fmt_double(max_radius)},
      {"min_height", fmt_double(min_height)},
      {"max_height", fmt_double(max_height)},
      {"min_reflectivity", fmt_double(min_reflectivity)},
      {"max_reflectivity", fmt_double(max_reflectivity)},
      {"min_range", fmt_double(min_range)},
      {"max_range", fmt_double(max_range)},
      {"max_speed", fmt_double(max_speed)},
      {"static_fraction", fmt_double(static_fraction)},
      {"amplitude_exponent", fmt_double(amplitude_exponent)},
      {"psf_halfwidth", std::to_string(psf_halfwidth)},
      {"noise", b(noise)},
      {"lidar_azimuth_step", fmt_double(lidar_azimuth_step)},
      {"lidar_max_range", fmt_double(lidar_max_range)},
      {"ground_point_spacing", fmt_double(ground_point_spacing)},
      {"returns_per_hit", std::to_string(returns_per_hit)},
      {"ground_z_min", fmt_double(ground_z_min)},
      {"observability_azimuth_res", fmt_double(observability_azimuth_res)},
      {"radar_offset_x", fmt_double(radar_offset_x)},
      {"radar_offset_y", fmt_double(radar_offset_y)},
      {"store_points", b(store_points)},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string GeneratorConfig::digest() const { return fnv1a_hex(serialize()); }

void GeneratorConfig::validate() const {
  grid();
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must be in (0, 1)");
  if (frames_per_sequence == 0) throw ConfigError("frames_per_sequence must be >= 1");
  if (min_scatterers < 0 || max_scatterers < min_scatterers)
    throw ConfigError("scatterer count range is empty");
  if (!(min_radius > 0.0) || max_radius < min_radius) throw ConfigError("bad radius range");
  if (max_height < min_height || !(min_height > 0.0)) throw ConfigError("bad height range");
  if (!(min_reflectivity > 0.0) || max_reflectivity < min_reflectivity)
    throw ConfigError("bad reflectivity range");
  if (!(min_range > 0.0) || max_range < min_range) throw ConfigError("bad placement range");
  if (max_speed < 0.0) throw ConfigError("max_speed must be >= 0");
  if (!(static_fraction >= 0.0 && static_fraction <= 1.0))
    throw ConfigError("static_fraction must be in [0, 1]");
  if (!(observability_azimuth_res > 0.0)) throw ConfigError("observability_azimuth_res must be > 0");
  PropagationParams{amplitude_exponent, psf_halfwidth, noise, 0}.validate();
  LidarConfig{lidar_azimuth_step, lidar_max_range, ground_point_spacing, returns_per_hit,
              ground_z_min, 0}
      .validate();
}

RadarConfig GeneratorConfig::radar() const {
  RadarConfig r = RadarConfig::standard();
  r.snr_db = snr_db;
  return r;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

Scene sample_scene(const GeneratorConfig& cfg, std::mt19937_64& rng) {
  using U = std::uniform_real_distribution<double>;
  const RadarConfig radar = cfg.radar();
  const double half_fov = deg2rad(radar.hfov_deg / 2.0);
  Scene scene;
  scene.radar_origin_offset = cfg.radar_offset();
  scene.ground_extent = cfg.lidar_max_range;
  const int count = std::uniform_int_distribution<int>(cfg.min_scatterers, cfg.max_scatterers)(rng);
  for (int k = 0; k < count; ++k) {
    Scatterer s;
    const double r = std::sqrt(U(cfg.min_range * cfg.min_range, cfg.max_range * cfg.max_range)(rng));
    const double th = U(-half_fov, half_fov)(rng);
    s.x = cfg.radar_offset_x + r * std::cos(th);
    s.y = cfg.radar_offset_y + r * std::sin(th);
    s.radius = U(cfg.min_radius, cfg.max_radius)(rng);
    s.height = U(cfg.min_height, cfg.max_height)(rng);
    s.reflectivity = U(cfg.min_reflectivity, cfg.max_reflectivity)(rng);
    if (U(0.0, 1.0)(rng) >= cfg.static_fraction) {
      const double speed = U(0.0, cfg.max_speed)(rng);
      const double heading = U(-kPi, kPi)(rng);
      s.vx = speed * std::cos(heading);
      s.vy = speed * std::sin(heading);
    }
    scene.scatterers.push_back(s);
  }
  return scene;
}

Scene scene_for_frame(const GeneratorConfig& cfg, std::uint64_t frame_id) {
  const std::uint64_t sequence = frame_id / cfg.frames_per_sequence;
  const double t = static_cast<double>(frame_id % cfg.frames_per_sequence) * cfg.frame_interval;
  std::mt19937_64 rng(derive_seed(cfg.seed, sequence, 0));
  Scene base = sample_scene(cfg, rng);
  Scene scene;
  scene.radar_origin_offset = base.radar_origin_offset;
  scene.ground_extent = base.ground_extent;
  for (Scatterer s : base.scatterers) {
    s.x += s.vx * t;
    s.y += s.vy * t;
    const double clearance = s.radius + 0.1;
    if (std::hypot(s.x, s.y) <= clearance ||
        std::hypot(s.x - cfg.radar_offset_x, s.y - cfg.radar_offset_y) <= clearance)
      continue;
    scene.scatterers.push_back(s);
  }
  return scene;
}

FrameRecord make_frame(const GeneratorConfig& cfg, const Scene& scene, std::uint64_t frame_id,
                       std::uint64_t sequence_id) {
  const BevGridSpec grid = cfg.grid();
  const RadarConfig radar = cfg.radar();
  PropagationParams prop{cfg.amplitude_exponent, cfg.psf_halfwidth, cfg.noise,
                         derive_seed(cfg.seed, frame_id, 1)};
  LidarConfig lidar{cfg.lidar_azimuth_step, cfg.lidar_max_range, cfg.ground_point_spacing,
                    cfg.returns_per_hit, cfg.ground_z_min, derive_seed(cfg.seed, frame_id, 2)};

  FrameRecord rec;
  rec.frame_id = frame_id;
  rec.sequence_id = sequence_id;
  rec.rd = simulate_rd(scene, radar, prop);
  PointCloud pc = simulate_lidar(scene, lidar);
  rec.hfov = hfov_mask(grid, cfg.radar_offset(), radar.hfov_deg, radar.max_range);
  Supervision sup = supervise_point_cloud(pc, grid, rec.hfov, cfg.ground_z_min,
                                          cfg.observability_azimuth_res);
  rec.label = std::move(sup.label);
  rec.sup = std::move(sup.sup);
  if (cfg.store_points) rec.points = std::move(pc);
  return rec;
}

FrameRecord make_frame(const GeneratorConfig& cfg, std::uint64_t frame_id) {
  return make_frame(cfg, scene_for_frame(cfg, frame_id), frame_id,
                    frame_id / cfg.frames_per_sequence);
}

unsigned worker_count() {
  if (const char* env = std::getenv("RDBEV_WORKERS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("RDBEV_WORKERS must be a positive integer, got `") + env + "`");
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

std::string frame_file_name(std::uint64_t frame_id) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "frame_%06llu.rdb", static_cast<unsigned long long>(frame_id));
  return buf;
}

Manifest generate_dataset(const GeneratorConfig& cfg_in, const std::filesystem::path& out_dir,
                          unsigned workers) {
  cfg_in.validate();
  GeneratorConfig cfg = cfg_in;
  if (cfg.frames == 1) throw ConfigError("a sequence-level split needs at least 2 frames");
  // Small runs still need two sequences.
  if (cfg.frames >= 2 && (cfg.frames + cfg.frames_per_sequence - 1) / cfg.frames_per_sequence < 2)
    cfg.frames_per_sequence = (cfg.frames + 1) / 2;
  ensure_dir(out_dir);

  Manifest m;
  m.kind = "dataset";
  m.meta["config_digest"] = cfg_in.digest();
  m.meta["grid"] = grid_meta(cfg.grid());
  m.meta["radar_digest"] = cfg.radar().digest();
  m.meta["radar_offset"] = fmt_double(cfg.radar_offset_x) + ' ' + fmt_double(cfg.radar_offset_y);
  m.meta["seed"] = std::to_string(cfg.seed);
  write_text(out_dir / "generator.cfg", cfg.serialize());

  std::vector<FrameKey> keys;
  for (std::uint64_t f = 0; f < cfg.frames; ++f) keys.push_back({f, f / cfg.frames_per_sequence});

  parallel_for(keys.size(), workers, [&](std::size_t i) {
    write_frame(make_frame(cfg, keys[i].frame_id), out_dir / frame_file_name(keys[i].frame_id));
  });

  if (!keys.empty()) {
    const SplitResult split = split_sequences(keys, cfg.split_ratio, cfg.seed);
    const std::set<std::uint64_t> train(split.train.begin(), split.train.end());
    for (const auto& k : keys)
      m.entries.push_back({k.frame_id, k.sequence_id,
                           train.count(k.frame_id) ? Split::Train : Split::Val,
                           frame_file_name(k.frame_id)});
  }
  write_manifest(m, out_dir);
  return m;
}

DatasetInfo open_dataset(const std::filesystem::path& dir) {
  DatasetInfo info;
  info.dir = dir;
  info.manifest = read_manifest(dir);
  if (info.manifest.kind != "dataset")
    throw ValidationError(dir.string() + " is not a dataset directory");
  info.grid = parse_grid_meta(meta_or_throw(info.manifest, "grid"));
  std::istringstream off(meta_or_throw(info.manifest, "radar_offset"));
  if (!(off >> info.radar_offset.first >> info.radar_offset.second))
    throw MalformedHeader("bad radar_offset in manifest");
  return info;
}

BaselineMethod parse_baseline_method(const std::string& name) {
  if (name == "prior") return BaselineMethod::Prior;
  if (name == "range_energy") return BaselineMethod::RangeEnergy;
  if (name == "beamform") return BaselineMethod::Beamform;
  throw ConfigError("unknown baseline method `" + name + "` (prior, range_energy, beamform)");
}

const char* baseline_method_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::Prior: return "prior";
    case BaselineMethod::RangeEnergy: return "range_energy";
    case BaselineMethod::Beamform: return "beamform";
  }
  return "?";
}

PredictionMap baseline_prediction(BaselineMethod method, const FrameRecord& record,
                                  std::pair<double, double> radar_offset, double pos_frac,
                                  Chirp chirp) {
  switch (method) {
    case BaselineMethod::Prior:
      return random_prior(pos_frac, record.grid());
    case BaselineMethod::RangeEnergy:
      return range_energy_projection(record.rd, record.grid(), radar_offset);
    case BaselineMethod::Beamform:
      return project_ra_to_bev(beamform_oracle(record.rd, chirp), record.rd.config(),
                               record.grid(), radar_offset);
  }
  throw ConfigError("unknown baseline method");
}

Manifest run_baseline(const std::filesystem::path& dataset_dir, BaselineMethod method,
                      const std::filesystem::path& out_dir, unsigned workers, Chirp chirp) {
  const DatasetInfo ds = open_dataset(dataset_dir);
  ensure_dir(out_dir);
  double pos_frac = 0.0;
  if (method == BaselineMethod::Prior) {
    std::size_t occupied = 0, supervised = 0;
    for (const auto& e : ds.manifest.split(Split::Train)) {
      const FrameRecord r = read_frame(ds.dir / e.file);
      occupied += (r.label.occupancy & r.sup).count();
      supervised += r.sup.count();
    }
    if (supervised == 0) throw ValidationError("train split has no supervised cells");
    pos_frac = static_cast<double>(occupied) / static_cast<double>(supervised);
  }

  const auto val = ds.manifest.split(Split::Val);
  Manifest out;
  out.kind = "predictions";
  out.meta["method"] = baseline_method_name(method);
  out.meta["grid"] = meta_or_throw(ds.manifest, "grid");
  if (method == BaselineMethod::Prior) out.meta["pos_frac"] = fmt_double(pos_frac);
  if (method == BaselineMethod::Beamform) out.meta["chirp"] = chirp == Chirp::A ? "A" : "B";
  parallel_for(val.size(), workers, [&](std::size_t i) {
    const FrameRecord r = read_frame(ds.dir / val[i].file);
    PredictionRecord p{r.frame_id, r.sequence_id, baseline_method_name(method),
                       baseline_prediction(method, r, ds.radar_offset, pos_frac, chirp)};
    write_prediction(p, out_dir / frame_file_name(r.frame_id));
  });
  for (const auto& e : val)
    out.entries.push_back({e.frame_id, e.sequence_id, Split::Val, frame_file_name(e.frame_id)});
  write_manifest(out, out_dir);
  return out;
}

AblationTransform parse_ablation(const std::string& name) {
  if (name == "a_only") return AblationTransform::AOnly;
  if (name == "b_only") return AblationTransform::BOnly;
  if (name == "collapse_doppler") return AblationTransform::CollapseDoppler;
  if (name == "collapse_range") return AblationTransform::CollapseRange;
  throw ConfigError("unknown ablation transform `" + name +
                    "` (a_only, b_only, collapse_doppler, collapse_range)");
}

const char* ablation_name(AblationTransform t) {
  switch (t) {
    case AblationTransform::AOnly: return "a_only";
    case AblationTransform::BOnly: return "b_only";
    case AblationTransform::CollapseDoppler: return "collapse_doppler";
    case AblationTransform::CollapseRange: return "collapse_range";
  }
  return "?";
}

RdFrame apply_ablation(const RdFrame& frame, AblationTransform t) {
  switch (t) {
    case AblationTransform::AOnly: return select_chirps(frame, ChirpSelection::AOnly);
    case AblationTransform::BOnly: return select_chirps(frame, ChirpSelection::BOnly);
    case AblationTransform::CollapseDoppler: return collapse_dim(frame, CollapseDim::Doppler);
    case AblationTransform::CollapseRange: return collapse_dim(frame, CollapseDim::Range);
  }
  return frame;
}

Manifest run_ablation(const std::filesystem::path& dataset_dir, AblationTransform transform,
                      const std::filesystem::path& out_dir, unsigned workers) {
  const DatasetInfo ds = open_dataset(dataset_dir);
  if (std::filesystem::exists(out_dir) &&
      std::filesystem::equivalent(std::filesystem::absolute(out_dir),
                                  std::filesystem::absolute(dataset_dir)))
    throw ConfigError("ablation output must differ from the input dataset");
  ensure_dir(out_dir);
  const auto& entries = ds.manifest.entries;
  parallel_for(entries.size(), workers, [&](std::size_t i) {
    FrameRecord r = read_frame(ds.dir / entries[i].file);
    r.rd = apply_ablation(r.rd, transform);
    write_frame(r, out_dir / entries[i].file);
  });
  Manifest out = ds.manifest;
  const auto prev = out.meta.find("ablation");
  out.meta["ablation"] = prev == out.meta.end()
                             ? std::string(ablation_name(transform))
                             : prev->second + "+" + ablation_name(transform);
  write_manifest(out, out_dir);
  if (std::filesystem::exists(ds.dir / "generator.cfg"))
    std::filesystem::copy_file(ds.dir / "generator.cfg", out_dir / "generator.cfg",
                               std::filesystem::copy_options::overwrite_existing);
  return out;
}

EvalReport run_evaluation(const std::filesystem::path& dataset_dir,
                          const std::filesystem::path& predictions_dir) {
  const DatasetInfo ds = open_dataset(dataset_dir);
  const Manifest preds = read_manifest(predictions_dir);
  if (preds.kind != "predictions")
    throw ValidationError(predictions_dir.string() + " is not a predictions directory");

  const auto val = ds.manifest.split(Split::Val);
  std::set<std::uint64_t> want, have;
  for (const auto& e : val) want.insert(e.frame_id);
  for (const auto& e : preds.entries) have.insert(e.frame_id);
  if (want != have) {
    std::ostringstream os;
    os << "prediction/frame id mismatch;";
    std::string missing, extra;
    for (auto id : want)
      if (!have.count(id)) missing += ' ' + std::to_string(id);
    for (auto id : have)
      if (!want.count(id)) extra += ' ' + std::to_string(id);
    if (!missing.empty()) os << " missing predictions for frames:" << missing << ';';
    if (!extra.empty()) os << " predictions for non-validation frames:" << extra << ';';
    throw ValidationError(os.str());
  }
  if (val.empty()) throw ValidationError("validation split is empty");

  std::map<std::uint64_t, std::string> pred_file;
  for (const auto& e : preds.entries) pred_file[e.frame_id] = e.file;

  struct Loaded {
    BevLabel label;
    BevMask sup;
    BevMask hfov;
    PredictionMap pred;
    double hfov_deg = 0.0;
  };
  std::vector<Loaded> loaded(val.size());
  parallel_for(val.size(), worker_count(), [&](std::size_t i) {
    FrameRecord r = read_frame(ds.dir / val[i].file);
    PredictionRecord p = read_prediction(predictions_dir / pred_file.at(val[i].frame_id));
    if (!(p.map.grid() == r.grid()))
      throw ValidationError("prediction grid differs for frame " + std::to_string(r.frame_id));
    loaded[i] = {std::move(r.label), std::move(r.sup), std::move(r.hfov), std::move(p.map),
                 r.rd.config().hfov_deg};
  });
  std::vector<EvalFrame> frames;
  for (const auto& l : loaded) frames.push_back({&l.pred, &l.label, &l.sup, &l.hfov});
  EvalReport report = bandwise_report(frames, ds.grid, ds.radar_offset, loaded.front().hfov_deg);
  auto it = preds.meta.find("method");
  report.method = it == preds.meta.end() ? "" : it->second;
  return report;
}

}  // namespace rdbev
