#include "rdbev/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

namespace rdbev {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

// Grid dimension along one axis; tolerant to the representation error of
// extents like 60 / 0.4.
int cells_along(double lo, double hi, double res) {
  return static_cast<int>(std::ceil((hi - lo) / res - 1e-9));
}

}  // namespace

RadarConfig RadarConfig::standard() {
  RadarConfig cfg;
  const double half_lambda = cfg.wavelength() / 2.0;
  for (int j = 0; j < cfg.num_rx; ++j) cfg.rx_positions.push_back(j * half_lambda);
  for (int k = 0; k < cfg.num_tx; ++k)
    cfg.tx_positions.push_back(k * cfg.num_rx * half_lambda);
  std::vector<int> all_tx(cfg.num_tx);
  for (int k = 0; k < cfg.num_tx; ++k) all_tx[k] = k;
  cfg.chirp_tx_sets = {{0}, all_tx};
  return cfg;
}

void RadarConfig::validate() const {
  if (num_range_bins <= 0 || num_doppler_bins <= 0 || num_rx <= 0 || num_tx <= 0)
    throw ConfigError("radar dimensions must be positive");
  if (!(carrier_freq > 0.0)) throw ConfigError("carrier frequency must be positive");
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0))
    throw ConfigError("hfov must lie in (0, 180) degrees");
  if (!(range_resolution > 0.0) || !(max_unambiguous_speed > 0.0) || !(max_range > 0.0))
    throw ConfigError("range/speed parameters must be positive");
  if (static_cast<int>(tx_positions.size()) != num_tx ||
      static_cast<int>(rx_positions.size()) != num_rx)
    throw ConfigError("antenna position count does not match num_tx/num_rx");
  if (chirp_tx_sets.empty()) throw ConfigError("no chirp types configured");
  for (const auto& set : chirp_tx_sets) {
    if (set.empty()) throw ConfigError("empty chirp tx set");
    for (int k : set)
      if (k < 0 || k >= num_tx) throw ConfigError("chirp tx index out of range");
  }
}

std::string RadarConfig::serialize() const {
  std::ostringstream os;
  os << "carrier_freq=" << format_double(carrier_freq) << " num_tx=" << num_tx
     << " num_rx=" << num_rx << " tx_positions=" << join_doubles(tx_positions)
     << " rx_positions=" << join_doubles(rx_positions)
     << " hfov_deg=" << format_double(hfov_deg)
     << " max_range=" << format_double(max_range)
     << " num_range_bins=" << num_range_bins
     << " range_resolution=" << format_double(range_resolution)
     << " num_doppler_bins=" << num_doppler_bins
     << " max_unambiguous_speed=" << format_double(max_unambiguous_speed)
     << " chirp_tx_sets=";
  for (std::size_t c = 0; c < chirp_tx_sets.size(); ++c) {
    if (c) os << '/';
    for (std::size_t i = 0; i < chirp_tx_sets[c].size(); ++i) {
      if (i) os << ',';
      os << chirp_tx_sets[c][i];
    }
  }
  os << " snr_db=" << format_double(snr_db);
  return os.str();
}

RadarConfig RadarConfig::parse(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("bad radar config token: " + tok);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(std::string("radar config missing ") + key);
    return it->second;
  };
  RadarConfig cfg;
  try {
    cfg.carrier_freq = std::stod(need("carrier_freq"));
    cfg.num_tx = std::stoi(need("num_tx"));
    cfg.num_rx = std::stoi(need("num_rx"));
    cfg.tx_positions = split_doubles(need("tx_positions"));
    cfg.rx_positions = split_doubles(need("rx_positions"));
    cfg.hfov_deg = std::stod(need("hfov_deg"));
    cfg.max_range = std::stod(need("max_range"));
    cfg.num_range_bins = std::stoi(need("num_range_bins"));
    cfg.range_resolution = std::stod(need("range_resolution"));
    cfg.num_doppler_bins = std::stoi(need("num_doppler_bins"));
    cfg.max_unambiguous_speed = std::stod(need("max_unambiguous_speed"));
    cfg.snr_db = std::stod(need("snr_db"));
    std::stringstream sets(need("chirp_tx_sets"));
    std::string set;
    while (std::getline(sets, set, '/')) {
      std::vector<int> ids;
      for (double v : split_doubles(set)) ids.push_back(static_cast<int>(v));
      cfg.chirp_tx_sets.push_back(std::move(ids));
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("unparseable radar config value");
  } catch (const std::out_of_range&) {
    throw ConfigError("radar config value out of range");
  }
  cfg.validate();
  return cfg;
}

std::string RadarConfig::digest() const { return fnv1a_hex(serialize()); }

bool operator==(const RadarConfig& a, const RadarConfig& b) {
  return a.serialize() == b.serialize();
}

BevGridSpec BevGridSpec::with_resolution(double res) {
  BevGridSpec g;
  g.resolution = res;
  g.validate();
  return g;
}

int BevGridSpec::rows() const { return cells_along(x_min, x_max, resolution); }
int BevGridSpec::cols() const { return cells_along(y_min, y_max, resolution); }

void BevGridSpec::validate() const {
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be positive");
  if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("empty grid extent");
}

std::optional<CellIndex> world_to_cell(double x, double y, const BevGridSpec& grid) {
  if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
  const double fx = std::floor((x - grid.x_min) / grid.resolution);
  const double fy = std::floor((y - grid.y_min) / grid.resolution);
  if (fx < 0.0 || fy < 0.0 || fx >= grid.rows() || fy >= grid.cols())
    return std::nullopt;
  return CellIndex{static_cast<int>(fx), static_cast<int>(fy)};
}

std::size_t BevMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

void BevMask::require_same_grid(const BevMask& o) const {
  if (!(grid_ == o.grid_) || bits_.size() != o.bits_.size())
    throw GridMismatch("mask grids differ");
}

BevMask BevMask::operator&(const BevMask& o) const {
  require_same_grid(o);
  BevMask out(grid_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & o.bits_[i];
  return out;
}

BevMask BevMask::operator|(const BevMask& o) const {
  require_same_grid(o);
  BevMask out(grid_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] | o.bits_[i];
  return out;
}

BevMask BevMask::operator~() const {
  BevMask out(grid_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] ? 0 : 1;
  return out;
}

bool BevLabel::consistent() const {
  if (!(occupancy.grid() == observable.grid())) return false;
  for (std::size_t i = 0; i < occupancy.size(); ++i)
    if (occupancy[i] && !observable[i]) return false;
  return true;
}

void Scene::validate() const {
  for (const auto& s : scatterers) {
    if (!(s.radius > 0.0)) throw std::invalid_argument("scatterer radius must be > 0");
    if (!(s.reflectivity > 0.0))
      throw std::invalid_argument("scatterer reflectivity must be > 0");
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.height) ||
        !std::isfinite(s.vx) || !std::isfinite(s.vy))
      throw std::invalid_argument("scatterer fields must be finite");
  }
}

Scene parse_scene(const std::string& text) {
  Scene scene;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Scatterer s;
    if (!(ls >> s.x >> s.y >> s.height >> s.radius >> s.reflectivity >> s.vx >> s.vy))
      throw std::invalid_argument("scene line " + std::to_string(lineno) +
                                  ": expected `x y height radius reflectivity vx vy`");
    std::string extra;
    if (ls >> extra)
      throw std::invalid_argument("scene line " + std::to_string(lineno) +
                                  ": trailing fields");
    scene.scatterers.push_back(s);
  }
  scene.validate();
  return scene;
}

std::string format_scene(const Scene& scene) {
  std::ostringstream os;
  os << "# x y height radius reflectivity vx vy\n";
  for (const auto& s : scene.scatterers) {
    os << format_double(s.x) << ' ' << format_double(s.y) << ' '
       << format_double(s.height) << ' ' << format_double(s.radius) << ' '
       << format_double(s.reflectivity) << ' ' << format_double(s.vx) << ' '
       << format_double(s.vy) << '\n';
  }
  return os.str();
}

RdFrame::RdFrame(RadarConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto s = shape();
  data_.assign(s[0] * s[1] * s[2] * s[3], std::complex<float>(0.0F, 0.0F));
}

std::array<std::size_t, 4> RdFrame::shape() const {
  return {static_cast<std::size_t>(chirps()), static_cast<std::size_t>(rx()),
          static_cast<std::size_t>(ranges()), static_cast<std::size_t>(dopplers())};
}

bool RdFrame::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const std::complex<float>& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

PredictionMap::PredictionMap(const BevGridSpec& grid, std::vector<float> probs)
    : grid_(grid), probs_(std::move(probs)) {
  if (probs_.size() != grid_.num_cells())
    throw GridMismatch("prediction size does not match grid");
}

void PredictionMap::validate() const {
  for (float v : probs_)
    if (!(v >= 0.0F && v <= 1.0F))
      throw std::invalid_argument("prediction value outside [0, 1]");
}

void FrameRecord::validate() const {
  const BevGridSpec& g = grid();
  if (!(label.occupancy.grid() == g) || !(label.observable.grid() == g) ||
      !(sup.grid() == g))
    throw GridMismatch("record masks use different grids");
  if (prediction && !(prediction->grid() == g))
    throw GridMismatch("prediction grid differs from record grid");
  if (!label.consistent())
    throw std::invalid_argument("occupied cell outside observable region");
  if (!(sup == (hfov & label.observable)))
    throw std::invalid_argument("supervision mask != hfov AND observable");
  if (!rd.all_finite()) throw std::invalid_argument("non-finite RD entry");
  if (prediction) prediction->validate();
}

BevMask hfov_mask(const BevGridSpec& grid, std::pair<double, double> radar_offset,
                  double hfov_deg, double max_range) {
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0))
    throw ConfigError("hfov must lie in (0, 180) degrees");
  BevMask mask(grid);
  const double half = deg2rad(hfov_deg / 2.0);
  for (int i = 0; i < grid.rows(); ++i) {
    for (int j = 0; j < grid.cols(); ++j) {
      auto [cx, cy] = grid.cell_center(i, j);
      const double dx = cx - radar_offset.first;
      const double dy = cy - radar_offset.second;
      if (std::abs(std::atan2(dy, dx)) <= half && std::hypot(dx, dy) <= max_range)
        mask.set(i, j);
    }
  }
  return mask;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace rdbev
