// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rdbev/pipeline.hpp"
#include "rdbev/supervision.hpp"

#ifndef _WIN32
#include <sys/wait.h>
#endif

using namespace rdbev;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-30s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t differing(const BevMask& a, const BevMask& b) { return ((a & ~b) | (~a & b)).count(); }

const fs::path kWork = fs::temp_directory_path() / "rdbev_acceptance";

void oracle_localization() {
  const auto t0 = Clock::now();
  const RadarConfig radar = RadarConfig::standard();
  PropagationParams prop;
  prop.add_noise = false;
  int hits = 0;
  double worst_angle = 0.0, worst_range = 0.0;
  const int n = 70;
  for (int k = 0; k < n; ++k) {
    const double theta = -30.0 + 60.0 * k / (n - 1);
    const double r = 5.0 + 50.0 * ((k * 37) % n) / (n - 1);
    Scatterer s;
    s.x = r * std::cos(deg2rad(theta));
    s.y = r * std::sin(deg2rad(theta));
    Scene scene;
    scene.scatterers = {s};
    const auto pk = beamform_oracle(simulate_rd(scene, radar, prop), Chirp::A).peak();
    const double true_angle_bin = (std::sin(deg2rad(theta)) + 1.0) * 64 / 2.0;
    const double true_range_bin = r / radar.range_resolution;
    const double da = std::abs(pk.angle_bin - true_angle_bin);
    const double dr = std::abs(pk.range_bin - true_range_bin);
    worst_angle = std::max(worst_angle, da);
    worst_range = std::max(worst_range, dr);
    hits += (da <= 1.0 && dr <= 1.0) ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  report(hits == n && secs < 10.0, "oracle_localization",
         fmt("%.0f/70 within 1 bin; worst angle %.3f, range %.3f bins; %.2f s", hits, worst_angle,
             worst_range, secs));
}

void metric_exactness() {
  BevGridSpec g;
  g.resolution = 1.0;
  g.x_max = 8.0;
  g.y_min = 0.0;
  g.y_max = 8.0;
  std::mt19937_64 rng(20240);
  double dev_ap = 0.0, dev_tau = 0.0, dev_f1 = 0.0, dev_iou = 0.0, dev_uhr = 0.0;
  int instances = 0;
  while (instances < 1000) {
    const std::size_t cells = 1 + rng() % 64;
    // Scores on a coarse lattice so ties are frequent.
    const int levels = 2 + static_cast<int>(rng() % 12);
    std::vector<std::uint8_t> hf(64, 0), unk(64, 0), sup(64, 0), occ(64, 0);
    PredictionMap pred(g, 0.0F);
    for (std::size_t i = 0; i < cells; ++i) {
      const std::size_t c = rng() % 64;
      hf[c] = 1;
      unk[c] = rng() % 4 == 0;
      sup[c] = !unk[c];
      occ[c] = sup[c] && rng() % 3 == 0;
      pred.values()[c] = static_cast<float>(rng() % levels) / static_cast<float>(levels - 1);
    }
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (std::size_t i = 0; i < 64; ++i)
      if (sup[i]) {
        s.push_back(pred.values()[i]);
        y.push_back(occ[i]);
      }
    if (std::count(y.begin(), y.end(), 1) == 0) continue;
    ++instances;
    auto to_mask = [&](const std::vector<std::uint8_t>& v) {
      BevMask m(g);
      for (std::size_t i = 0; i < v.size(); ++i) m.set_flat(i, v[i] != 0);
      return m;
    };
    const BevLabel label{to_mask(occ), to_mask(sup)};
    const BevMask M = to_mask(sup);
    dev_ap = std::max(dev_ap, std::abs(average_precision(pred, label, M) - oracle::ap(s, y)));
    const auto t = select_global_threshold(s, y);
    const auto b = oracle::best_threshold(s, y);
    dev_tau = std::max(dev_tau, std::abs(t.tau - b.tau));
    dev_f1 = std::max(dev_f1, std::abs(t.f1 - b.f1));
    const BevMask bin = binarize(pred, t.tau);
    std::vector<std::uint8_t> pb(64);
    for (std::size_t i = 0; i < 64; ++i) pb[i] = pred.values()[i] >= b.tau;
    dev_iou = std::max(dev_iou, std::abs(iou_occupied(bin, label.occupancy, M) -
                                         oracle::iou(pb, occ, sup)));
    dev_uhr = std::max(dev_uhr, std::abs(uhr(bin, to_mask(unk), to_mask(hf)) -
                                         oracle::uhr(pb, unk, hf)));
  }
  const double worst = std::max({dev_ap, dev_tau, dev_f1, dev_iou, dev_uhr});
  report(worst <= 1e-12, "metric_exactness",
         fmt("1000 instances; max dev AP %.1e, tau %.1e, IoU %.1e, UHR %.1e", dev_ap, dev_tau,
             dev_iou, dev_uhr));
}

// AP of the train-estimated prior, pooled over the train split.
void constant_predictor(const fs::path& dataset, const std::string& label) {
  const DatasetInfo ds = open_dataset(dataset);
  std::vector<FrameRecord> train;
  for (const auto& e : ds.manifest.split(Split::Train)) {
    FrameRecord r = read_frame(dataset / e.file);
    r.rd = RdFrame();
    train.push_back(std::move(r));
  }
  std::vector<const FrameRecord*> ptrs;
  for (const auto& r : train) ptrs.push_back(&r);
  const double pos_frac = estimate_pos_frac(ptrs);
  PooledScores pooled;
  for (const auto& r : train) {
    const PredictionMap p = baseline_prediction(BaselineMethod::Prior, r, ds.radar_offset, pos_frac);
    pooled.add(p, r.label.occupancy, r.sup);
  }
  const double ap_train = average_precision(pooled);
  // The written baseline evaluated on val sits at the val prevalence.
  const fs::path preds = kWork / ("prior_" + label);
  run_baseline(dataset, BaselineMethod::Prior, preds);
  const EvalReport val = run_evaluation(dataset, preds);
  const double d_train = std::abs(ap_train - pos_frac);
  const double d_val = std::abs(val.ap - val.pos_frac);
  report(d_train <= 1e-12 && d_val <= 1e-12, "constant_predictor[" + label + "]",
         fmt("train AP %.12f vs pos_frac %.12f (|d| %.1e); val AP - val pos_frac %.1e", ap_train,
             pos_frac, d_train, d_val));
}

void mask_invariants(const GeneratorConfig& base, int frames) {
  GeneratorConfig cfg = base;
  cfg.store_points = true;
  const BevGridSpec g = cfg.grid();
  const double res = cfg.observability_azimuth_res;
  // Field of view by a tangent test rather than atan2.
  BevMask fov(g);
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) {
      auto [x, y] = g.cell_center(i, j);
      if (x > 0 && std::abs(y) <= x * std::tan(deg2rad(32.0)) && x * x + y * y <= 65.0 * 65.0)
        fov.set(i, j);
    }
  std::size_t occ_unobs = 0, partition = 0, ray_gaps = 0, rays = 0, fov_diff = 0;
  for (int f = 0; f < frames; ++f) {
    const FrameRecord r = make_frame(cfg, static_cast<std::uint64_t>(f));
    occ_unobs += (r.label.occupancy & ~r.label.observable).count();
    const BevMask unknown = r.hfov & ~r.label.observable;
    partition += (r.sup & unknown).count() + differing(r.sup | unknown, r.hfov);
    fov_diff += differing(r.hfov, fov);
    // Per azimuth bin: endpoint is the nearest obstacle, else the farthest return.
    std::map<long, std::pair<double, double>> end;  // bin -> (nearest obstacle, farthest any)
    for (const auto& p : r.points->points) {
      const double az = rad2deg(std::atan2(p.y, p.x));
      long k = static_cast<long>(std::floor(az / res + 0.5));
      if (k >= static_cast<long>(std::lround(180.0 / res))) k -= std::lround(360.0 / res);
      auto it = end.try_emplace(k, std::make_pair(1e300, -1.0)).first;
      const double d = std::hypot(p.x, p.y);
      if (p.z > static_cast<float>(cfg.ground_z_min)) it->second.first = std::min(it->second.first, d);
      it->second.second = std::max(it->second.second, d);
    }
    for (const auto& [k, e] : end) {
      const double stop = e.first < 1e300 ? e.first : e.second;
      const double a = deg2rad(k * res);
      ++rays;
      // Monotone along the ray: every grid cell the ray passes before its
      // endpoint is observable. Sampled far finer than the cell size.
      for (double t = 0.0; t < stop; t += g.resolution / 50.0) {
        const auto c = world_to_cell(t * std::cos(a), t * std::sin(a), g);
        if (c && !r.label.observable.get(c->row, c->col)) {
          ++ray_gaps;
          break;
        }
      }
    }
  }
  report(occ_unobs == 0 && partition == 0 && ray_gaps == 0 && fov_diff == 0, "mask_invariants",
         fmt("%.0f frames; occupied-unobserved %.0f, partition %.0f, ray gaps %.0f", frames,
             static_cast<double>(occ_unobs), static_cast<double>(partition),
             static_cast<double>(ray_gaps)) +
             " over " + std::to_string(rays) + " rays, hfov mismatches " + std::to_string(fov_diff));
}

EvalReport baseline_ap(const fs::path& dataset, BaselineMethod m) {
  const fs::path out = kWork / (std::string("pred_") + baseline_method_name(m));
  run_baseline(dataset, m, out);
  return run_evaluation(dataset, out);
}

void baseline_ordering(const fs::path& dataset) {
  const EvalReport prior = baseline_ap(dataset, BaselineMethod::Prior);
  const EvalReport re = baseline_ap(dataset, BaselineMethod::RangeEnergy);
  const EvalReport bf = baseline_ap(dataset, BaselineMethod::Beamform);
  const bool ok = re.ap < bf.ap && re.ap - re.pos_frac < 0.05;
  report(ok, "baseline_ordering",
         fmt("AP prior %.4f, range_energy %.4f, beamform %.4f; pos_frac %.4f", prior.ap, re.ap,
             bf.ap, re.pos_frac));
}

// Exact zero variance along the collapsed axis, and chance-level range peaks
// of the beamformer on range-collapsed frames.
void ablation_contracts(const fs::path& dataset, int frames) {
  const DatasetInfo ds = open_dataset(dataset);
  std::size_t violations = 0;
  constexpr int kGroups = 5;
  std::vector<int> counts(kGroups, 0);
  int used = 0;
  for (const auto& e : ds.manifest.entries) {
    if (used == frames) break;
    const FrameRecord r = read_frame(dataset / e.file);
    const RdFrame cr = apply_ablation(r.rd, AblationTransform::CollapseRange);
    const RdFrame cd = apply_ablation(r.rd, AblationTransform::CollapseDoppler);
    for (int c = 0; c < r.rd.chirps(); ++c)
      for (int j = 0; j < r.rd.rx(); ++j)
        for (int rr = 0; rr < r.rd.ranges(); ++rr)
          for (int d = 0; d < r.rd.dopplers(); ++d) {
            violations += cr.at(c, j, rr, d) != cr.at(c, j, 0, d);
            violations += cd.at(c, j, rr, d) != cd.at(c, j, rr, 0);
          }
    const auto pk = beamform_oracle(cr, Chirp::A).peak_random_tie(derive_seed(99, e.frame_id));
    counts[pk.range_bin * kGroups / r.rd.ranges()] += 1;
    ++used;
  }
  const double expected = static_cast<double>(used) / kGroups;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Survival function of chi-square with 4 degrees of freedom.
  const double p = std::exp(-chi2 / 2.0) * (1.0 + chi2 / 2.0);
  std::string hist;
  for (int c : counts) hist += std::to_string(c) + ' ';
  report(violations == 0 && p > 0.01 && used >= 50, "ablation_contracts",
         fmt("%.0f frames; collapse violations %.0f; range-peak chi2 %.2f (4 dof) p=%.3f", used,
             static_cast<double>(violations), chi2, p) +
             "; groups " + hist);
}

void focal_loss() {
  const std::vector<double> z{0.0};
  const std::vector<std::uint8_t> one{1};
  const double hand = masked_focal_loss(z, one, one, {2.0, 0.25});
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd(0.0, 4.0);
  std::vector<double> logits(5000);
  std::vector<std::uint8_t> labels(5000), mask(5000);
  double bce = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] = nd(rng);
    labels[i] = rng() % 7 == 0;
    mask[i] = rng() % 3 != 0;
    if (!mask[i]) continue;
    const double p = 1.0 / (1.0 + std::exp(-logits[i]));
    bce += labels[i] ? -std::log(p) : -std::log(1.0 - p);
    ++n;
  }
  const double d_bce = std::abs(masked_focal_loss(logits, labels, mask, {0.0, 0.5}) - 0.5 * bce / n);
  const double d_hand = std::abs(hand - 0.043321);
  report(d_bce <= 1e-6 && d_hand <= 1e-6, "focal_loss",
         fmt("gamma=0 vs 0.5*BCE |d| %.1e; hand value %.6f (|d| %.1e)", d_bce, hand, d_hand));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RDBEV_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism() {
  const fs::path a = kWork / "det_a", b = kWork / "det_b";
  const std::string common = " --frames 200 --seed 7";
  const int ra = run_cli("generate --out " + a.string() + common);
  const int rb = run_cli("generate --out " + b.string() + common);
  std::size_t files = 0, differ = 0;
  if (ra == 0 && rb == 0)
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      differ += slurp(e.path()) != slurp(b / e.path().filename());
    }
  report(ra == 0 && rb == 0 && files == 202 && differ == 0, "determinism",
         "generate --frames 200 --seed 7 twice: " + std::to_string(files) + " files, " +
             std::to_string(differ) + " differ");
}

}  // namespace

int main() {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  const auto t0 = Clock::now();

  oracle_localization();
  metric_exactness();
  focal_loss();

  GeneratorConfig suite;
  suite.frames = 1000;
  suite.seed = 2024;
  suite.snr_db = 20.0;
  const fs::path suite_dir = kWork / "suite";
  generate_dataset(suite, suite_dir);
  std::printf("      generated %llu-frame suite in %.1f s\n",
              static_cast<unsigned long long>(suite.frames), seconds_since(t0));

  constant_predictor(suite_dir, "suite");
  GeneratorConfig other;
  other.frames = 40;
  other.seed = 5;
  other.resolution = 0.4;
  generate_dataset(other, kWork / "small_04");
  constant_predictor(kWork / "small_04", "0.4m");

  mask_invariants(suite, 500);
  baseline_ordering(suite_dir);
  ablation_contracts(suite_dir, 100);
  determinism();

  std::printf("      total %.1f s, %d failing\n", seconds_since(t0), failures);
  fs::remove_all(kWork);
  return failures == 0 ? 0 : 1;
}
