#include "rdbev/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rdbev {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("scores and labels differ in length");
}

// Indices sorted by descending score.
std::vector<std::size_t> rank_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

struct Group {
  double score;
  std::size_t positives;
  std::size_t count;
};

std::vector<Group> tie_groups(std::span<const double> scores,
                              std::span<const std::uint8_t> labels) {
  std::vector<Group> groups;
  for (std::size_t i : rank_desc(scores)) {
    if (groups.empty() || groups.back().score != scores[i]) groups.push_back({scores[i], 0, 0});
    groups.back().positives += labels[i] ? 1 : 0;
    groups.back().count += 1;
  }
  return groups;
}

std::size_t count_positive(std::span<const std::uint8_t> labels) {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_loss_inputs(std::span<const double> logits, std::span<const std::uint8_t> labels,
                       std::span<const std::uint8_t> mask, const FocalLossParams& params) {
  if (logits.size() != labels.size() || logits.size() != mask.size())
    throw std::invalid_argument("logits, labels and mask differ in length");
  if (!(params.gamma >= 0.0) || !(params.alpha >= 0.0 && params.alpha <= 1.0))
    throw std::invalid_argument("focal loss needs gamma >= 0 and alpha in [0, 1]");
}

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string fmt_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void PooledScores::add(const PredictionMap& pred, const BevMask& occupancy, const BevMask& mask) {
  if (!(pred.grid() == mask.grid()) || !(occupancy.grid() == mask.grid()))
    throw GridMismatch("prediction, labels and mask are on different grids");
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) add(pred[i], occupancy[i]);
}

void PooledScores::merge(const PooledScores& other) {
  scores_.insert(scores_.end(), other.scores_.begin(), other.scores_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  positives_ += other.positives_;
}

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require_same_length(scores.size(), labels.size());
  const std::size_t total_pos = count_positive(labels);
  if (total_pos == 0) throw UndefinedMetric("undefined AP: no positive cells");
  const double P = static_cast<double>(total_pos);
  double ap = 0.0;
  std::size_t tp = 0, n = 0;
  for (const Group& g : tie_groups(scores, labels)) {
    tp += g.positives;
    n += g.count;
    if (g.positives)
      ap += (static_cast<double>(g.positives) / P) *
            (static_cast<double>(tp) / static_cast<double>(n));
  }
  return ap;
}

double average_precision(const PooledScores& pooled) {
  return average_precision(pooled.scores(), pooled.labels());
}

double average_precision(const PredictionMap& scores, const BevLabel& labels, const BevMask& mask) {
  PooledScores pooled;
  pooled.add(scores, labels.occupancy, mask);
  return average_precision(pooled);
}

ThresholdChoice select_global_threshold(std::span<const double> scores,
                                        std::span<const std::uint8_t> labels) {
  require_same_length(scores.size(), labels.size());
  const std::size_t total_pos = count_positive(labels);
  if (total_pos == 0) throw UndefinedMetric("undefined threshold: no positive cells");
  ThresholdChoice best{0.0, -1.0};
  std::size_t tp = 0, n = 0;
  // Groups arrive with descending tau; only a strictly better F1 moves tau down.
  for (const Group& g : tie_groups(scores, labels)) {
    tp += g.positives;
    n += g.count;
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(n + total_pos);
    if (f1 > best.f1) best = {g.score, f1};
  }
  return best;
}

ThresholdChoice select_global_threshold(const PooledScores& pooled) {
  return select_global_threshold(pooled.scores(), pooled.labels());
}

BevMask binarize(const PredictionMap& pred, double tau) {
  BevMask out(pred.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out.set_flat(i, pred[i] >= tau);
  return out;
}

void IouCounts::add(const BevMask& pred, const BevMask& gt, const BevMask& mask) {
  intersection += (pred & gt & mask).count();
  union_ += ((pred | gt) & mask).count();
}

double IouCounts::value() const {
  return union_ == 0 ? 1.0 : static_cast<double>(intersection) / static_cast<double>(union_);
}

void UhrCounts::add(const BevMask& pred, const BevMask& unknown, const BevMask& hfov) {
  in_unknown += (pred & unknown).count();
  in_hfov += (pred & hfov).count();
}

double UhrCounts::value() const {
  return in_hfov == 0 ? 0.0 : static_cast<double>(in_unknown) / static_cast<double>(in_hfov);
}

double iou_occupied(const BevMask& pred, const BevMask& gt, const BevMask& mask) {
  IouCounts c;
  c.add(pred, gt, mask);
  return c.value();
}

double uhr(const BevMask& pred, const BevMask& unknown, const BevMask& hfov) {
  UhrCounts c;
  c.add(pred, unknown, hfov);
  return c.value();
}

std::vector<PrPoint> pr_curve(std::span<const double> scores,
                              std::span<const std::uint8_t> labels, std::size_t max_points) {
  require_same_length(scores.size(), labels.size());
  const std::size_t total_pos = count_positive(labels);
  if (total_pos == 0) return {};
  std::vector<PrPoint> all;
  std::size_t tp = 0, n = 0;
  for (const Group& g : tie_groups(scores, labels)) {
    tp += g.positives;
    n += g.count;
    all.push_back({g.score, static_cast<double>(tp) / static_cast<double>(n),
                   static_cast<double>(tp) / static_cast<double>(total_pos)});
  }
  if (max_points < 2 || all.size() <= max_points) return all;
  std::vector<PrPoint> thinned;
  thinned.reserve(max_points);
  for (std::size_t k = 0; k < max_points; ++k) {
    const std::size_t i = k * (all.size() - 1) / (max_points - 1);
    thinned.push_back(all[i]);
  }
  return thinned;
}

HistogramAp::HistogramAp(std::size_t bins) : pos_(bins, 0), neg_(bins, 0) {
  if (bins < 2) throw std::invalid_argument("histogram needs at least 2 bins");
}

void HistogramAp::add(double score, bool positive) {
  const double s = std::clamp(score, 0.0, 1.0);
  const std::size_t bins = pos_.size();
  const std::size_t b = std::min(bins - 1, static_cast<std::size_t>(s * static_cast<double>(bins)));
  (positive ? pos_ : neg_)[b] += 1;
}

void HistogramAp::merge(const HistogramAp& other) {
  if (other.pos_.size() != pos_.size()) throw std::invalid_argument("histogram bin counts differ");
  for (std::size_t b = 0; b < pos_.size(); ++b) {
    pos_[b] += other.pos_[b];
    neg_[b] += other.neg_[b];
  }
}

double HistogramAp::average_precision() const {
  const std::uint64_t total_pos = std::accumulate(pos_.begin(), pos_.end(), std::uint64_t{0});
  if (total_pos == 0) throw UndefinedMetric("undefined AP: no positive cells");
  double ap = 0.0;
  std::uint64_t tp = 0, n = 0;
  for (std::size_t b = pos_.size(); b-- > 0;) {
    tp += pos_[b];
    n += pos_[b] + neg_[b];
    if (pos_[b])
      ap += (static_cast<double>(pos_[b]) / static_cast<double>(total_pos)) *
            (static_cast<double>(tp) / static_cast<double>(n));
  }
  return ap;
}

std::vector<Band> standard_bands(double hfov_deg) {
  constexpr double kAny = 1e9;
  return {
      {"range_0_20", 0.0, 20.0, 0.0, kAny, false},
      {"range_20_40", 20.0, 40.0, 0.0, kAny, false},
      {"range_40_60", 40.0, 60.0, 0.0, kAny, true},
      {"azimuth_0_15", 0.0, kAny, 0.0, 15.0, false},
      {"azimuth_15_" + std::to_string(static_cast<int>(std::lround(hfov_deg / 2.0))), 0.0, kAny,
       15.0, hfov_deg / 2.0, true},
  };
}

BevMask band_region(const Band& band, const BevGridSpec& grid,
                    std::pair<double, double> radar_offset) {
  BevMask out(grid);
  auto inside = [&](double v, double lo, double hi) {
    return v >= lo && (band.closed_hi ? v <= hi : v < hi);
  };
  for (int i = 0; i < grid.rows(); ++i)
    for (int j = 0; j < grid.cols(); ++j) {
      auto [cx, cy] = grid.cell_center(i, j);
      const double dx = cx - radar_offset.first;
      const double dy = cy - radar_offset.second;
      const double range = std::hypot(dx, dy);
      const double az = std::abs(rad2deg(std::atan2(dy, dx)));
      if (inside(range, band.range_lo, band.range_hi) &&
          inside(az, band.azimuth_lo, band.azimuth_hi))
        out.set(i, j);
    }
  return out;
}

EvalReport bandwise_report(const std::vector<EvalFrame>& frames, const BevGridSpec& grid,
                           std::pair<double, double> radar_offset, double hfov_deg) {
  EvalReport report;
  report.frames = frames.size();
  PooledScores overall;
  for (const EvalFrame& f : frames) overall.add(*f.pred, f.label->occupancy, *f.sup);
  report.cells = overall.size();
  if (overall.size() > 0)
    report.pos_frac = static_cast<double>(overall.positives()) / static_cast<double>(overall.size());
  report.ap = average_precision(overall);
  const ThresholdChoice tc = select_global_threshold(overall);
  report.tau = tc.tau;
  report.f1 = tc.f1;
  report.pr = pr_curve(overall.scores(), overall.labels());

  IouCounts iou;
  UhrCounts hall;
  std::vector<BevMask> binary;
  binary.reserve(frames.size());
  for (const EvalFrame& f : frames) {
    binary.push_back(binarize(*f.pred, report.tau));
    iou.add(binary.back(), f.label->occupancy, *f.sup);
    hall.add(binary.back(), *f.hfov & ~f.label->observable, *f.hfov);
  }
  report.iou_occupied = iou.value();
  report.uhr = hall.value();

  for (const Band& band : standard_bands(hfov_deg)) {
    const BevMask region = band_region(band, grid, radar_offset);
    PooledScores pooled;
    IouCounts band_iou;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const BevMask mask = *frames[k].sup & region;
      pooled.add(*frames[k].pred, frames[k].label->occupancy, mask);
      band_iou.add(binary[k], frames[k].label->occupancy, mask);
    }
    BandMetrics bm;
    bm.name = band.name;
    bm.cells = pooled.size();
    bm.positives = pooled.positives();
    bm.pos_frac = pooled.size() ? static_cast<double>(pooled.positives()) /
                                      static_cast<double>(pooled.size())
                                : 0.0;
    if (pooled.positives() > 0) {
      bm.ap = average_precision(pooled);
      bm.pr = pr_curve(pooled.scores(), pooled.labels());
    }
    bm.iou = band_iou.value();
    report.bands.push_back(std::move(bm));
  }
  return report;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "BEV occupancy evaluation";
  if (!r.method.empty()) os << " (" << r.method << ")";
  os << "\n"
     << "pooling: cells pooled across all " << r.frames
     << " evaluated frames (not per-frame averaged)\n"
     << "threshold: global tau=" << fmt(r.tau) << " (max F1=" << fmt(r.f1)
     << "), prediction rule score >= tau\n\n"
     << "overall  AP " << fmt(r.ap, 4) << "  IoU " << fmt(r.iou_occupied, 4) << "  UHR "
     << fmt(r.uhr, 4) << "  pos_frac " << fmt(r.pos_frac, 4) << "  cells " << r.cells << "\n\n";
  os << "band             AP      IoU     pos_frac  cells\n";
  for (const auto& b : r.bands) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %-7s %-7s %-9s %zu\n", b.name.c_str(),
                  b.ap ? fmt(*b.ap, 4).c_str() : "n/a", fmt(b.iou, 4).c_str(),
                  fmt(b.pos_frac, 4).c_str(), b.cells);
    os << line;
  }
  return os.str();
}

std::string format_summary(const EvalReport& r) {
  std::ostringstream os;
  os << "method=" << r.method << '\n'
     << "pooling=cells\n"
     << "frames=" << r.frames << '\n'
     << "cells=" << r.cells << '\n'
     << "ap=" << fmt_exact(r.ap) << '\n'
     << "iou=" << fmt_exact(r.iou_occupied) << '\n'
     << "uhr=" << fmt_exact(r.uhr) << '\n'
     << "tau=" << fmt_exact(r.tau) << '\n'
     << "f1=" << fmt_exact(r.f1) << '\n'
     << "pos_frac=" << fmt_exact(r.pos_frac) << '\n';
  for (const auto& b : r.bands) {
    os << b.name << ".ap=" << (b.ap ? fmt_exact(*b.ap) : std::string("absent")) << '\n'
       << b.name << ".iou=" << fmt_exact(b.iou) << '\n'
       << b.name << ".pos_frac=" << fmt_exact(b.pos_frac) << '\n'
       << b.name << ".cells=" << b.cells << '\n';
  }
  return os.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
  };
  put(dir / "report.txt", format_report(report));
  put(dir / "summary.txt", format_summary(report));
  auto csv = [&](const std::string& name, const std::vector<PrPoint>& pr) {
    std::ostringstream os;
    os << "threshold,precision,recall\n";
    for (const auto& p : pr)
      os << fmt_exact(p.threshold) << ',' << fmt_exact(p.precision) << ',' << fmt_exact(p.recall)
         << '\n';
    put(dir / ("pr_" + name + ".csv"), os.str());
  };
  csv("overall", report.pr);
  for (const auto& b : report.bands) csv(b.name, b.pr);
}

double masked_focal_loss(std::span<const double> logits, std::span<const std::uint8_t> labels,
                         std::span<const std::uint8_t> mask, const FocalLossParams& params) {
  check_loss_inputs(logits, labels, mask, params);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    const double x = labels[i] ? logits[i] : -logits[i];  // p_t = sigmoid(x)
    const double alpha_t = labels[i] ? params.alpha : 1.0 - params.alpha;
    const double one_minus_pt = sigmoid(-x);
    sum += -alpha_t * std::pow(one_minus_pt, params.gamma) * log_sigmoid(x);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("focal loss over an empty mask");
  return sum / static_cast<double>(n);
}

std::vector<double> masked_focal_loss_grad(std::span<const double> logits,
                                           std::span<const std::uint8_t> labels,
                                           std::span<const std::uint8_t> mask,
                                           const FocalLossParams& params) {
  check_loss_inputs(logits, labels, mask, params);
  const std::size_t n = static_cast<std::size_t>(
      std::count_if(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; }));
  if (n == 0) throw std::invalid_argument("focal loss over an empty mask");
  std::vector<double> grad(logits.size(), 0.0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    const double sign = labels[i] ? 1.0 : -1.0;
    const double x = sign * logits[i];
    const double alpha_t = labels[i] ? params.alpha : 1.0 - params.alpha;
    const double pt = sigmoid(x);
    const double q = sigmoid(-x);  // 1 - p_t
    // d/dx of -alpha (1-p)^g log p with p = sigmoid(x).
    const double d = alpha_t * std::pow(q, params.gamma) * (params.gamma * pt * log_sigmoid(x) - q);
    grad[i] = sign * d / static_cast<double>(n);
  }
  return grad;
}

}  // namespace rdbev
