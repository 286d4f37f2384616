#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rdbev/core.hpp"

namespace rdbev {

class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Score/label multiset pooled over masked cells of many frames. Exact mode:
// every cell is kept.
class PooledScores {
 public:
  void add(double score, bool positive) {
    scores_.push_back(score);
    labels_.push_back(positive ? 1 : 0);
    positives_ += positive ? 1 : 0;
  }
  void add(const PredictionMap& pred, const BevMask& occupancy, const BevMask& mask);
  void merge(const PooledScores& other);

  std::size_t size() const { return scores_.size(); }
  std::size_t positives() const { return positives_; }
  std::span<const double> scores() const { return scores_; }
  std::span<const std::uint8_t> labels() const { return labels_; }

 private:
  std::vector<double> scores_;
  std::vector<std::uint8_t> labels_;
  std::size_t positives_ = 0;
};

// Step-integrated AUPRC over cells ranked by descending score. Cells with equal
// scores enter as one group. Throws UndefinedMetric without positives.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);
double average_precision(const PooledScores& pooled);
double average_precision(const PredictionMap& scores, const BevLabel& labels, const BevMask& mask);

struct ThresholdChoice {
  double tau = 0.0;
  double f1 = 0.0;
};

// F1-maximizing threshold among observed scores under the rule score >= tau;
// ties go to the larger tau. Throws UndefinedMetric without positives.
ThresholdChoice select_global_threshold(std::span<const double> scores,
                                        std::span<const std::uint8_t> labels);
ThresholdChoice select_global_threshold(const PooledScores& pooled);

BevMask binarize(const PredictionMap& pred, double tau);

// |pred & gt & mask| / |(pred | gt) & mask|; 1.0 when the union is empty.
double iou_occupied(const BevMask& pred, const BevMask& gt, const BevMask& mask);
// |pred & unknown| / |pred & hfov|; 0.0 when nothing is predicted in the HFOV.
double uhr(const BevMask& pred, const BevMask& unknown, const BevMask& hfov);

// Counters behind pooled IoU / UHR.
struct IouCounts {
  std::size_t intersection = 0;
  std::size_t union_ = 0;
  void add(const BevMask& pred, const BevMask& gt, const BevMask& mask);
  double value() const;
};
struct UhrCounts {
  std::size_t in_unknown = 0;
  std::size_t in_hfov = 0;
  void add(const BevMask& pred, const BevMask& unknown, const BevMask& hfov);
  double value() const;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};
// One point per distinct score (descending threshold), thinned evenly to at
// most max_points while keeping both ends.
std::vector<PrPoint> pr_curve(std::span<const double> scores,
                              std::span<const std::uint8_t> labels,
                              std::size_t max_points = 1000);

// Fixed-bin score histogram for streaming AP; mergeable across workers. Each
// bin acts as one tie group, so the result approximates the exact AP.
class HistogramAp {
 public:
  explicit HistogramAp(std::size_t bins = 4096);
  void add(double score, bool positive);
  void merge(const HistogramAp& other);
  double average_precision() const;

 private:
  std::vector<std::uint64_t> pos_;
  std::vector<std::uint64_t> neg_;
};

struct Band {
  std::string name;
  double range_lo = 0.0, range_hi = 0.0;      // m from the radar origin
  double azimuth_lo = 0.0, azimuth_hi = 0.0;  // |theta| in degrees
  bool closed_hi = false;                     // include the upper bound
};

// Range bands 0-20, 20-40, 40-60 m; azimuth bands |theta| in [0, 15) and
// [15, hfov/2]. The range bands leave azimuth unrestricted and vice versa.
std::vector<Band> standard_bands(double hfov_deg = 64.0);

BevMask band_region(const Band& band, const BevGridSpec& grid,
                    std::pair<double, double> radar_offset);

struct BandMetrics {
  std::string name;
  std::optional<double> ap;  // absent when the band has no positives
  double iou = 0.0;
  double pos_frac = 0.0;
  std::size_t cells = 0;
  std::size_t positives = 0;
  std::vector<PrPoint> pr;
};

struct EvalReport {
  double ap = 0.0;
  double iou_occupied = 0.0;
  double uhr = 0.0;
  double tau = 0.0;
  double f1 = 0.0;
  double pos_frac = 0.0;
  std::size_t frames = 0;
  std::size_t cells = 0;
  std::string method;
  std::vector<PrPoint> pr;
  std::vector<BandMetrics> bands;
};

struct EvalFrame {
  const PredictionMap* pred = nullptr;
  const BevLabel* label = nullptr;
  const BevMask* sup = nullptr;
  const BevMask* hfov = nullptr;
};

// Pools every masked cell over all frames, picks one global tau on the pooled
// set and applies it to every band. Throws UndefinedMetric when the pooled set
// has no positives.
EvalReport bandwise_report(const std::vector<EvalFrame>& frames, const BevGridSpec& grid,
                           std::pair<double, double> radar_offset, double hfov_deg = 64.0);

// report.txt, summary.txt (flat key=value) and one pr_<band>.csv per band
// (`threshold,precision,recall`).
void write_report(const EvalReport& report, const std::filesystem::path& dir);
std::string format_report(const EvalReport& report);
std::string format_summary(const EvalReport& report);

struct FocalLossParams {
  double gamma = 2.0;
  double alpha = 0.25;
};

// Mean of -alpha_t (1 - p_t)^gamma log(p_t) over masked cells; unmasked cells
// contribute nothing. Throws std::invalid_argument on an empty mask.
double masked_focal_loss(std::span<const double> logits, std::span<const std::uint8_t> labels,
                         std::span<const std::uint8_t> mask, const FocalLossParams& params = {});
// d loss / d logit, zero outside the mask.
std::vector<double> masked_focal_loss_grad(std::span<const double> logits,
                                           std::span<const std::uint8_t> labels,
                                           std::span<const std::uint8_t> mask,
                                           const FocalLossParams& params = {});

}  // namespace rdbev
