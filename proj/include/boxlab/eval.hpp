#pragma once

#include <string>
#include <vector>

#include "boxlab/box.hpp"

namespace boxlab {

struct NoGroundTruth : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroDuration : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct GroundTruth {
  std::string image_id;
  int class_id;
  Box box;
};

struct Detection {
  std::string image_id;
  int class_id;
  double score;  // in [0, 1]
  Box box;
};

struct DetectionFlag {
  int det_index;  // index into the input detection list
  double score;
  bool tp;
};

/// Result of greedy matching at a fixed IoU threshold. Flags are ordered by
/// descending score, ties broken by input order; tp_count + fn_count equals
/// the number of ground truths.
struct MatchOutcome {
  std::vector<DetectionFlag> flags;
  int tp_count = 0;
  int fp_count = 0;
  int fn_count = 0;
};

struct Pr {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Greedy score-ordered matching, independent per (image_id, class_id)
/// group: each detection takes the unmatched ground truth with maximum IoU
/// and counts as TP iff that IoU >= iou_thresh; ground truths are consumed
/// only by TPs.
MatchOutcome match_detections(const std::vector<Detection>& dets,
                              const std::vector<GroundTruth>& gts, double iou_thresh);

/// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R), each 0 when its
/// denominator is 0.
Pr precision_recall_f1(const MatchOutcome& outcome);
Pr pr_from_counts(int tp, int fp, int fn);

enum class ApInterp { points101, points11 };

/// Area under the interpolated precision-recall curve for one class.
/// Precision is made monotone non-increasing in recall, then sampled at 101
/// (default) or 11 evenly spaced recall levels.
double average_precision(const std::vector<Detection>& dets,
                         const std::vector<GroundTruth>& gts, int class_id, double iou_thresh,
                         ApInterp interp = ApInterp::points101);

struct MeanApResult {
  std::vector<double> per_threshold_pct;  // one mAP (in percent) per threshold
  double averaged_pct = 0.0;
};

/// mAP per threshold = mean per-class AP over classes with at least one
/// ground truth (all classes when include_zero_gt_classes). Throws
/// NoGroundTruth when gts is empty.
MeanApResult mean_ap(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                     const std::vector<double>& thresholds,
                     ApInterp interp = ApInterp::points101,
                     bool include_zero_gt_classes = false);

/// The mAP@.5:.95 preset: thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> map_5095_thresholds();

/// Greedy non-maximum suppression per (image_id, class_id) group: keep the
/// highest-score remaining detection, discard others of the group with
/// IoU >= iou_thresh against it. Output sorted by descending score.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh);

/// 1000 / (pre_ms + infer_ms + nms_ms). Throws ZeroDuration when the sum
/// is zero.
double fps(double pre_ms, double infer_ms, double nms_ms);

struct PrPoint {
  double recall;
  double precision;
};

struct ClassMetrics {
  int class_id = 0;
  Pr operating;      // at score >= conf_thresh, matched at iou_thresh
  double ap50 = 0.0;    // fraction in [0, 1]
  double ap5095 = 0.0;  // fraction, mean over the 0.50..0.95 preset
  double max_f1 = 0.0;  // best F1 along the score-ranked curve at IoU 0.5
  std::vector<PrPoint> pr_curve;  // rank-by-rank samples at IoU 0.5
};

struct EvalConfig {
  double iou_thresh = 0.5;   // matching threshold for the operating P/R/F1
  double conf_thresh = 0.25; // score threshold for the operating P/R/F1
  ApInterp interp = ApInterp::points101;
  bool include_zero_gt_classes = false;
};

struct EvalReport {
  std::vector<ClassMetrics> per_class;  // ascending class_id
  Pr aggregate;                         // macro average over reported classes
  double aggregate_max_f1 = 0.0;        // max F1 on the pooled curve at IoU 0.5
  double map_50_pct = 0.0;
  double map_50_95_pct = 0.0;
};

/// Full detection scoring pass. Throws NoGroundTruth when gts is empty.
EvalReport evaluate(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                    const EvalConfig& cfg = {});

}  // namespace boxlab
