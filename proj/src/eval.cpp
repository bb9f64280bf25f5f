#include "boxlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace boxlab {
namespace {

using GroupKey = std::pair<std::string, int>;  // (image_id, class_id)

// Indices of detections/ground truths per group, in input order. std::map
// keeps the merge order lexicographic by image_id then class_id.
struct Groups {
  std::map<GroupKey, std::vector<int>> dets;
  std::map<GroupKey, std::vector<int>> gts;
};

Groups group_inputs(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts) {
  Groups g;
  for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
    g.dets[{dets[i].image_id, dets[i].class_id}].push_back(i);
  }
  for (int i = 0; i < static_cast<int>(gts.size()); ++i) {
    g.gts[{gts[i].image_id, gts[i].class_id}].push_back(i);
  }
  return g;
}

// Score-descending order, input order on ties.
void sort_by_score(std::vector<int>& indices, const std::vector<Detection>& dets) {
  std::stable_sort(indices.begin(), indices.end(),
                   [&](int a, int b) { return dets[a].score > dets[b].score; });
}

void validate_thresh(double iou_thresh) {
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) {
    throw std::invalid_argument("iou threshold must lie in (0, 1]");
  }
}

// PR points in rank order plus the monotone non-increasing precision
// envelope; shared by AP and the report curves.
struct RankedCurve {
  std::vector<double> recall;
  std::vector<double> precision;
  std::vector<double> envelope;
};

RankedCurve ranked_curve(const MatchOutcome& outcome, int gt_total) {
  RankedCurve c;
  int tp = 0, fp = 0;
  for (const auto& f : outcome.flags) {
    f.tp ? ++tp : ++fp;
    c.recall.push_back(gt_total > 0 ? static_cast<double>(tp) / gt_total : 0.0);
    c.precision.push_back(static_cast<double>(tp) / (tp + fp));
  }
  c.envelope = c.precision;
  for (int i = static_cast<int>(c.envelope.size()) - 2; i >= 0; --i) {
    c.envelope[i] = std::max(c.envelope[i], c.envelope[i + 1]);
  }
  return c;
}

double interpolate_ap(const RankedCurve& curve, int levels) {
  if (curve.recall.empty()) return 0.0;
  double sum = 0.0;
  std::size_t idx = 0;
  for (int j = 0; j < levels; ++j) {
    const double level = static_cast<double>(j) / (levels - 1);
    while (idx < curve.recall.size() && curve.recall[idx] < level) ++idx;
    if (idx == curve.recall.size()) break;  // no recall point reaches this level
    sum += curve.envelope[idx];
  }
  return sum / levels;
}

template <typename T>
std::vector<T> filter_class(const std::vector<T>& items, int class_id) {
  std::vector<T> out;
  for (const auto& it : items) {
    if (it.class_id == class_id) out.push_back(it);
  }
  return out;
}

std::vector<int> report_classes(const std::vector<Detection>& dets,
                                const std::vector<GroundTruth>& gts,
                                bool include_zero_gt_classes) {
  std::set<int> ids;
  for (const auto& g : gts) ids.insert(g.class_id);
  if (include_zero_gt_classes) {
    for (const auto& d : dets) ids.insert(d.class_id);
  }
  return {ids.begin(), ids.end()};
}

double max_f1_on_curve(const MatchOutcome& outcome, int gt_total) {
  double best = 0.0;
  int tp = 0, fp = 0;
  for (const auto& f : outcome.flags) {
    f.tp ? ++tp : ++fp;
    best = std::max(best, pr_from_counts(tp, fp, gt_total - tp).f1);
  }
  return best;
}

}  // namespace

MatchOutcome match_detections(const std::vector<Detection>& dets,
                              const std::vector<GroundTruth>& gts, double iou_thresh) {
  validate_thresh(iou_thresh);
  const Groups groups = group_inputs(dets, gts);

  MatchOutcome outcome;
  outcome.flags.reserve(dets.size());

  for (const auto& [key, det_indices] : groups.dets) {
    std::vector<int> order = det_indices;
    sort_by_score(order, dets);

    const auto git = groups.gts.find(key);
    const std::vector<int>* gt_indices = git != groups.gts.end() ? &git->second : nullptr;
    std::vector<bool> taken(gt_indices ? gt_indices->size() : 0, false);

    for (int di : order) {
      int best = -1;
      double best_iou = 0.0;
      if (gt_indices) {
        for (std::size_t j = 0; j < gt_indices->size(); ++j) {
          if (taken[j]) continue;
          const double ov = iou(dets[di].box, gts[(*gt_indices)[j]].box);
          if (ov > best_iou) {  // strict: ties keep the earliest candidate
            best_iou = ov;
            best = static_cast<int>(j);
          }
        }
      }
      const bool is_tp = best >= 0 && best_iou >= iou_thresh;
      if (is_tp) taken[best] = true;
      outcome.flags.push_back({di, dets[di].score, is_tp});
      is_tp ? ++outcome.tp_count : ++outcome.fp_count;
    }
  }

  // Every ground truth not consumed by a TP is a miss.
  outcome.fn_count = static_cast<int>(gts.size()) - outcome.tp_count;

  std::stable_sort(outcome.flags.begin(), outcome.flags.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.det_index < b.det_index;
  });
  return outcome;
}

Pr pr_from_counts(int tp, int fp, int fn) {
  Pr r;
  r.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  r.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

Pr precision_recall_f1(const MatchOutcome& outcome) {
  return pr_from_counts(outcome.tp_count, outcome.fp_count, outcome.fn_count);
}

double average_precision(const std::vector<Detection>& dets,
                         const std::vector<GroundTruth>& gts, int class_id, double iou_thresh,
                         ApInterp interp) {
  const auto dets_c = filter_class(dets, class_id);
  const auto gts_c = filter_class(gts, class_id);
  if (gts_c.empty()) return 0.0;

  const MatchOutcome outcome = match_detections(dets_c, gts_c, iou_thresh);
  const RankedCurve curve = ranked_curve(outcome, static_cast<int>(gts_c.size()));
  return interpolate_ap(curve, interp == ApInterp::points101 ? 101 : 11);
}

MeanApResult mean_ap(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                     const std::vector<double>& thresholds, ApInterp interp,
                     bool include_zero_gt_classes) {
  if (thresholds.empty()) throw std::invalid_argument("thresholds must be nonempty");
  for (double t : thresholds) validate_thresh(t);
  if (gts.empty()) throw NoGroundTruth("no ground truth annotations");

  const std::vector<int> classes = report_classes(dets, gts, include_zero_gt_classes);

  MeanApResult res;
  for (double t : thresholds) {
    double sum = 0.0;
    for (int c : classes) sum += average_precision(dets, gts, c, t, interp);
    res.per_threshold_pct.push_back(100.0 * sum / classes.size());
  }
  double total = 0.0;
  for (double v : res.per_threshold_pct) total += v;
  res.averaged_pct = total / res.per_threshold_pct.size();
  return res;
}

std::vector<double> map_5095_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
  return t;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh) {
  validate_thresh(iou_thresh);
  Groups groups = group_inputs(dets, {});

  std::vector<int> kept;
  for (auto& [key, indices] : groups.dets) {
    sort_by_score(indices, dets);
    std::vector<bool> suppressed(indices.size(), false);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (suppressed[i]) continue;
      kept.push_back(indices[i]);
      for (std::size_t j = i + 1; j < indices.size(); ++j) {
        if (suppressed[j]) continue;
        if (iou(dets[indices[i]].box, dets[indices[j]].box) >= iou_thresh) {
          suppressed[j] = true;
        }
      }
    }
  }

  std::stable_sort(kept.begin(), kept.end(), [&](int a, int b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return a < b;
  });
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (int i : kept) out.push_back(dets[i]);
  return out;
}

double fps(double pre_ms, double infer_ms, double nms_ms) {
  const bool ok = std::isfinite(pre_ms) && std::isfinite(infer_ms) && std::isfinite(nms_ms) &&
                  pre_ms >= 0.0 && infer_ms >= 0.0 && nms_ms >= 0.0;
  if (!ok) throw std::invalid_argument("phase times must be finite and >= 0");
  const double total = pre_ms + infer_ms + nms_ms;
  if (total <= 0.0) throw ZeroDuration("phase times sum to zero");
  return 1000.0 / total;
}

EvalReport evaluate(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                    const EvalConfig& cfg) {
  validate_thresh(cfg.iou_thresh);
  if (!(cfg.conf_thresh >= 0.0 && cfg.conf_thresh <= 1.0)) {
    throw std::invalid_argument("conf threshold must lie in [0, 1]");
  }
  if (gts.empty()) throw NoGroundTruth("no ground truth annotations");

  const std::vector<int> classes = report_classes(dets, gts, cfg.include_zero_gt_classes);
  const std::vector<double> preset = map_5095_thresholds();

  EvalReport report;
  double p_sum = 0.0, r_sum = 0.0, f1_sum = 0.0, ap50_sum = 0.0, ap5095_sum = 0.0;

  for (int c : classes) {
    const auto dets_c = filter_class(dets, c);
    const auto gts_c = filter_class(gts, c);

    ClassMetrics m;
    m.class_id = c;
    m.ap50 = average_precision(dets, gts, c, 0.5, cfg.interp);
    double ap_sum = 0.0;
    for (double t : preset) ap_sum += average_precision(dets, gts, c, t, cfg.interp);
    m.ap5095 = ap_sum / preset.size();

    std::vector<Detection> confident;
    for (const auto& d : dets_c) {
      if (d.score >= cfg.conf_thresh) confident.push_back(d);
    }
    m.operating = precision_recall_f1(match_detections(confident, gts_c, cfg.iou_thresh));

    const MatchOutcome full = match_detections(dets_c, gts_c, 0.5);
    const RankedCurve curve = ranked_curve(full, static_cast<int>(gts_c.size()));
    for (std::size_t i = 0; i < curve.recall.size(); ++i) {
      m.pr_curve.push_back({curve.recall[i], curve.precision[i]});
    }
    m.max_f1 = max_f1_on_curve(full, static_cast<int>(gts_c.size()));

    p_sum += m.operating.precision;
    r_sum += m.operating.recall;
    f1_sum += m.operating.f1;
    ap50_sum += m.ap50;
    ap5095_sum += m.ap5095;
    report.per_class.push_back(std::move(m));
  }

  const double n = static_cast<double>(classes.size());
  report.aggregate.precision = p_sum / n;
  report.aggregate.recall = r_sum / n;
  report.aggregate.f1 = f1_sum / n;
  report.map_50_pct = 100.0 * ap50_sum / n;
  report.map_50_95_pct = 100.0 * ap5095_sum / n;

  const MatchOutcome pooled = match_detections(dets, gts, 0.5);
  report.aggregate_max_f1 = max_f1_on_curve(pooled, static_cast<int>(gts.size()));
  return report;
}

}  // namespace boxlab
