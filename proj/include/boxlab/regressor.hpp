#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boxlab/box.hpp"
#include "boxlab/losses.hpp"

namespace boxlab {

/// Plain gradient descent on (cx, cy, w, h). Momentum is off by default;
/// 0.937 is the reference setting when enabled.
struct RegressionConfig {
  std::string loss_id = "joint";
  JointWeights weights{};
  double lr = 0.05;
  int max_steps = 1000;
  double stop_iou = 0.9;  // early stop once IoU against the target reaches this
  double momentum = 0.0;
};

struct TraceStep {
  int step;
  Box box;
  double loss;
  double iou;
};

struct RegressionTrace {
  std::vector<TraceStep> steps;          // step indices strictly increasing from 0
  std::optional<int> converged_at;       // first step with IoU >= stop_iou
  double final_iou = 0.0;
};

/// Carries the trace recorded up to the step that produced a NaN/inf
/// parameter.
struct DivergedToNonFinite : std::runtime_error {
  DivergedToNonFinite(const std::string& msg, RegressionTrace partial_trace)
      : std::runtime_error(msg), partial(std::move(partial_trace)) {}
  RegressionTrace partial;
};

/// Drives init toward target under cfg.loss_id, recording every step.
/// Extents are clamped to 1e-6 after each update.
RegressionTrace run_regression(const Box& init, const Box& target, const RegressionConfig& cfg);

struct LossRunOutcome {
  std::string loss_id;
  RegressionTrace trace;  // partial when diverged
  bool diverged = false;
  std::string error;
};

/// Runs run_regression once per loss id with identical init/target/config;
/// output order matches input order. A diverging loss is reported in its
/// outcome; the remaining losses still run.
std::vector<LossRunOutcome> compare_losses(const Box& init, const Box& target,
                                           const RegressionConfig& base,
                                           const std::vector<std::string>& loss_ids);

}  // namespace boxlab
