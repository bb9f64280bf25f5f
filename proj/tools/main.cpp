// boxlab: bounding-box regression loss laboratory and detection evaluation
// toolkit. Subcommands: gradcheck, regress, eval, bench.
//
// Exit status contract: 0 = success, 1 = domain failure (parse error,
// divergence, failed check), 2 = usage error.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "boxlab/eval.hpp"
#include "boxlab/io.hpp"
#include "boxlab/losses.hpp"
#include "boxlab/regressor.hpp"
#include "boxlab/rng.hpp"

namespace {

using namespace boxlab;

/// Flag/config mistakes discovered after CLI11 parsing; mapped to exit 2.
struct UsageError {
  std::string msg;
};

bool color_enabled() {
  if (std::getenv("NO_COLOR") != nullptr) return false;
  return isatty(fileno(stdout)) != 0;
}

std::string green(const std::string& s) { return color_enabled() ? "\x1b[32m" + s + "\x1b[0m" : s; }
std::string red(const std::string& s) { return color_enabled() ? "\x1b[31m" + s + "\x1b[0m" : s; }

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void require_known_losses(const std::vector<std::string>& ids) {
  if (ids.empty()) throw UsageError{"--loss list must be nonempty"};
  for (const auto& id : ids) {
    if (!is_known_loss(id)) throw UsageError{"unknown loss id: '" + id + "'"};
  }
}

JointWeights resolve_weights(const std::vector<double>& raw) {
  if (raw.empty()) return JointWeights{};
  if (raw.size() != 4) throw UsageError{"--weights expects exactly 4 values: alpha,beta,gamma,eta"};
  for (double v : raw) {
    if (!(std::isfinite(v) && v >= 0.0)) throw UsageError{"--weights values must be finite and >= 0"};
  }
  return JointWeights{raw[0], raw[1], raw[2], raw[3]};
}

Box box_from_flag(const std::vector<double>& corners, const std::string& flag) {
  if (corners.size() != 4) throw UsageError{flag + " expects exactly 4 values: x1,y1,x2,y2"};
  for (double v : corners) {
    if (!std::isfinite(v)) throw UsageError{flag + " values must be finite"};
  }
  if (!(corners[0] < corners[2] && corners[1] < corners[3])) {
    throw UsageError{flag + " must satisfy x1 < x2 and y1 < y2"};
  }
  return Box::from_corners(corners[0], corners[1], corners[2], corners[3]);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  std::vector<std::string> losses;
  std::vector<double> weights;
  std::uint64_t seed = 42;
  int pairs = 1000;
  double step = 1e-6;
  double tol = 1e-4;
};

int run_gradcheck(const GradcheckArgs& a) {
  std::vector<std::string> losses = a.losses.empty() ? known_loss_ids() : a.losses;
  require_known_losses(losses);
  if (a.pairs < 1) throw UsageError{"--pairs must be >= 1"};
  if (!(a.step > 0.0)) throw UsageError{"--step must be > 0"};
  const JointWeights wts = resolve_weights(a.weights);

  // Draw pairs until the requested number passes the differentiability
  // filter, so every kept pair contributes to every loss.
  Lcg64 rng(a.seed);
  std::vector<BoxPair> kept;
  kept.reserve(static_cast<std::size_t>(a.pairs));
  long sampled = 0;
  const long cap = 1000L * a.pairs;
  while (static_cast<int>(kept.size()) < a.pairs && sampled < cap) {
    BoxPair p = sample_box_pair(rng);
    ++sampled;
    if (!near_nondifferentiable(p.pred, p.target)) kept.push_back(p);
  }
  if (static_cast<int>(kept.size()) < a.pairs) {
    std::cerr << "error: filter rejected too many sampled pairs\n";
    return 1;
  }

  std::cout << "gradient check: analytic vs central differences (step "
            << format_double(a.step) << ", tolerance " << format_double(a.tol) << ")\n";
  std::cout << "seed: " << a.seed << "\n";
  std::cout << "pairs: " << a.pairs << " kept (" << sampled << " sampled)\n\n";
  std::cout << "loss    max_rel_err   mean_rel_err  status\n";

  bool all_ok = true;
  std::string worst_loss;
  int worst_pair = -1;
  double worst_err = 0.0;
  for (const auto& id : losses) {
    double max_err = 0.0;
    double sum_err = 0.0;
    int max_at = -1;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const double err = grad_check(id, kept[i].pred, kept[i].target, a.step, wts);
      sum_err += err;
      if (err > max_err) {
        max_err = err;
        max_at = static_cast<int>(i);
      }
    }
    const bool ok = max_err < a.tol;
    if (!ok && (worst_pair < 0 || max_err > worst_err)) {
      worst_loss = id;
      worst_pair = max_at;
      worst_err = max_err;
    }
    all_ok = all_ok && ok;
    std::printf("%-7s %-13s %-13s %s\n", id.c_str(), fmt("%.3e", max_err).c_str(),
                fmt("%.3e", sum_err / static_cast<double>(kept.size())).c_str(),
                ok ? green("ok").c_str() : red("FAIL").c_str());
  }
  if (!all_ok) {
    std::cerr << "gradcheck failed: loss=" << worst_loss << " pair=" << worst_pair
              << " rel_err=" << format_double(worst_err) << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// regress

struct RegressArgs {
  std::string scenario;
  std::vector<double> init;
  std::vector<double> target;
  std::vector<std::string> losses;
  std::vector<double> weights;
  double lr = 0.05;
  int steps = 1000;
  double stop_iou = 0.9;
  double momentum = 0.0;
  std::string out_dir = ".";
};

struct Scenario {
  Box init;
  Box target;
};

Scenario resolve_scenario(const RegressArgs& a) {
  const bool explicit_boxes = !a.init.empty() || !a.target.empty();
  if (!a.scenario.empty() && explicit_boxes) {
    throw UsageError{"give either --scenario or --init/--target, not both"};
  }
  if (explicit_boxes) {
    if (a.init.empty() || a.target.empty()) {
      throw UsageError{"--init and --target must be given together"};
    }
    return {box_from_flag(a.init, "--init"), box_from_flag(a.target, "--target")};
  }
  // Built-in suite, in corner form. overlap: diagonal offset with positive
  // IoU; disjoint: zero IoU with a 2-unit gap; aspect: same center, 4:1 vs
  // 1:4; contain: small box strictly inside the target.
  if (a.scenario == "overlap") {
    return {Box::from_corners(0, 0, 2, 2), Box::from_corners(1, 1, 3, 3)};
  }
  if (a.scenario == "disjoint") {
    return {Box::from_corners(0, 0, 1, 1), Box::from_corners(3, 0, 4, 1)};
  }
  if (a.scenario == "aspect") {
    return {Box::from_corners(0, 0, 4, 1), Box::from_corners(0, 0, 1, 4)};
  }
  if (a.scenario == "contain") {
    return {Box::from_corners(0.5, 0.5, 1.5, 1.5), Box::from_corners(0, 0, 2, 2)};
  }
  if (a.scenario.empty()) {
    throw UsageError{"give --scenario NAME or explicit --init/--target boxes"};
  }
  throw UsageError{"unknown scenario '" + a.scenario +
                   "' (known: overlap, disjoint, aspect, contain)"};
}

int run_regress(const RegressArgs& a) {
  std::vector<std::string> losses = a.losses.empty() ? known_loss_ids() : a.losses;
  require_known_losses(losses);
  if (a.steps < 1) throw UsageError{"--steps must be >= 1"};
  if (!(std::isfinite(a.lr) && a.lr > 0.0)) throw UsageError{"--lr must be > 0"};
  if (!(a.stop_iou > 0.0 && a.stop_iou <= 1.0)) throw UsageError{"--iou-thresh must lie in (0, 1]"};
  if (!(std::isfinite(a.momentum) && a.momentum >= 0.0 && a.momentum < 1.0)) {
    throw UsageError{"--momentum must lie in [0, 1)"};
  }

  const Scenario sc = resolve_scenario(a);
  RegressionConfig base;
  base.weights = resolve_weights(a.weights);
  base.lr = a.lr;
  base.max_steps = a.steps;
  base.stop_iou = a.stop_iou;
  base.momentum = a.momentum;

  const std::vector<LossRunOutcome> runs = compare_losses(sc.init, sc.target, base, losses);

  std::filesystem::create_directories(a.out_dir);
  for (const LossRunOutcome& run : runs) {
    auto out = open_output(std::filesystem::path(a.out_dir) / ("trace_" + run.loss_id + ".csv"));
    write_trace_csv(out, run.trace);
  }

  std::cout << "init:   " << format_double(sc.init.x1()) << "," << format_double(sc.init.y1())
            << "," << format_double(sc.init.x2()) << "," << format_double(sc.init.y2()) << "\n";
  std::cout << "target: " << format_double(sc.target.x1()) << "," << format_double(sc.target.y1())
            << "," << format_double(sc.target.x2()) << "," << format_double(sc.target.y2())
            << "\n";
  std::cout << "lr " << format_double(a.lr) << ", steps " << a.steps << ", stop at IoU >= "
            << format_double(a.stop_iou) << "\n\n";
  std::cout << "loss    converged_at  final_iou\n";

  bool any_diverged = false;
  for (const LossRunOutcome& run : runs) {
    std::string conv = run.trace.converged_at ? std::to_string(*run.trace.converged_at) : "-";
    if (run.diverged) conv = red("diverged");
    std::printf("%-7s %-13s %s\n", run.loss_id.c_str(), conv.c_str(),
                fmt("%.6f", run.trace.final_iou).c_str());
    if (run.diverged) {
      any_diverged = true;
      std::cerr << "error: " << run.error << "\n";
    }
  }
  return any_diverged ? 1 : 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string gt_path;
  std::string det_path;
  double iou_thresh = 0.5;
  double conf_thresh = 0.25;
  double nms_thresh = 0.45;
  bool nms_thresh_given = false;
  bool apply_nms = false;
  int interp_points = 101;
  bool include_zero_gt = false;
  std::string out_dir = ".";
};

int run_eval(const EvalArgs& a) {
  if (!(a.iou_thresh > 0.0 && a.iou_thresh <= 1.0)) {
    throw UsageError{"--iou-thresh must lie in (0, 1]"};
  }
  if (!(a.conf_thresh >= 0.0 && a.conf_thresh <= 1.0)) {
    throw UsageError{"--conf-thresh must lie in [0, 1]"};
  }
  if (!(a.nms_thresh > 0.0 && a.nms_thresh <= 1.0)) {
    throw UsageError{"--nms must lie in (0, 1]"};
  }
  if (a.interp_points != 101 && a.interp_points != 11) {
    throw UsageError{"--ap-interp must be 101 or 11"};
  }

  const std::vector<GroundTruth> gts = load_ground_truths(a.gt_path);
  std::vector<Detection> dets = load_detections(a.det_path);

  const bool use_nms = a.apply_nms || a.nms_thresh_given;
  if (use_nms) dets = nms(dets, a.nms_thresh);

  EvalConfig cfg;
  cfg.iou_thresh = a.iou_thresh;
  cfg.conf_thresh = a.conf_thresh;
  cfg.interp = a.interp_points == 101 ? ApInterp::points101 : ApInterp::points11;
  cfg.include_zero_gt_classes = a.include_zero_gt;
  const EvalReport report = evaluate(dets, gts, cfg);

  std::cout << "ground truths: " << gts.size() << ", detections: " << dets.size();
  if (use_nms) std::cout << " (after NMS at " << format_double(a.nms_thresh) << ")";
  std::cout << "\noperating point: score >= " << format_double(a.conf_thresh)
            << ", match IoU >= " << format_double(a.iou_thresh) << "\n\n";
  std::cout << "class    P        R        F1       maxF1    mAP@.5(%)  mAP@.5:.95(%)\n";
  for (const ClassMetrics& c : report.per_class) {
    std::printf("%-8d %-8s %-8s %-8s %-8s %-10s %s\n", c.class_id,
                fmt("%.4f", c.operating.precision).c_str(), fmt("%.4f", c.operating.recall).c_str(),
                fmt("%.4f", c.operating.f1).c_str(), fmt("%.4f", c.max_f1).c_str(),
                fmt("%.2f", 100.0 * c.ap50).c_str(), fmt("%.2f", 100.0 * c.ap5095).c_str());
  }
  std::printf("%-8s %-8s %-8s %-8s %-8s %-10s %s\n", "all",
              fmt("%.4f", report.aggregate.precision).c_str(),
              fmt("%.4f", report.aggregate.recall).c_str(),
              fmt("%.4f", report.aggregate.f1).c_str(),
              fmt("%.4f", report.aggregate_max_f1).c_str(),
              fmt("%.2f", report.map_50_pct).c_str(), fmt("%.2f", report.map_50_95_pct).c_str());

  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path csv_path = std::filesystem::path(a.out_dir) / "report.csv";
  auto out = open_output(csv_path);
  write_report_csv(out, report);
  std::cout << "\nreport written to " << csv_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  int images = 64;
  int iters = 5;
  int dets_per_image = 20;
  int gts_per_image = 10;
  std::uint64_t seed = 42;
  double nms_thresh = 0.45;
};

int run_bench(const BenchArgs& a) {
  if (a.images < 1) throw UsageError{"--images must be >= 1"};
  if (a.iters < 1) throw UsageError{"--iters must be >= 1"};
  if (a.dets_per_image < 1) throw UsageError{"--dets-per-image must be >= 1"};
  if (a.gts_per_image < 1) throw UsageError{"--gts-per-image must be >= 1"};

  // Synthetic batch: boxes from the shared sampler, one class, scores
  // uniform in [0, 1].
  Lcg64 rng(a.seed);
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
  for (int img = 0; img < a.images; ++img) {
    const std::string image_id = "img" + std::to_string(img);
    for (int k = 0; k < a.gts_per_image; ++k) {
      gts.push_back({image_id, 0, sample_box(rng)});
    }
    for (int k = 0; k < a.dets_per_image; ++k) {
      Box b = sample_box(rng);
      dets.push_back({image_id, 0, rng.next_unit(), b});
    }
  }
  std::ostringstream gt_text_stream, det_text_stream;
  write_ground_truths(gt_text_stream, gts);
  write_detections(det_text_stream, dets);
  const std::string gt_text = gt_text_stream.str();
  const std::string det_text = det_text_stream.str();

  using clock = std::chrono::steady_clock;
  const auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  double parse_ms = 0.0, loss_ms = 0.0, nms_ms = 0.0;
  double sink = 0.0;  // keeps the loss loop from being optimized out
  std::size_t nms_kept = 0;
  for (int it = 0; it < a.iters; ++it) {
    auto t0 = clock::now();
    std::istringstream gt_in(gt_text), det_in(det_text);
    const auto parsed_gts = parse_ground_truths(gt_in, "<bench>");
    const auto parsed_dets = parse_detections(det_in, "<bench>");
    parse_ms += ms_since(t0);

    t0 = clock::now();
    for (int img = 0; img < a.images; ++img) {
      for (int d = 0; d < a.dets_per_image; ++d) {
        const Box& pred = parsed_dets[static_cast<std::size_t>(img * a.dets_per_image + d)].box;
        for (int g = 0; g < a.gts_per_image; ++g) {
          const Box& tgt = parsed_gts[static_cast<std::size_t>(img * a.gts_per_image + g)].box;
          sink += loss_joint(pred, tgt).value;
        }
      }
    }
    loss_ms += ms_since(t0);

    t0 = clock::now();
    nms_kept = nms(parsed_dets, a.nms_thresh).size();
    nms_ms += ms_since(t0);
  }

  const double denom = static_cast<double>(a.iters) * static_cast<double>(a.images);
  const double p = parse_ms / denom;
  const double i = loss_ms / denom;
  const double n = nms_ms / denom;

  std::cout << "toolkit benchmark: measures this CPU implementation (parsing, batched joint-loss"
               " evaluation, NMS), not a GPU detector\n";
  std::cout << "seed: " << a.seed << "\n";
  std::cout << "images: " << a.images << ", iterations: " << a.iters << ", detections/image: "
            << a.dets_per_image << ", ground truths/image: " << a.gts_per_image << "\n";
  std::cout << "nms kept " << nms_kept << " of " << dets.size() << " detections (checksum "
            << fmt("%.3e", sink) << ")\n\n";
  std::cout << "phase                ms/image\n";
  std::printf("parse                %.6f\n", p);
  std::printf("loss                 %.6f\n", i);
  std::printf("nms                  %.6f\n", n);
  std::printf("fps 1000/(P+I+N):    %.1f\n", fps(p, i, n));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounding-box regression loss laboratory and detection evaluation toolkit"};
  app.require_subcommand(1);

  GradcheckArgs ga;
  CLI::App* grad = app.add_subcommand(
      "gradcheck", "verify analytic loss gradients against central finite differences");
  grad->add_option("--loss", ga.losses, "comma-separated loss ids (default: all)")->delimiter(',');
  grad->add_option("--weights", ga.weights, "joint-loss weights alpha,beta,gamma,eta")
      ->delimiter(',');
  grad->add_option("--seed", ga.seed, "random seed (default 42)");
  grad->add_option("--pairs", ga.pairs, "number of box pairs to keep (default 1000)");
  grad->add_option("--step", ga.step, "finite-difference step (default 1e-6)");
  grad->add_option("--tol", ga.tol, "max relative error allowed (default 1e-4)");

  RegressArgs ra;
  CLI::App* reg = app.add_subcommand(
      "regress", "gradient-descent box fitting; writes one trace CSV per loss");
  reg->add_option("--scenario", ra.scenario, "overlap | disjoint | aspect | contain");
  reg->add_option("--init", ra.init, "explicit initial box x1,y1,x2,y2")->delimiter(',');
  reg->add_option("--target", ra.target, "explicit target box x1,y1,x2,y2")->delimiter(',');
  reg->add_option("--loss", ra.losses, "comma-separated loss ids (default: all)")->delimiter(',');
  reg->add_option("--weights", ra.weights, "joint-loss weights alpha,beta,gamma,eta")
      ->delimiter(',');
  reg->add_option("--lr", ra.lr, "learning rate (default 0.05)");
  reg->add_option("--steps", ra.steps, "maximum step count (default 1000)");
  reg->add_option("--iou-thresh", ra.stop_iou, "early-stop IoU (default 0.9)");
  reg->add_option("--momentum", ra.momentum, "momentum coefficient (default 0)");
  reg->add_option("--out", ra.out_dir, "output directory for trace CSVs (default .)");

  EvalArgs ea;
  CLI::App* ev = app.add_subcommand(
      "eval", "score detections against ground truths; writes report.csv");
  ev->add_option("--gt", ea.gt_path, "ground-truth file")->required();
  ev->add_option("--det", ea.det_path, "detection file")->required();
  ev->add_option("--iou-thresh", ea.iou_thresh, "matching IoU threshold (default 0.5)");
  ev->add_option("--conf-thresh", ea.conf_thresh, "operating score threshold (default 0.25)");
  CLI::Option* nms_opt =
      ev->add_option("--nms", ea.nms_thresh, "apply NMS at this IoU threshold before scoring");
  ev->add_flag("--apply-nms", ea.apply_nms, "apply NMS at the default threshold 0.45");
  ev->add_option("--ap-interp", ea.interp_points, "AP interpolation points: 101 or 11");
  ev->add_flag("--include-zero-gt-classes", ea.include_zero_gt,
               "average mAP over classes with no ground truths too");
  ev->add_option("--out", ea.out_dir, "output directory for report.csv (default .)");

  BenchArgs ba;
  CLI::App* be = app.add_subcommand(
      "bench", "time parsing, batched loss evaluation, and NMS on synthetic batches");
  be->add_option("--images", ba.images, "images per batch (default 64)");
  be->add_option("--iters", ba.iters, "iterations to average over (default 5)");
  be->add_option("--dets-per-image", ba.dets_per_image, "detections per image (default 20)");
  be->add_option("--gts-per-image", ba.gts_per_image, "ground truths per image (default 10)");
  be->add_option("--seed", ba.seed, "random seed (default 42)");
  be->add_option("--nms", ba.nms_thresh, "NMS threshold for the timed phase (default 0.45)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ea.nms_thresh_given = nms_opt->count() > 0;
    if (grad->parsed()) return run_gradcheck(ga);
    if (reg->parsed()) return run_regress(ra);
    if (ev->parsed()) return run_eval(ea);
    if (be->parsed()) return run_bench(ba);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.msg << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
