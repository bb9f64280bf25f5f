#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>

#include "boxlab/io.hpp"
#include "boxlab/rng.hpp"
#include "doctest.h"

using namespace boxlab;

namespace {

template <typename Fn>
std::string parse_error_message(Fn&& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

template <typename Fn>
int parse_error_line(Fn&& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST_CASE("ground-truth parsing skips comments, blanks and CRLF endings") {
  std::istringstream in(
      "# ground truth export\r\n"
      "\r\n"
      "  img1 , 0 , 0, 0, 10 , 10\r\n"
      "img2,3,-2.5,25e-2,4.25,0.5\r\n"
      "   # trailing comment\r\n");
  const auto gts = parse_ground_truths(in);
  REQUIRE(gts.size() == 2u);
  CHECK(gts[0].image_id == "img1");
  CHECK(gts[0].class_id == 0);
  CHECK(gts[0].box.x1() == 0.0);
  CHECK(gts[0].box.y2() == 10.0);
  CHECK(gts[1].image_id == "img2");
  CHECK(gts[1].class_id == 3);
  // dyadic corners survive the center-form reconstruction exactly
  CHECK(gts[1].box.x1() == -2.5);
  CHECK(gts[1].box.y1() == 0.25);
  CHECK(gts[1].box.x2() == 4.25);
  CHECK(gts[1].box.y2() == 0.5);
}

TEST_CASE("detection parsing reads score and preserves record order") {
  std::istringstream in(
      "a,0,0.9,0,0,1,1\n"
      "a,0,0.125,0,0,1,1\n"
      "b,1,1,0,0,1,1\n"   // score exactly 1
      "b,1,0,0,0,1,1\n");  // score exactly 0
  const auto dets = parse_detections(in);
  REQUIRE(dets.size() == 4u);
  CHECK(dets[0].score == 0.9);
  CHECK(dets[1].score == 0.125);
  CHECK(dets[2].score == 1.0);
  CHECK(dets[3].score == 0.0);
  CHECK(dets[2].image_id == "b");
  CHECK(dets[2].class_id == 1);
}

TEST_CASE("parse errors carry the physical line number and source name") {
  // comments and blank lines still advance the line counter
  const auto at_line = [](const std::string& text) {
    return parse_error_line([&] {
      std::istringstream in(text);
      parse_ground_truths(in, "gt.csv");
    });
  };

  CHECK(at_line("# c\n\ni,0,0,0,1,1\ni,zero,0,0,1,1\n") == 4);
  CHECK(at_line("i,0,0,0,1\n") == 1);            // 5 fields
  CHECK(at_line("i,0,0,0,1,1,9\n") == 1);        // 7 fields
  CHECK(at_line("i,0,a,0,1,1\n") == 1);          // x1 not a number
  CHECK(at_line("i,0,nan,0,1,1\n") == 1);        // non-finite coordinate
  CHECK(at_line("i,0,inf,0,1,1\n") == 1);
  CHECK(at_line("i,1.5,0,0,1,1\n") == 1);        // fractional class id
  CHECK(at_line("i,0,1,0,1,1\n") == 1);          // x1 == x2
  CHECK(at_line("i,0,2,0,1,1\n") == 1);          // x1 > x2
  CHECK(at_line("i,0,0,1,1,1\n") == 1);          // y1 == y2
  CHECK(at_line(",0,0,0,1,1\n") == 1);           // empty image id

  const std::string msg = parse_error_message([] {
    std::istringstream in("i,0,0,0,1,1\nbroken\n");
    parse_ground_truths(in, "gt.csv");
  });
  CHECK(msg.find("gt.csv:2:") == 0);
  CHECK(msg.find("expected 6 fields") != std::string::npos);

  SUBCASE("detection-specific errors") {
    const auto det_msg = [](const std::string& text) {
      return parse_error_message([&] {
        std::istringstream in(text);
        parse_detections(in, "det.csv");
      });
    };
    CHECK(det_msg("a,0,1.5,0,0,1,1\n").find("score must lie in [0, 1]") != std::string::npos);
    CHECK(det_msg("a,0,-0.1,0,0,1,1\n").find("score must lie in [0, 1]") != std::string::npos);
    CHECK(det_msg("a,0,nan,0,0,1,1\n").find("not a finite number") != std::string::npos);
    CHECK(det_msg("a,0,0.5,0,0,1,1,9\n").find("expected 7 fields") != std::string::npos);
    CHECK(det_msg("a,0,0.5,0,0,1,1,9\n").find("det.csv:1:") == 0);
  }
}

TEST_CASE("loading a missing file reports a file-level error") {
  const std::string path = "/nonexistent/boxlab-test.csv";
  CHECK_THROWS_AS((void)load_ground_truths(path), ParseError);
  CHECK_THROWS_AS((void)load_detections(path), ParseError);
  CHECK(parse_error_line([&] { (void)load_ground_truths(path); }) == 0);
  const std::string msg = parse_error_message([&] { (void)load_detections(path); });
  CHECK(msg.find(path + ":0:") == 0);
  CHECK(msg.find("cannot open") != std::string::npos);
}

TEST_CASE("write then parse round-trips the records") {
  Lcg64 rng(7);
  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
  for (int i = 0; i < 50; ++i) {
    const Box b = sample_box(rng);
    gts.push_back({"img" + std::to_string(i % 5), static_cast<int>(rng.next_below(3)), b});
    dets.push_back({"img" + std::to_string(i % 5), static_cast<int>(rng.next_below(3)),
                    rng.next_unit(), sample_box(rng)});
  }

  std::ostringstream gout;
  write_ground_truths(gout, gts);
  std::istringstream gin(gout.str());
  const auto gts2 = parse_ground_truths(gin);
  REQUIRE(gts2.size() == gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    CHECK(gts2[i].image_id == gts[i].image_id);
    CHECK(gts2[i].class_id == gts[i].class_id);
    // corner text round-trips exactly; the center/extent re-derivation may
    // differ by an ulp
    CHECK(gts2[i].box.cx() == doctest::Approx(gts[i].box.cx()).epsilon(1e-12));
    CHECK(gts2[i].box.cy() == doctest::Approx(gts[i].box.cy()).epsilon(1e-12));
    CHECK(gts2[i].box.w() == doctest::Approx(gts[i].box.w()).epsilon(1e-12));
    CHECK(gts2[i].box.h() == doctest::Approx(gts[i].box.h()).epsilon(1e-12));
  }

  std::ostringstream dout;
  write_detections(dout, dets);
  std::istringstream din(dout.str());
  const auto dets2 = parse_detections(din);
  REQUIRE(dets2.size() == dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    CHECK(dets2[i].score == dets[i].score);  // shortest round-trip is exact
    CHECK(dets2[i].box.cx() == doctest::Approx(dets[i].box.cx()).epsilon(1e-12));
  }

  SUBCASE("output uses LF line endings only") {
    CHECK(gout.str().find('\r') == std::string::npos);
    CHECK(dout.str().find('\r') == std::string::npos);
  }
}

TEST_CASE("format_double emits shortest exact decimal strings") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.25) == "-2.25");
  CHECK(format_double(0.0) == "0");

  Lcg64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const double v = (rng.next_unit() - 0.5) * std::pow(10.0, rng.uniform(-6, 6));
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("trace CSV layout") {
  RegressionTrace trace;
  trace.steps.push_back({0, Box(1, 1, 2, 2), 0.5, 0.25});
  trace.steps.push_back({1, Box(1.5, 1, 2, 2), 0.25, 0.5});
  trace.converged_at = 1;

  std::ostringstream out;
  write_trace_csv(out, trace);
  CHECK(out.str() ==
        "step,cx,cy,w,h,loss,iou\n"
        "0,1,1,2,2,0.5,0.25\n"
        "1,1.5,1,2,2,0.25,0.5\n");
}

TEST_CASE("report CSV layout: class rows then the __all__ aggregate") {
  EvalReport rep;
  ClassMetrics c;
  c.class_id = 0;
  c.operating = {0.5, 1.0, 2.0 / 3.0};
  c.ap50 = 1.0;
  c.ap5095 = 0.75;
  rep.per_class.push_back(c);
  c.class_id = 2;
  c.operating = {1.0, 0.5, 2.0 / 3.0};
  c.ap50 = 0.5;
  c.ap5095 = 0.25;
  rep.per_class.push_back(c);
  rep.aggregate = {0.75, 0.75, 0.75};
  rep.map_50_pct = 75.0;
  rep.map_50_95_pct = 50.0;

  std::ostringstream out;
  write_report_csv(out, rep);
  CHECK(out.str() ==
        "class_id,precision,recall,f1,ap50,ap5095\n"
        "0,0.5,1,0.6666666666666666,100,75\n"
        "2,1,0.5,0.6666666666666666,50,25\n"
        "__all__,0.75,0.75,0.75,75,50\n");
}
