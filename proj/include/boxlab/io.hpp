#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "boxlab/eval.hpp"
#include "boxlab/regressor.hpp"

namespace boxlab {

/// Malformed annotation input. what() reads "<source>:<line>: <detail>";
/// line 0 marks a file-level failure (e.g. the file cannot be opened).
struct ParseError : std::runtime_error {
  ParseError(const std::string& source, int line_number, const std::string& detail)
      : std::runtime_error(source + ":" + std::to_string(line_number) + ": " + detail),
        line(line_number) {}
  int line;
};

/// Ground-truth records: one per line, `image_id,class_id,x1,y1,x2,y2`,
/// no header; `#` comments and blank lines are skipped. Corner order is
/// enforced (x1 < x2, y1 < y2). `source` names the stream in errors.
std::vector<GroundTruth> parse_ground_truths(std::istream& in, const std::string& source = "<input>");

/// Detection records: `image_id,class_id,score,x1,y1,x2,y2` with score in
/// [0, 1]; same conventions as parse_ground_truths otherwise.
std::vector<Detection> parse_detections(std::istream& in, const std::string& source = "<input>");

std::vector<GroundTruth> load_ground_truths(const std::string& path);
std::vector<Detection> load_detections(const std::string& path);

void write_ground_truths(std::ostream& out, const std::vector<GroundTruth>& gts);
void write_detections(std::ostream& out, const std::vector<Detection>& dets);

/// Shortest decimal string that round-trips to exactly v.
std::string format_double(double v);

/// Header `step,cx,cy,w,h,loss,iou`, one row per recorded step.
void write_trace_csv(std::ostream& out, const RegressionTrace& trace);

/// Header `class_id,precision,recall,f1,ap50,ap5095`; one row per class
/// (ascending id) and a final `__all__` aggregate row. The ap columns are
/// percentages, matching the reported mAP(%) convention; precision, recall
/// and f1 are fractions.
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace boxlab
