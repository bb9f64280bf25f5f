#include "boxlab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <system_error>

namespace boxlab {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

int parse_int(const std::string& field, const std::string& source, int line,
              const std::string& name) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(source, line, name + " is not an integer: '" + field + "'");
  }
  return value;
}

double parse_finite(const std::string& field, const std::string& source, int line,
                    const std::string& name) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError(source, line, name + " is not a finite number: '" + field + "'");
  }
  return value;
}

Box parse_corners(const std::vector<std::string>& f, std::size_t at, const std::string& source,
                  int line) {
  const double x1 = parse_finite(f[at + 0], source, line, "x1");
  const double y1 = parse_finite(f[at + 1], source, line, "y1");
  const double x2 = parse_finite(f[at + 2], source, line, "x2");
  const double y2 = parse_finite(f[at + 3], source, line, "y2");
  if (!(x1 < x2 && y1 < y2)) {
    throw ParseError(source, line, "corners must satisfy x1 < x2 and y1 < y2");
  }
  return Box::from_corners(x1, y1, x2, y2);
}

/// Yields (line_number, content) for every record line; comments and blank
/// lines are skipped and CR from CRLF endings is stripped.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string stripped = trim(raw);
    if (stripped.empty() || stripped[0] == '#') continue;
    fn(line, raw);
  }
}

}  // namespace

std::vector<GroundTruth> parse_ground_truths(std::istream& in, const std::string& source) {
  std::vector<GroundTruth> out;
  for_each_record(in, [&](int line, const std::string& content) {
    const std::vector<std::string> f = split_fields(content);
    if (f.size() != 6) {
      throw ParseError(source, line,
                       "expected 6 fields (image_id,class_id,x1,y1,x2,y2), got " +
                           std::to_string(f.size()));
    }
    if (f[0].empty()) throw ParseError(source, line, "image_id is empty");
    GroundTruth gt{f[0], parse_int(f[1], source, line, "class_id"),
                   parse_corners(f, 2, source, line)};
    out.push_back(std::move(gt));
  });
  return out;
}

std::vector<Detection> parse_detections(std::istream& in, const std::string& source) {
  std::vector<Detection> out;
  for_each_record(in, [&](int line, const std::string& content) {
    const std::vector<std::string> f = split_fields(content);
    if (f.size() != 7) {
      throw ParseError(source, line,
                       "expected 7 fields (image_id,class_id,score,x1,y1,x2,y2), got " +
                           std::to_string(f.size()));
    }
    if (f[0].empty()) throw ParseError(source, line, "image_id is empty");
    const double score = parse_finite(f[2], source, line, "score");
    if (!(score >= 0.0 && score <= 1.0)) {
      throw ParseError(source, line, "score must lie in [0, 1]: '" + f[2] + "'");
    }
    Detection det{f[0], parse_int(f[1], source, line, "class_id"), score,
                  parse_corners(f, 3, source, line)};
    out.push_back(std::move(det));
  });
  return out;
}

std::vector<GroundTruth> load_ground_truths(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return parse_ground_truths(in, path);
}

std::vector<Detection> load_detections(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return parse_detections(in, path);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_ground_truths(std::ostream& out, const std::vector<GroundTruth>& gts) {
  for (const GroundTruth& gt : gts) {
    out << gt.image_id << ',' << gt.class_id << ',' << format_double(gt.box.x1()) << ','
        << format_double(gt.box.y1()) << ',' << format_double(gt.box.x2()) << ','
        << format_double(gt.box.y2()) << '\n';
  }
}

void write_detections(std::ostream& out, const std::vector<Detection>& dets) {
  for (const Detection& det : dets) {
    out << det.image_id << ',' << det.class_id << ',' << format_double(det.score) << ','
        << format_double(det.box.x1()) << ',' << format_double(det.box.y1()) << ','
        << format_double(det.box.x2()) << ',' << format_double(det.box.y2()) << '\n';
  }
}

void write_trace_csv(std::ostream& out, const RegressionTrace& trace) {
  out << "step,cx,cy,w,h,loss,iou\n";
  for (const TraceStep& s : trace.steps) {
    out << s.step << ',' << format_double(s.box.cx()) << ',' << format_double(s.box.cy()) << ','
        << format_double(s.box.w()) << ',' << format_double(s.box.h()) << ','
        << format_double(s.loss) << ',' << format_double(s.iou) << '\n';
  }
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "class_id,precision,recall,f1,ap50,ap5095\n";
  for (const ClassMetrics& c : report.per_class) {
    out << c.class_id << ',' << format_double(c.operating.precision) << ','
        << format_double(c.operating.recall) << ',' << format_double(c.operating.f1) << ','
        << format_double(100.0 * c.ap50) << ',' << format_double(100.0 * c.ap5095) << '\n';
  }
  out << "__all__," << format_double(report.aggregate.precision) << ','
      << format_double(report.aggregate.recall) << ',' << format_double(report.aggregate.f1)
      << ',' << format_double(report.map_50_pct) << ',' << format_double(report.map_50_95_pct)
      << '\n';
}

}  // namespace boxlab
