#include "c14rate/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "c14rate/errors.hpp"

namespace c14rate {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view field, const std::string& path, int line_no) {
  field = trim(field);
  double v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": malformed numeric field '" +
                     std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return fields;
}

}  // namespace

CalendarGrid::CalendarGrid(double start_, double end_, double step_)
    : start(start_), end(end_), step(step_) {
  if (!(step > 0) || !(end > start)) {
    throw DataError("grid requires start < end and step > 0");
  }
  double cells = (end - start) / step;
  n_cells_ = static_cast<int>(std::llround(cells));
  if (n_cells_ < 1 || std::abs(n_cells_ * step - (end - start)) > 1e-6 * step) {
    throw DataError("grid span is not an integral number of steps");
  }
}

CalibrationCurve load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open curve file: " + path);

  struct Knot {
    double cal, age, err;
  };
  std::vector<Knot> knots;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    auto fields = split_csv(sv);
    if (fields.size() < 3) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected at least 3 comma-separated fields");
    }
    Knot k{parse_field(fields[0], path, line_no), parse_field(fields[1], path, line_no),
           parse_field(fields[2], path, line_no)};
    if (k.err < 0) {
      throw DataError(path + ":" + std::to_string(line_no) + ": negative curve error");
    }
    knots.push_back(k);
  }
  if (knots.size() < 2) throw DataError(path + ": fewer than 2 usable curve records");

  std::sort(knots.begin(), knots.end(), [](const Knot& a, const Knot& b) { return a.cal < b.cal; });
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (knots[i].cal == knots[i - 1].cal) {
      throw DataError(path + ": duplicate cal_age " + std::to_string(knots[i].cal));
    }
  }

  CalibrationCurve curve;
  const auto n = static_cast<Eigen::Index>(knots.size());
  curve.cal_age.resize(n);
  curve.c14_age.resize(n);
  curve.error.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    curve.cal_age(i) = knots[i].cal;
    curve.c14_age(i) = knots[i].age;
    curve.error(i) = knots[i].err;
  }
  return curve;
}

std::vector<Determination> load_determinations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open determination file: " + path);

  std::vector<Determination> dets;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    if (!header_seen) {
      if (sv != "id,c14_age,sigma") {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected header 'id,c14_age,sigma'");
      }
      header_seen = true;
      continue;
    }
    auto fields = split_csv(sv);
    if (fields.size() != 3) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    Determination d;
    d.id = std::string(trim(fields[0]));
    d.x = parse_field(fields[1], path, line_no);
    d.sigma = parse_field(fields[2], path, line_no);
    if (d.id.empty()) throw ParseError(path + ":" + std::to_string(line_no) + ": empty id");
    if (!(d.sigma > 0)) {
      throw DataError(path + ":" + std::to_string(line_no) + ": sigma must be positive");
    }
    dets.push_back(std::move(d));
  }
  if (dets.empty()) throw DataError(path + ": no determinations");
  return dets;
}

CurveValue curve_at(const CalibrationCurve& curve, double theta) {
  if (theta < curve.min_cal() || theta > curve.max_cal()) {
    throw DataError("calendar age " + std::to_string(theta) + " outside curve range [" +
                    std::to_string(curve.min_cal()) + ", " + std::to_string(curve.max_cal()) + "]");
  }
  const double* begin = curve.cal_age.data();
  const double* end = begin + curve.cal_age.size();
  const double* it = std::lower_bound(begin, end, theta);
  Eigen::Index i = it - begin;
  if (i < curve.cal_age.size() && curve.cal_age(i) == theta) {
    return {curve.c14_age(i), curve.error(i)};  // knot hit: exact values
  }
  // theta lies strictly inside (cal_age[i-1], cal_age[i])
  double x0 = curve.cal_age(i - 1), x1 = curve.cal_age(i);
  double t = (theta - x0) / (x1 - x0);
  return {curve.c14_age(i - 1) + t * (curve.c14_age(i) - curve.c14_age(i - 1)),
          curve.error(i - 1) + t * (curve.error(i) - curve.error(i - 1))};
}

CurveOnGrid curve_on_grid(const CalibrationCurve& curve, const CalendarGrid& grid) {
  CurveOnGrid cg;
  cg.m.resize(grid.n_cells());
  cg.tau2.resize(grid.n_cells());
  for (int j = 0; j < grid.n_cells(); ++j) {
    CurveValue v = curve_at(curve, grid.centre(j));
    cg.m(j) = v.m;
    cg.tau2(j) = v.tau * v.tau;
  }
  return cg;
}

Eigen::ArrayXd calibration_weights(const Determination& det, const CurveOnGrid& cg) {
  const Eigen::ArrayXd var = cg.tau2 + det.sigma * det.sigma;
  return (-0.5 * (det.x - cg.m).square() / var).exp() /
         (var * 2.0 * std::numbers::pi).sqrt();
}

DensityGrid calibrate_one(const Determination& det, const CurveOnGrid& cg,
                          const CalendarGrid& grid) {
  Eigen::ArrayXd w = calibration_weights(det, cg);
  double total = w.sum() * grid.step;
  // Eigen's vectorised exp clamps its argument instead of underflowing, so a
  // determination far off the curve yields subnormal noise rather than zeros;
  // demand at least one weight representable as a normal double.
  if (!(total > 0) || !(w.maxCoeff() > std::numeric_limits<double>::min()) ||
      !std::isfinite(total)) {
    throw DataError("determination " + det.id + " has no calibration mass on the grid");
  }
  return DensityGrid{grid, w / total, true};
}

DensityGrid calibrate_one(const Determination& det, const CalibrationCurve& curve,
                          const CalendarGrid& grid) {
  return calibrate_one(det, curve_on_grid(curve, grid), grid);
}

}  // namespace c14rate
