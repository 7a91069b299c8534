#include "c14rate/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "c14rate/errors.hpp"

namespace c14rate {

namespace {

constexpr double kWidth = 920, kHeight = 520;
constexpr double kLeft = 70, kRight = 78, kTop = 46, kBottom = 52;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// "nice" tick spacing covering roughly n_target intervals
double tick_step(double span, int n_target) {
  double raw = span / n_target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mult * mag >= raw) return mult * mag;
  }
  return 10.0 * mag;
}

struct Scale {
  double v0, v1, p0, p1;
  double operator()(double v) const { return p0 + (v - v0) / (v1 - v0) * (p1 - p0); }
};

}  // namespace

void write_rate_svg(const PlotInputs& inputs, const std::string& path) {
  const RateSummary& sum = inputs.summary;
  const CalendarGrid& grid = sum.grid;
  if (grid.n_cells() < 2) throw DataError("plot needs a grid with at least 2 cells");

  double rate_max = sum.band.upper.maxCoeff();
  if (inputs.truth) {
    for (double h : inputs.truth->h) rate_max = std::max(rate_max, h);
  }
  if (!(rate_max > 0)) rate_max = 1.0;
  rate_max *= 1.08;

  // calendar age runs old (left) to young (right)
  Scale x{grid.end, grid.start, kLeft, kLeft + kPlotW};
  Scale y{0.0, rate_max, kTop + kPlotH, kTop};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  if (!inputs.title.empty()) {
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << inputs.title << "</text>\n";
  }

  // quantile band
  svg << "<path fill=\"#9ecae1\" fill-opacity=\"0.55\" stroke=\"none\" d=\"M";
  for (int j = 0; j < grid.n_cells(); ++j) {
    svg << num(x(grid.centre(j))) << " " << num(y(sum.band.upper(j))) << " L";
  }
  for (int j = grid.n_cells() - 1; j >= 0; --j) {
    svg << num(x(grid.centre(j))) << " " << num(y(sum.band.lower(j)));
    if (j > 0) svg << " L";
  }
  svg << " Z\"/>\n";

  // posterior mean
  svg << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.6\" points=\"";
  for (int j = 0; j < grid.n_cells(); ++j) {
    svg << num(x(grid.centre(j))) << "," << num(y(sum.mean(j))) << " ";
  }
  svg << "\"/>\n";

  // true rate overlay as a step function
  if (inputs.truth) {
    const RateFunction& t = *inputs.truth;
    svg << "<path fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.4\" "
        << "stroke-dasharray=\"6 4\" d=\"M" << num(x(t.t_a)) << " " << num(y(t.h.front()));
    double left = t.t_a;
    for (std::size_t j = 0; j < t.s.size(); ++j) {
      svg << " L" << num(x(t.s[j])) << " " << num(y(t.h[j]));
      svg << " L" << num(x(t.s[j])) << " " << num(y(t.h[j + 1]));
      left = t.s[j];
    }
    (void)left;
    svg << " L" << num(x(t.t_b)) << " " << num(y(t.h.back())) << "\"/>\n";
  }

  // calibration curve on a secondary radiocarbon-age axis, with the
  // determinations as a rug along the right edge
  if (inputs.curve != nullptr) {
    const CalibrationCurve& curve = *inputs.curve;
    double c14_lo = std::numeric_limits<double>::infinity(), c14_hi = -c14_lo;
    std::vector<std::pair<double, double>> pts;
    for (Eigen::Index i = 0; i < curve.cal_age.size(); ++i) {
      double cal = curve.cal_age(i);
      if (cal < grid.start || cal > grid.end) continue;
      pts.emplace_back(cal, curve.c14_age(i));
      c14_lo = std::min(c14_lo, curve.c14_age(i));
      c14_hi = std::max(c14_hi, curve.c14_age(i));
    }
    if (inputs.dets != nullptr) {
      for (const auto& d : *inputs.dets) {
        c14_lo = std::min(c14_lo, d.x);
        c14_hi = std::max(c14_hi, d.x);
      }
    }
    if (pts.size() >= 2 && c14_hi > c14_lo) {
      Scale yc{c14_lo, c14_hi, kTop + kPlotH, kTop};
      svg << "<polyline fill=\"none\" stroke=\"#7a7a7a\" stroke-width=\"1.1\" points=\"";
      for (const auto& [cal, age] : pts) svg << num(x(cal)) << "," << num(yc(age)) << " ";
      svg << "\"/>\n";
      if (inputs.dets != nullptr) {
        for (const auto& d : *inputs.dets) {
          double yy = yc(d.x);
          svg << "<line x1=\"" << num(kLeft + kPlotW) << "\" x2=\"" << num(kLeft + kPlotW + 10)
              << "\" y1=\"" << num(yy) << "\" y2=\"" << num(yy)
              << "\" stroke=\"#2ca02c\" stroke-width=\"1\" stroke-opacity=\"0.6\"/>\n";
        }
      }
      // right axis labels
      double cstep = tick_step(c14_hi - c14_lo, 6);
      for (double v = std::ceil(c14_lo / cstep) * cstep; v <= c14_hi; v += cstep) {
        svg << "<text x=\"" << num(kLeft + kPlotW + 14) << "\" y=\"" << num(yc(v) + 4)
            << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#7a7a7a\">" << v
            << "</text>\n";
      }
      svg << "<text x=\"" << kWidth - 12 << "\" y=\"" << kTop + kPlotH / 2
          << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#7a7a7a\" "
          << "transform=\"rotate(90 " << kWidth - 12 << " " << kTop + kPlotH / 2 << ")\" "
          << "text-anchor=\"middle\">radiocarbon age (14C yr BP)</text>\n";
    }
  }

  // axes
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kPlotW
      << "\" height=\"" << kPlotH << "\" fill=\"none\" stroke=\"black\"/>\n";
  double xstep = tick_step(grid.end - grid.start, 8);
  for (double v = std::ceil(grid.start / xstep) * xstep; v <= grid.end; v += xstep) {
    svg << "<line x1=\"" << num(x(v)) << "\" x2=\"" << num(x(v)) << "\" y1=\""
        << kTop + kPlotH << "\" y2=\"" << kTop + kPlotH + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(x(v)) << "\" y=\"" << kTop + kPlotH + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << v
        << "</text>\n";
  }
  double ystep = tick_step(rate_max, 6);
  for (double v = 0; v <= rate_max; v += ystep) {
    svg << "<line x1=\"" << kLeft - 5 << "\" x2=\"" << kLeft << "\" y1=\"" << num(y(v))
        << "\" y2=\"" << num(y(v)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << v
        << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << "calendar age (cal yr BP)</text>\n";
  svg << "<text x=\"18\" y=\"" << kTop + kPlotH / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 "
      << kTop + kPlotH / 2 << ")\" text-anchor=\"middle\">occurrence rate (events/yr)</text>\n";
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw DataError("cannot write plot: " + path);
  out << svg.str();
}

}  // namespace c14rate
