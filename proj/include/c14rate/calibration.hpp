#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace c14rate {

// Calendar ages are in cal yr BP (before 1950 AD): larger numbers are older.
// Radiocarbon ages are in 14C yr BP.

// Regular lattice of calendar-age cells over [start, end].  Cell j has centre
// start + (j + 1/2) * step; densities and rates are evaluated at centres.
struct CalendarGrid {
  double start = 0;
  double end = 0;
  double step = 1.0;

  CalendarGrid() = default;
  // (end - start) must be an integral number of steps
  CalendarGrid(double start, double end, double step);

  int n_cells() const { return n_cells_; }
  double centre(int j) const { return start + (j + 0.5) * step; }

 private:
  int n_cells_ = 0;
};

// Function values on a CalendarGrid; `normalised` means sum(values)*step == 1
// within 1e-9 (a probability density over calendar age).
struct DensityGrid {
  CalendarGrid grid;
  Eigen::ArrayXd values;
  bool normalised = false;
};

// Calibration curve: point estimate m(theta) of the 14C age of calendar age
// theta, with one-sigma curve uncertainty tau(theta).  Knots are stored in
// ascending calendar age and interpolated linearly in between.
struct CalibrationCurve {
  Eigen::ArrayXd cal_age;
  Eigen::ArrayXd c14_age;
  Eigen::ArrayXd error;

  double min_cal() const { return cal_age(0); }
  double max_cal() const { return cal_age(cal_age.size() - 1); }
};

struct CurveValue {
  double m = 0;    // interpolated 14C age
  double tau = 0;  // interpolated one-sigma curve error
};

// One radiocarbon determination: lab measurement x +/- sigma (14C yr BP).
struct Determination {
  std::string id;
  double x = 0;
  double sigma = 0;
};

// Parse an IntCal-format curve file: '#' lines are comments, data rows are
// "calBP,c14age,error[,extra columns ignored]" in either sort order.
// Throws ParseError (malformed field, with line number) or DataError
// (missing file, duplicate cal_age, fewer than 2 records, negative error).
CalibrationCurve load_curve(const std::string& path);

// Parse a determination table: header "id,c14_age,sigma", one row per lab
// measurement.  Throws ParseError with line numbers, DataError on emptiness.
std::vector<Determination> load_determinations(const std::string& path);

// Linear interpolation of (m, tau) at theta; exact hits on a knot return the
// knot values bit-for-bit.  Throws DataError outside the curve's range
// (never extrapolates).
CurveValue curve_at(const CalibrationCurve& curve, double theta);

// Curve evaluated at every cell centre of a grid, precomputed once when many
// determinations share the same grid.
struct CurveOnGrid {
  Eigen::ArrayXd m;     // 14C age at each cell centre
  Eigen::ArrayXd tau2;  // squared curve error at each cell centre
};
CurveOnGrid curve_on_grid(const CalibrationCurve& curve, const CalendarGrid& grid);

// Unnormalised calibration weights: cell j gets the normal density of x at
// mean m(c_j) with variance sigma^2 + tau(c_j)^2.
Eigen::ArrayXd calibration_weights(const Determination& det, const CurveOnGrid& cg);

// Calibration density of one determination on a grid: the weights above,
// normalised to integrate to 1 over the grid.  Throws DataError when the
// determination has no mass anywhere on the grid (all weights underflow).
DensityGrid calibrate_one(const Determination& det, const CalibrationCurve& curve,
                          const CalendarGrid& grid);
DensityGrid calibrate_one(const Determination& det, const CurveOnGrid& cg,
                          const CalendarGrid& grid);

}  // namespace c14rate
