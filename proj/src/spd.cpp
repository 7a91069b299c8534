#include "c14rate/spd.hpp"

#include <algorithm>
#include <cmath>

#include "c14rate/errors.hpp"
#include "c14rate/rng.hpp"

namespace c14rate {

namespace {

// inverse-CDF draw of a grid cell from a normalised density
int draw_cell(const DensityGrid& density, Rng& rng) {
  double u = rng.uniform() / density.grid.step;  // target in cumulative value units
  double cum = 0;
  int last = density.grid.n_cells() - 1;
  for (int j = 0; j < last; ++j) {
    cum += density.values(j);
    if (u < cum) return j;
  }
  return last;
}

Eigen::ArrayXd replicate_spd(const std::vector<double>& thetas,
                             const std::vector<double>& sigmas, const CurveOnGrid& cg,
                             const CalendarGrid& grid, const CalibrationCurve& curve,
                             Rng& rng) {
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(grid.n_cells());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    CurveValue v = curve_at(curve, thetas[i]);
    double sd = std::sqrt(sigmas[i] * sigmas[i] + v.tau * v.tau);
    Determination sim{"rep", rng.normal(v.m, sd), sigmas[i]};
    sum += calibrate_one(sim, cg, grid).values;
  }
  return sum / static_cast<double>(thetas.size());
}

}  // namespace

DensityGrid spd(const std::vector<Determination>& dets, const CalibrationCurve& curve,
                const CalendarGrid& grid) {
  if (dets.empty()) throw DataError("SPD needs at least one determination");
  CurveOnGrid cg = curve_on_grid(curve, grid);
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(grid.n_cells());
  for (const auto& det : dets) sum += calibrate_one(det, cg, grid).values;
  return DensityGrid{grid, sum / static_cast<double>(dets.size()), true};
}

Eigen::ArrayXd pointwise_quantile(const Eigen::MatrixXd& rows, double q) {
  const Eigen::Index n = rows.rows();
  if (n < 1) throw DataError("quantile of an empty replicate set");
  Eigen::ArrayXd out(rows.cols());
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    for (Eigen::Index r = 0; r < n; ++r) column[static_cast<std::size_t>(r)] = rows(r, c);
    std::sort(column.begin(), column.end());
    // linear interpolation between order statistics at rank q (n - 1)
    double pos = q * static_cast<double>(n - 1);
    auto lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    out(c) = (lo + 1 < column.size()) ? column[lo] + frac * (column[lo + 1] - column[lo])
                                      : column[lo];
  }
  return out;
}

BootstrapResult spd_bootstrap(const std::vector<Determination>& dets,
                              const CalibrationCurve& curve, const CalendarGrid& grid,
                              int replicates, double level, std::uint64_t seed) {
  if (replicates < 2) throw DataError("bootstrap needs at least 2 replicates");
  if (!(level > 0 && level < 1)) throw DataError("band level must be in (0, 1)");
  DensityGrid base = spd(dets, curve, grid);
  CurveOnGrid cg = curve_on_grid(curve, grid);

  const auto n = dets.size();
  Eigen::MatrixXd reps(replicates, grid.n_cells());
  for (int r = 0; r < replicates; ++r) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(r));
    std::vector<double> thetas(n), sigmas(n);
    for (std::size_t i = 0; i < n; ++i) {
      thetas[i] = grid.centre(draw_cell(base, rng));
      sigmas[i] = dets[i].sigma;  // keep the observed error structure
    }
    reps.row(r) = replicate_spd(thetas, sigmas, cg, grid, curve, rng).transpose();
  }

  double tail = (1.0 - level) / 2.0;
  return BootstrapResult{base,
                         QuantileBand{pointwise_quantile(reps, tail),
                                      pointwise_quantile(reps, 1.0 - tail), level}};
}

EnvelopeResult spd_mc_envelope(const DensityGrid& null_model, int n,
                               const CalibrationCurve& curve, const CalendarGrid& grid,
                               int replicates, double level, std::uint64_t seed,
                               double sigma_obs, const DensityGrid* observed) {
  if (!null_model.normalised ||
      std::abs(null_model.values.sum() * null_model.grid.step - 1.0) > 1e-6) {
    throw DataError("null model must be a normalised density on the analysis grid");
  }
  if (null_model.grid.n_cells() != grid.n_cells()) {
    throw DataError("null model grid does not match the analysis grid");
  }
  if (n < 1 || replicates < 2) throw DataError("envelope needs n >= 1 and replicates >= 2");
  CurveOnGrid cg = curve_on_grid(curve, grid);

  Eigen::MatrixXd reps(replicates, grid.n_cells());
  std::vector<double> thetas(static_cast<std::size_t>(n));
  std::vector<double> sigmas(static_cast<std::size_t>(n), sigma_obs);
  for (int r = 0; r < replicates; ++r) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(r));
    for (auto& theta : thetas) theta = grid.centre(draw_cell(null_model, rng));
    reps.row(r) = replicate_spd(thetas, sigmas, cg, grid, curve, rng).transpose();
  }

  double tail = (1.0 - level) / 2.0;
  EnvelopeResult result{QuantileBand{pointwise_quantile(reps, tail),
                                     pointwise_quantile(reps, 1.0 - tail), level},
                        std::nullopt};
  if (observed != nullptr) {
    int outside = 0;
    for (int j = 0; j < grid.n_cells(); ++j) {
      double v = observed->values(j);
      if (v < result.band.lower(j) || v > result.band.upper(j)) ++outside;
    }
    result.exit_fraction = static_cast<double>(outside) / grid.n_cells();
  }
  return result;
}

}  // namespace c14rate
