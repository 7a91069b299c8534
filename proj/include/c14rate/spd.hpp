#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "c14rate/calibration.hpp"

namespace c14rate {

// Pointwise quantile band over a grid (lower/upper at levels (1-level)/2 and
// 1-(1-level)/2).
struct QuantileBand {
  Eigen::ArrayXd lower;
  Eigen::ArrayXd upper;
  double level = 0.95;
};

// Summed probability distribution: the average of the individual calibration
// densities (itself a density over calendar age).
DensityGrid spd(const std::vector<Determination>& dets, const CalibrationCurve& curve,
                const CalendarGrid& grid);

// Per-cell quantile of each column of a replicates-by-cells matrix, linearly
// interpolated between order statistics.
Eigen::ArrayXd pointwise_quantile(const Eigen::MatrixXd& rows, double q);

struct BootstrapResult {
  DensityGrid estimate;  // SPD of the observed determinations
  QuantileBand band;
};

// Bootstrap band around the SPD: each replicate draws n calendar ages from
// the observed SPD (discrete over cells), simulates new determinations
// X ~ N(m(theta), sigma_i^2 + tau(theta)^2) reusing the original sigmas by
// index, recalibrates, and re-sums; the band is the pointwise quantiles of
// the replicate SPDs.  Replicate r depends only on (seed, r).
BootstrapResult spd_bootstrap(const std::vector<Determination>& dets,
                              const CalibrationCurve& curve, const CalendarGrid& grid,
                              int replicates, double level, std::uint64_t seed);

struct EnvelopeResult {
  QuantileBand band;
  // fraction of cells where the observed SPD leaves the envelope (set when an
  // observed SPD is supplied)
  std::optional<double> exit_fraction;
};

// Monte-Carlo envelope under a null model: each replicate draws n calendar
// ages from the null density, simulates determinations with observational
// error sigma_obs, recalibrates and re-sums.  null_model must be normalised
// on the same grid.
EnvelopeResult spd_mc_envelope(const DensityGrid& null_model, int n,
                               const CalibrationCurve& curve, const CalendarGrid& grid,
                               int replicates, double level, std::uint64_t seed,
                               double sigma_obs = 25.0,
                               const DensityGrid* observed = nullptr);

}  // namespace c14rate
