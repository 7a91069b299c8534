#pragma once

#include <vector>

#include "c14rate/sampler.hpp"
#include "c14rate/spd.hpp"

namespace c14rate {

// Posterior summaries of a sampled rate.  Interval and changepoint indices in
// the conditional summaries are 1-based and count from the OLDEST end (index
// 1 is the largest cal BP changepoint / the oldest interval), matching how
// phase chronologies are usually read.

struct RateSummary {
  CalendarGrid grid;
  Eigen::ArrayXd mean;
  QuantileBand band;
  long n_realisations = 0;
};

// Pointwise mean and quantile band of the rate across kept states.
RateSummary mean_rate(const PosteriorSamples& samples, const CalendarGrid& grid,
                      double level);

// Posterior pmf of the changepoint count, indices 0..k_max (sums to 1).
std::vector<double> changepoint_counts(const PosteriorSamples& samples);

struct Histogram {
  std::vector<double> edges;    // size n_bins + 1
  std::vector<double> density;  // size n_bins; sums to 1 when multiplied by widths
};

// Conditional on k == k_cond: histogram of each changepoint location (index
// 1 = oldest), binned over [t_a, t_b] at bin_width.  Throws DataError when no
// kept state has k_cond changepoints.
std::vector<Histogram> changepoint_locations(const PosteriorSamples& samples, int k_cond,
                                             double bin_width);

// Conditional on k == k_cond: histogram of each interval height (index 1 =
// oldest interval), n_bins equal bins over [0, max height seen].
std::vector<Histogram> conditional_heights(const PosteriorSamples& samples, int k_cond,
                                           int n_bins);

// Pointwise mean rate over the states with k == k_cond only.
RateSummary conditional_mean_rate(const PosteriorSamples& samples, int k_cond,
                                  const CalendarGrid& grid, double level);

// Evenly spaced subset of kept states (count = 1 gives the last state,
// count = n gives all of them), for spaghetti plots and export.
std::vector<Sample> export_realisations(const PosteriorSamples& samples, int count);

}  // namespace c14rate
