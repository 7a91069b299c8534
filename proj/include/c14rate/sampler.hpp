#pragma once

#include <cstdint>
#include <vector>

#include "c14rate/calibration.hpp"
#include "c14rate/ppmodel.hpp"
#include "c14rate/rng.hpp"

namespace c14rate {

// Reversible-jump Metropolis-within-Gibbs sampler for the joint posterior of
// the piecewise-constant rate and the latent calendar ages.  Each iteration
// first redraws every calendar age from its exact conditional (a categorical
// over grid-cell centres with weights calibration-likelihood x rate), then
// applies one randomly chosen rate move: height scaling, changepoint
// relocation, birth, or death.

struct ChainOptions {
  std::uint64_t seed = 0;  // must be set explicitly by callers
  long iterations = 100000;
  long burn_in = 50000;
  long thin = 10;
  double grid_step = 1.0;
  double move_constant = 0.4;  // c in the birth/death probabilities, in (0, 0.45]
  bool prior_only = false;     // drop all likelihood terms (sampler validation)
};

struct MoveStats {
  long height_proposed = 0, height_accepted = 0;
  long position_proposed = 0, position_accepted = 0;
  long birth_proposed = 0, birth_accepted = 0;
  long death_proposed = 0, death_accepted = 0;
  long ages_resampled = 0;
};

struct Sample {
  long iter = 0;
  RateFunction rate;
  std::vector<double> theta;  // latent calendar ages (grid-cell centres)
};

struct PosteriorSamples {
  double t_a = 0, t_b = 0;
  double grid_step = 1.0;
  long n_determinations = 0;
  PriorSpec prior;
  ChainOptions options;
  MoveStats stats;
  std::vector<Sample> samples;
};

// Per-k probabilities of the four move types: birth b_k = c min(1, p(k+1)/p(k)),
// death d_k = c min(1, p(k-1)/p(k)) with p the truncated Poisson pmf; the
// remainder splits evenly between height and position moves (all of it to
// height at k = 0, where there is no changepoint to relocate).
struct MoveProbabilities {
  double height = 0, position = 0, birth = 0, death = 0;
};
MoveProbabilities move_probabilities(const PriorSpec& prior, int k, double move_constant);

// Deterministic height split/merge used by birth and death.  Splitting height
// h at a point dividing its interval into widths (w1, w2) with ratio
// R = (1-u)/u gives h' = h R^{-w2/W} and h'' = h R^{w1/W}; merging is the
// width-weighted geometric mean, the exact inverse in real arithmetic.
struct HeightSplit {
  double lower = 0;  // h', on the younger part
  double upper = 0;  // h'', on the older part
};
HeightSplit split_height(double h, double ratio, double w1, double w2);
double merge_heights(double h_lower, double h_upper, double w1, double w2);

// Log acceptance ratio of a height move h_j -> h_new (multiplicative proposal
// h_new = h_j e^u, u ~ U(-1/2, 1/2)): likelihood ratio times
// (h_new/h_j)^alpha e^{-beta (h_new - h_j)}.  n_j is the event count and
// delta_j the length of interval j.  Set include_likelihood = false for
// prior-only runs.
double height_log_ratio(double h_old, double h_new, int n_j, double delta_j,
                        const PriorSpec& prior, bool include_likelihood);

// One exact categorical redraw of every calendar age given a fixed rate:
// cell j gets weight (unnormalised calibration weight at j) x rate at the
// cell centre.  This is the per-iteration age update exposed on its own, for
// validation and for one-off recalibration under a known rate.
std::vector<double> resample_calendar_ages(const std::vector<Determination>& dets,
                                           const CalibrationCurve& curve,
                                           const CalendarGrid& grid, const RateFunction& rate,
                                           Rng& rng);

// Fit with latent ages: determinations are calibrated on a grid over
// [t_a, t_b] and their calendar ages resampled each iteration.
PosteriorSamples run_chain(const std::vector<Determination>& dets,
                           const CalibrationCurve& curve, double t_a, double t_b,
                           const PriorSpec& prior, const ChainOptions& options);

// Fit with known event times (no calibration step); also the entry point for
// prior-only validation runs, which ignore the events entirely.
PosteriorSamples run_rate_chain(const EventSet& events, const PriorSpec& prior,
                                const ChainOptions& options);

}  // namespace c14rate
