#pragma once

#include <vector>

#include "c14rate/calibration.hpp"

namespace c14rate {

// Piecewise-constant occurrence rate on [t_a, t_b] (cal yr BP, so t_a is the
// recent bound and t_b the old one).  Changepoints s are strictly increasing
// with t_a < s_1 < ... < s_k < t_b; heights[j] applies on [s_j, s_{j+1}) with
// s_0 = t_a and s_{k+1} = t_b (intervals left-closed in ascending cal BP).
struct RateFunction {
  double t_a = 0;
  double t_b = 0;
  std::vector<double> s;
  std::vector<double> h;  // size s.size() + 1

  int k() const { return static_cast<int>(s.size()); }
  double span() const { return t_b - t_a; }
};

// Validates the ordering/shape invariants above; throws DataError.
void validate(const RateFunction& rate);

// lambda(theta): heights[j] on [s_j, s_{j+1}), 0 outside [t_a, t_b).
double rate_at(const RateFunction& rate, double theta);

// integral of lambda over [t_a, t_b] = sum_j h_j * (s_{j+1} - s_j)
double rate_integral(const RateFunction& rate);

// Event times (calendar ages within [t_a, t_b]).
struct EventSet {
  double t_a = 0;
  double t_b = 0;
  std::vector<double> ages;

  int n() const { return static_cast<int>(ages.size()); }
};

// Number of events with s < age <= t (the counting-process increment).
int count_events(const EventSet& events, double s, double t);

// Events per rate interval, using the same [s_j, s_{j+1}) convention as
// rate_at; size k+1.
std::vector<int> interval_counts(const RateFunction& rate, const std::vector<double>& ages);

// Inhomogeneous-Poisson log likelihood of the events under the rate:
// sum_i log lambda(theta_i) - integral(lambda).  -inf when an event falls
// where the rate is zero.
double log_likelihood(const RateFunction& rate, const EventSet& events);

// Prior over (k, s, h): k ~ Poisson(n_lambda) truncated at k_max; given k the
// changepoints are distributed as the even-numbered order statistics of
// 2k + 1 uniforms on [t_a, t_b]; heights are iid Gamma(alpha, beta) (beta is
// a rate).
struct PriorSpec {
  double n_lambda = 3.0;
  double alpha = 1.0;
  double beta = 0.1;
  int k_max = 30;
};

// pmf of the truncated Poisson prior on k; zero outside [0, k_max].
double truncated_poisson_pmf(int k, double n_lambda, int k_max);

// log prior density of a rate function under the given prior; throws
// DataError on invalid shapes.
double log_prior(const RateFunction& rate, const PriorSpec& prior);

// Default prior for n determinations on [t_a, t_b]: n_lambda = 3, alpha = 1,
// beta = (t_b - t_a) / n, so the prior mean rate integrates to n events.
PriorSpec default_prior(int n, double t_a, double t_b);

// Default analysis window: calibrate each determination independently on the
// curve's full range, take the smallest 0.05% quantile and the largest 99.95%
// quantile, and round outward to whole years.
std::pair<double, double> default_bounds(const std::vector<Determination>& dets,
                                         const CalibrationCurve& curve);

}  // namespace c14rate
