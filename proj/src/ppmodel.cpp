#include "c14rate/ppmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "c14rate/errors.hpp"

namespace c14rate {

void validate(const RateFunction& rate) {
  if (!(rate.t_a < rate.t_b)) throw DataError("rate bounds require t_a < t_b");
  if (rate.h.size() != rate.s.size() + 1) {
    throw DataError("rate needs exactly one more height than changepoints");
  }
  double prev = rate.t_a;
  for (double s : rate.s) {
    if (!(prev < s)) throw DataError("changepoints must be strictly increasing inside bounds");
    prev = s;
  }
  if (!(prev < rate.t_b)) throw DataError("changepoints must be strictly increasing inside bounds");
  for (double h : rate.h) {
    if (!(h >= 0) || !std::isfinite(h)) throw DataError("heights must be finite and >= 0");
  }
}

double rate_at(const RateFunction& rate, double theta) {
  if (theta < rate.t_a || theta >= rate.t_b) return 0.0;
  // first changepoint strictly above theta; theta in [s_j, s_{j+1})
  auto it = std::upper_bound(rate.s.begin(), rate.s.end(), theta);
  return rate.h[static_cast<std::size_t>(it - rate.s.begin())];
}

double rate_integral(const RateFunction& rate) {
  double total = 0;
  double left = rate.t_a;
  for (std::size_t j = 0; j < rate.s.size(); ++j) {
    total += rate.h[j] * (rate.s[j] - left);
    left = rate.s[j];
  }
  total += rate.h.back() * (rate.t_b - left);
  return total;
}

int count_events(const EventSet& events, double s, double t) {
  int n = 0;
  for (double age : events.ages) {
    if (age > s && age <= t) ++n;
  }
  return n;
}

std::vector<int> interval_counts(const RateFunction& rate, const std::vector<double>& ages) {
  std::vector<int> counts(rate.s.size() + 1, 0);
  for (double age : ages) {
    if (age < rate.t_a || age >= rate.t_b) continue;
    auto it = std::upper_bound(rate.s.begin(), rate.s.end(), age);
    ++counts[static_cast<std::size_t>(it - rate.s.begin())];
  }
  return counts;
}

double log_likelihood(const RateFunction& rate, const EventSet& events) {
  double ll = -rate_integral(rate);
  for (double age : events.ages) {
    double lambda = rate_at(rate, age);
    if (lambda <= 0) return -std::numeric_limits<double>::infinity();
    ll += std::log(lambda);
  }
  return ll;
}

double truncated_poisson_pmf(int k, double n_lambda, int k_max) {
  if (k < 0 || k > k_max) return 0.0;
  // unnormalised log pmf k log(n_lambda) - lgamma(k+1); normalise over 0..k_max
  double log_num = k * std::log(n_lambda) - std::lgamma(k + 1.0);
  double norm = 0;
  for (int j = 0; j <= k_max; ++j) {
    norm += std::exp(j * std::log(n_lambda) - std::lgamma(j + 1.0));
  }
  return std::exp(log_num) / norm;
}

double log_prior(const RateFunction& rate, const PriorSpec& prior) {
  validate(rate);
  const int k = rate.k();
  if (k > prior.k_max) return -std::numeric_limits<double>::infinity();
  double lp = std::log(truncated_poisson_pmf(k, prior.n_lambda, prior.k_max));

  // even-numbered order statistics of 2k+1 uniforms on [t_a, t_b]:
  // (2k+1)! / L^{2k+1} * prod_j (s_{j+1} - s_j), with s_0 = t_a, s_{k+1} = t_b
  const double L = rate.span();
  lp += std::lgamma(2.0 * k + 2.0) - (2.0 * k + 1.0) * std::log(L);
  double left = rate.t_a;
  for (double s : rate.s) {
    lp += std::log(s - left);
    left = s;
  }
  lp += std::log(rate.t_b - left);

  for (double h : rate.h) {
    lp += prior.alpha * std::log(prior.beta) - std::lgamma(prior.alpha) +
          (prior.alpha - 1.0) * std::log(h) - prior.beta * h;
  }
  return lp;
}

PriorSpec default_prior(int n, double t_a, double t_b) {
  if (n < 1 || !(t_a < t_b)) throw DataError("default prior needs n >= 1 and t_a < t_b");
  return PriorSpec{3.0, 1.0, (t_b - t_a) / n, 30};
}

std::pair<double, double> default_bounds(const std::vector<Determination>& dets,
                                         const CalibrationCurve& curve) {
  if (dets.empty()) throw DataError("default bounds need at least one determination");
  // whole-curve grid at 1-yr cells, shrunk to an integral span
  double lo = std::ceil(curve.min_cal());
  double hi = std::floor(curve.max_cal());
  CalendarGrid grid(lo, lo + std::floor(hi - lo), 1.0);
  CurveOnGrid cg = curve_on_grid(curve, grid);

  double t_a = std::numeric_limits<double>::infinity();
  double t_b = -std::numeric_limits<double>::infinity();
  for (const auto& det : dets) {
    DensityGrid dens = calibrate_one(det, cg, grid);
    double target_lo = 0.0005, target_hi = 0.9995;
    double cum = 0;
    double q_lo = grid.centre(0), q_hi = grid.centre(grid.n_cells() - 1);
    bool lo_found = false;
    for (int j = 0; j < grid.n_cells(); ++j) {
      cum += dens.values(j) * grid.step;
      if (!lo_found && cum >= target_lo) {
        q_lo = grid.centre(j);
        lo_found = true;
      }
      if (cum >= target_hi) {
        q_hi = grid.centre(j);
        break;
      }
    }
    t_a = std::min(t_a, q_lo);
    t_b = std::max(t_b, q_hi);
  }
  return {std::floor(t_a), std::ceil(t_b)};
}

}  // namespace c14rate
