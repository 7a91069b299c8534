#include "c14rate/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "c14rate/errors.hpp"

namespace c14rate {

EventSet sample_pp_events(const RateFunction& rate, Rng& rng) {
  validate(rate);
  EventSet events{rate.t_a, rate.t_b, {}};
  double left = rate.t_a;
  for (std::size_t j = 0; j <= rate.s.size(); ++j) {
    double right = (j < rate.s.size()) ? rate.s[j] : rate.t_b;
    double mean = rate.h[j] * (right - left);
    if (mean > 0) {
      long n = rng.poisson(mean);
      for (long i = 0; i < n; ++i) events.ages.push_back(rng.uniform(left, right));
    }
    left = right;
  }
  std::sort(events.ages.begin(), events.ages.end());
  return events;
}

EventSet sample_pp_events_thinned(const std::function<double(double)>& rate,
                                  const RateFunction& envelope, Rng& rng) {
  EventSet candidates = sample_pp_events(envelope, rng);
  EventSet events{envelope.t_a, envelope.t_b, {}};
  for (double age : candidates.ages) {
    double lambda = rate(age);
    double bound = rate_at(envelope, age);
    if (lambda > bound * (1.0 + 1e-12)) {
      throw NumericalError("thinning envelope exceeded at age " + std::to_string(age));
    }
    if (rng.uniform() * bound < lambda) events.ages.push_back(age);
  }
  return events;
}

std::vector<Determination> forward_model(const std::vector<double>& ages,
                                         const CalibrationCurve& curve,
                                         const ForwardModelSpec& spec, Rng& rng) {
  if (!(spec.sigma_obs >= 0)) throw DataError("observational error must be >= 0");
  std::vector<Determination> dets;
  dets.reserve(ages.size());
  char id[16];
  for (std::size_t i = 0; i < ages.size(); ++i) {
    CurveValue v = curve_at(curve, ages[i]);
    double var = spec.sigma_obs * spec.sigma_obs;
    if (spec.include_curve_error) var += v.tau * v.tau;
    std::snprintf(id, sizeof id, "sim_%03zu", i);
    double x = var > 0 ? rng.normal(v.m, std::sqrt(var)) : v.m;
    dets.push_back(Determination{id, x, spec.sigma_obs});
  }
  return dets;
}

double ExponentialTruth::at(double theta) const {
  if (theta <= b || theta > a) return 0.0;
  return c * std::exp(r * (a - theta));
}

std::vector<std::string> preset_names() {
  return {"uniform-phase", "four-changepoint", "exp-growth"};
}

PresetResult make_preset(const std::string& name, std::uint64_t seed,
                         const PresetParams& params) {
  Rng rng(seed);
  PresetResult out;
  out.name = name;

  if (name == "uniform-phase") {
    // exactly n events, uniform on the phase [2050, 2100]
    out.t_a = 1850;
    out.t_b = 2350;
    RateFunction truth{out.t_a, out.t_b, {2050, 2100}, {0.0, params.n_uniform / 50.0, 0.0}};
    out.events = EventSet{out.t_a, out.t_b, {}};
    for (int i = 0; i < params.n_uniform; ++i) {
      out.events.ages.push_back(rng.uniform(2050.0, 2100.0));
    }
    std::sort(out.events.ages.begin(), out.events.ages.end());
    out.piecewise_truth = truth;
    return out;
  }

  if (name == "four-changepoint") {
    out.t_a = 1750;
    out.t_b = 3300;
    RateFunction truth{out.t_a, out.t_b, {1950, 2300, 2700, 3100},
                       {0.0, 0.06, 0.28, 0.08, 0.0}};
    out.events = sample_pp_events(truth, rng);
    out.piecewise_truth = truth;
    return out;
  }

  if (name == "exp-growth") {
    out.t_a = 3800;
    out.t_b = 6200;
    ExponentialTruth truth;
    truth.r = params.growth_r;
    truth.c = truth.n_events * truth.r / (std::exp(truth.r * (truth.a - truth.b)) - 1.0);
    // dominating piecewise envelope: the rate increases with age, so each
    // 25-yr slice is bounded by its value at the old end
    RateFunction envelope{out.t_a, out.t_b, {}, {}};
    for (double s = truth.b; s < truth.a - 1e-9; s += 25.0) envelope.s.push_back(s);
    envelope.s.push_back(truth.a);
    envelope.h.assign(envelope.s.size() + 1, 0.0);
    for (std::size_t j = 1; j < envelope.s.size(); ++j) {
      // the rate decreases with theta, so the slice [s_{j-1}, s_j) is bounded
      // by the raw exponential at its young edge (the support cutoff at b
      // would wrongly zero the first slice's bound)
      envelope.h[j] = truth.c * std::exp(truth.r * (truth.a - envelope.s[j - 1]));
    }
    out.events = sample_pp_events_thinned([&truth](double t) { return truth.at(t); },
                                          envelope, rng);
    out.exponential_truth = truth;
    return out;
  }

  throw DataError("unknown preset '" + name + "'");
}

}  // namespace c14rate
