#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "c14rate/calibration.hpp"
#include "c14rate/ppmodel.hpp"
#include "c14rate/rng.hpp"

namespace c14rate {

// Forward simulation: event times from an inhomogeneous Poisson process, then
// synthetic determinations through the measurement model.

// Exact sampler for piecewise-constant rates: per interval, a Poisson count
// with mean h_j * (s_{j+1} - s_j) and uniform positions.  Ages are returned
// sorted ascending.
EventSet sample_pp_events(const RateFunction& rate, Rng& rng);

// General rates by thinning against a dominating piecewise-constant envelope;
// throws NumericalError if the envelope is ever exceeded.
EventSet sample_pp_events_thinned(const std::function<double(double)>& rate,
                                  const RateFunction& envelope, Rng& rng);

struct ForwardModelSpec {
  double sigma_obs = 25.0;
  bool include_curve_error = true;  // X ~ N(m(theta), sigma^2 [+ tau(theta)^2])
};

// One synthetic determination per event age, ids "sim_000", "sim_001", ...
std::vector<Determination> forward_model(const std::vector<double>& ages,
                                         const CalibrationCurve& curve,
                                         const ForwardModelSpec& spec, Rng& rng);

// True rate of the exponential-growth scenario: c e^{r (a - theta)} on
// (b, a], zero elsewhere; c is pinned so the expected count is n_events.
struct ExponentialTruth {
  double r = 0.003;
  double a = 6000;
  double b = 4000;
  double c = 0;
  double n_events = 500;

  double at(double theta) const;
};

// Named simulation scenario: seeded event draw plus the generating truth.
//   uniform-phase     : exactly n events uniform on [2050, 2100], window
//                       [1850, 2350] (n defaults to 40)
//   four-changepoint  : rate 0/0.06/0.28/0.08/0 with changes at 1950, 2300,
//                       2700, 3100, window [1750, 3300] (expected count 165)
//   exp-growth        : exponential growth, r defaults to 0.003, expected
//                       count 500, window [3800, 6200]
struct PresetParams {
  int n_uniform = 40;   // uniform-phase event count
  double growth_r = 0.003;  // exp-growth rate per year
};

struct PresetResult {
  std::string name;
  double t_a = 0, t_b = 0;
  EventSet events;
  std::optional<RateFunction> piecewise_truth;
  std::optional<ExponentialTruth> exponential_truth;
};

// Throws DataError for unknown names.
PresetResult make_preset(const std::string& name, std::uint64_t seed,
                         const PresetParams& params = {});

std::vector<std::string> preset_names();

}  // namespace c14rate
