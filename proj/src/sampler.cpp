#include "c14rate/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "c14rate/errors.hpp"

namespace c14rate {

namespace {

// proposed heights outside this window are rejected outright, keeping the
// chain away from regions where exp/log lose all precision
constexpr double kMinHeight = 1e-12;
constexpr double kMaxHeight = 1e12;

bool height_ok(double h) { return h > kMinHeight && h < kMaxHeight; }

struct Workspace {
  CalendarGrid grid;
  std::vector<Eigen::ArrayXd> like;  // unnormalised calibration weights per determination
  std::vector<Eigen::ArrayXd> cdf;   // prefix sums of `like`, size n_cells + 1
};

// first cell whose centre is >= s
int boundary_cell(const CalendarGrid& grid, double s) {
  int idx = static_cast<int>(std::ceil((s - grid.start) / grid.step - 0.5));
  idx = std::clamp(idx, 0, grid.n_cells());
  while (idx > 0 && grid.centre(idx - 1) >= s) --idx;
  while (idx < grid.n_cells() && grid.centre(idx) < s) ++idx;
  return idx;
}

// events in [a, b), ages sorted ascending
int count_in(const std::vector<double>& sorted_ages, double a, double b) {
  auto lo = std::lower_bound(sorted_ages.begin(), sorted_ages.end(), a);
  auto hi = std::lower_bound(sorted_ages.begin(), sorted_ages.end(), b);
  return static_cast<int>(hi - lo);
}

std::string state_dump(const RateFunction& rate) {
  std::ostringstream os;
  os << "k=" << rate.k() << " s=[";
  for (double s : rate.s) os << s << " ";
  os << "] h=[";
  for (double h : rate.h) os << h << " ";
  os << "]";
  return os.str();
}

void check_finite(double log_ratio, const RateFunction& rate, const char* move) {
  if (std::isnan(log_ratio)) {
    throw NumericalError(std::string("non-finite acceptance ratio in ") + move + " move; " +
                         state_dump(rate));
  }
}

RateFunction init_rate(const PriorSpec& prior, double t_a, double t_b, Rng& rng) {
  RateFunction rate;
  rate.t_a = t_a;
  rate.t_b = t_b;

  double u = rng.uniform();
  int k = prior.k_max;
  double cum = 0;
  for (int j = 0; j <= prior.k_max; ++j) {
    cum += truncated_poisson_pmf(j, prior.n_lambda, prior.k_max);
    if (u < cum) {
      k = j;
      break;
    }
  }

  // even-numbered order statistics of 2k+1 uniforms
  for (;;) {
    std::vector<double> pts(2 * static_cast<std::size_t>(k) + 1);
    for (auto& p : pts) p = rng.uniform(t_a, t_b);
    std::sort(pts.begin(), pts.end());
    rate.s.clear();
    for (int j = 0; j < k; ++j) rate.s.push_back(pts[2 * static_cast<std::size_t>(j) + 1]);
    bool strict = t_a < (rate.s.empty() ? t_b : rate.s.front());
    for (std::size_t j = 1; strict && j < rate.s.size(); ++j) strict = rate.s[j - 1] < rate.s[j];
    if (strict && (rate.s.empty() || rate.s.back() < t_b)) break;
  }

  rate.h.resize(static_cast<std::size_t>(k) + 1);
  for (auto& h : rate.h) h = std::max(rng.gamma(prior.alpha, prior.beta), kMinHeight * 2);
  return rate;
}

// Step 1: redraw every latent age from its exact conditional, the categorical
// over cell centres with weights like_i(cell) * lambda(cell centre).  The draw
// inverts the cumulative weights hierarchically: piece first (rate is constant
// within a piece), then cell within the piece through the likelihood prefix
// sums, which is exact and O(k + log m) per determination.
void update_calendar_ages(const RateFunction& rate, const Workspace& ws,
                          std::vector<double>& theta, Rng& rng, MoveStats& stats) {
  const int k = rate.k();
  std::vector<int> bcell(static_cast<std::size_t>(k) + 2);
  bcell[0] = 0;
  for (int j = 0; j < k; ++j) bcell[static_cast<std::size_t>(j) + 1] = boundary_cell(ws.grid, rate.s[static_cast<std::size_t>(j)]);
  bcell[static_cast<std::size_t>(k) + 1] = ws.grid.n_cells();

  std::vector<double> mass(static_cast<std::size_t>(k) + 1);
  for (std::size_t i = 0; i < ws.like.size(); ++i) {
    const double* cdf = ws.cdf[i].data();
    double total = 0;
    for (int p = 0; p <= k; ++p) {
      mass[static_cast<std::size_t>(p)] =
          rate.h[static_cast<std::size_t>(p)] * (cdf[bcell[static_cast<std::size_t>(p) + 1]] - cdf[bcell[static_cast<std::size_t>(p)]]);
      total += mass[static_cast<std::size_t>(p)];
    }
    if (!(total > 0) || !std::isfinite(total)) {
      throw NumericalError("calendar-age update has no mass for determination index " +
                           std::to_string(i) + "; " + state_dump(rate));
    }
    double u = rng.uniform() * total;
    int p = 0;
    while (p < k && u >= mass[static_cast<std::size_t>(p)]) {
      u -= mass[static_cast<std::size_t>(p)];
      ++p;
    }
    int lo = bcell[static_cast<std::size_t>(p)], hi = bcell[static_cast<std::size_t>(p) + 1];
    double target = cdf[lo] + u / rate.h[static_cast<std::size_t>(p)];
    // smallest cell j in [lo, hi) with cdf[j + 1] > target
    const double* first = cdf + lo + 1;
    const double* last = cdf + hi + 1;
    int j = lo + static_cast<int>(std::upper_bound(first, last, target) - first);
    j = std::min(j, hi - 1);
    theta[i] = ws.grid.centre(j);
  }
  stats.ages_resampled += static_cast<long>(ws.like.size());
}

}  // namespace

MoveProbabilities move_probabilities(const PriorSpec& prior, int k, double move_constant) {
  MoveProbabilities mp;
  double up = (k < prior.k_max) ? prior.n_lambda / (k + 1.0) : 0.0;
  double down = (k > 0) ? k / prior.n_lambda : 0.0;
  mp.birth = move_constant * std::min(1.0, up);
  mp.death = move_constant * std::min(1.0, down);
  double rest = 1.0 - mp.birth - mp.death;
  if (k == 0) {
    mp.height = rest;
    mp.position = 0.0;
  } else {
    mp.height = rest / 2.0;
    mp.position = rest / 2.0;
  }
  return mp;
}

HeightSplit split_height(double h, double ratio, double w1, double w2) {
  double t = std::log(ratio) / (w1 + w2);
  return {h * std::exp(-w2 * t), h * std::exp(w1 * t)};
}

double merge_heights(double h_lower, double h_upper, double w1, double w2) {
  return std::exp((w1 * std::log(h_lower) + w2 * std::log(h_upper)) / (w1 + w2));
}

double height_log_ratio(double h_old, double h_new, int n_j, double delta_j,
                        const PriorSpec& prior, bool include_likelihood) {
  double log_scale = std::log(h_new) - std::log(h_old);
  double ratio = prior.alpha * log_scale - prior.beta * (h_new - h_old);
  if (include_likelihood) ratio += n_j * log_scale - (h_new - h_old) * delta_j;
  return ratio;
}

namespace {

struct MoveContext {
  const PriorSpec& prior;
  const ChainOptions& options;
  const std::vector<double>& sorted_ages;  // empty in prior-only runs
  bool with_likelihood;
};

void move_height(RateFunction& rate, const MoveContext& ctx, Rng& rng, MoveStats& stats) {
  ++stats.height_proposed;
  const int k = rate.k();
  auto j = rng.index(static_cast<std::size_t>(k) + 1);
  double u = rng.uniform(-0.5, 0.5);
  double h_new = rate.h[j] * std::exp(u);
  if (!height_ok(h_new)) return;

  double lo = (j == 0) ? rate.t_a : rate.s[j - 1];
  double hi = (j == static_cast<std::size_t>(k)) ? rate.t_b : rate.s[j];
  int n_j = count_in(ctx.sorted_ages, lo, hi);
  double log_ratio = height_log_ratio(rate.h[j], h_new, n_j, hi - lo, ctx.prior,
                                      ctx.with_likelihood);
  check_finite(log_ratio, rate, "height");
  if (std::log(rng.uniform()) < log_ratio) {
    rate.h[j] = h_new;
    ++stats.height_accepted;
  }
}

void move_position(RateFunction& rate, const MoveContext& ctx, Rng& rng, MoveStats& stats) {
  ++stats.position_proposed;
  const int k = rate.k();
  auto c = rng.index(static_cast<std::size_t>(k));
  double s_old = rate.s[c];
  double lo = (c == 0) ? rate.t_a : rate.s[c - 1];
  double hi = (c + 1 == static_cast<std::size_t>(k)) ? rate.t_b : rate.s[c + 1];
  double s_new = rng.uniform(lo, hi);
  if (s_new == lo || s_new == hi || s_new == s_old) return;

  double log_ratio = std::log(s_new - lo) + std::log(hi - s_new) - std::log(s_old - lo) -
                     std::log(hi - s_old);
  if (ctx.with_likelihood) {
    // events between the old and new location switch interval; the exposure
    // integral changes by (h_below - h_above) * (s_new - s_old)
    double h_below = rate.h[c], h_above = rate.h[c + 1];
    int moved = (s_new > s_old) ? count_in(ctx.sorted_ages, s_old, s_new)
                                : count_in(ctx.sorted_ages, s_new, s_old);
    double to = (s_new > s_old) ? h_below : h_above;
    double from = (s_new > s_old) ? h_above : h_below;
    log_ratio += moved * (std::log(to) - std::log(from));
    log_ratio -= (h_below - h_above) * (s_new - s_old);
  }
  check_finite(log_ratio, rate, "position");
  if (std::log(rng.uniform()) < log_ratio) {
    rate.s[c] = s_new;
    ++stats.position_accepted;
  }
}

// Log acceptance ratio of a birth that splits the piece [lo, hi) (height h,
// event counts n1/n2 on either side of the new point) at widths (w1, w2) into
// heights (h_lo, h_hi), where the state grows from k to k + 1 changepoints.
double birth_log_ratio(int k, double span, double w1, double w2, double h, double h_lo,
                       double h_hi, int n1, int n2, const MoveContext& ctx) {
  const PriorSpec& prior = ctx.prior;
  double W = w1 + w2;
  double lh = std::log(h), lh_lo = std::log(h_lo), lh_hi = std::log(h_hi);

  double ratio = 0;
  if (ctx.with_likelihood) {
    ratio += n1 * (lh_lo - lh) + n2 * (lh_hi - lh);
    ratio -= h_lo * w1 + h_hi * w2 - h * W;
  }
  // prior on k, changepoint spacing, and the extra height
  ratio += std::log(prior.n_lambda) - std::log(k + 1.0);
  ratio += std::log((2.0 * k + 3.0) * (2.0 * k + 2.0)) - 2.0 * std::log(span) +
           std::log(w1 * w2 / W);
  ratio += prior.alpha * std::log(prior.beta) - std::lgamma(prior.alpha) +
           (prior.alpha - 1.0) * (lh_lo + lh_hi - lh) - prior.beta * (h_lo + h_hi - h);
  // proposal: reverse death picks one of k+1 changepoints; forward birth drew
  // s* uniformly on the span
  double b_k = move_probabilities(prior, k, ctx.options.move_constant).birth;
  double d_k1 = move_probabilities(prior, k + 1, ctx.options.move_constant).death;
  ratio += std::log(d_k1 * span) - std::log(b_k * (k + 1.0));
  // Jacobian of (h, u) -> (h_lo, h_hi)
  ratio += 2.0 * std::log(h_lo + h_hi) - lh;
  return ratio;
}

void move_birth(RateFunction& rate, const MoveContext& ctx, Rng& rng, MoveStats& stats) {
  ++stats.birth_proposed;
  const int k = rate.k();
  double s_star = rng.uniform(rate.t_a, rate.t_b);
  double u = rng.uniform();

  auto it = std::upper_bound(rate.s.begin(), rate.s.end(), s_star);
  auto p = static_cast<std::size_t>(it - rate.s.begin());
  double lo = (p == 0) ? rate.t_a : rate.s[p - 1];
  double hi = (p == rate.s.size()) ? rate.t_b : rate.s[p];
  if (s_star == lo || s_star == hi || u <= 0.0) return;

  double w1 = s_star - lo, w2 = hi - s_star;
  HeightSplit split = split_height(rate.h[p], (1.0 - u) / u, w1, w2);
  if (!height_ok(split.lower) || !height_ok(split.upper)) return;

  int n1 = count_in(ctx.sorted_ages, lo, s_star);
  int n2 = count_in(ctx.sorted_ages, s_star, hi);
  double log_ratio = birth_log_ratio(k, rate.span(), w1, w2, rate.h[p], split.lower,
                                     split.upper, n1, n2, ctx);
  check_finite(log_ratio, rate, "birth");
  if (std::log(rng.uniform()) < log_ratio) {
    rate.s.insert(rate.s.begin() + static_cast<std::ptrdiff_t>(p), s_star);
    rate.h[p] = split.lower;
    rate.h.insert(rate.h.begin() + static_cast<std::ptrdiff_t>(p) + 1, split.upper);
    ++stats.birth_accepted;
  }
}

void move_death(RateFunction& rate, const MoveContext& ctx, Rng& rng, MoveStats& stats) {
  ++stats.death_proposed;
  const int k = rate.k();
  auto c = rng.index(static_cast<std::size_t>(k));
  double lo = (c == 0) ? rate.t_a : rate.s[c - 1];
  double hi = (c + 1 == static_cast<std::size_t>(k)) ? rate.t_b : rate.s[c + 1];
  double w1 = rate.s[c] - lo, w2 = hi - rate.s[c];
  double merged = merge_heights(rate.h[c], rate.h[c + 1], w1, w2);
  if (!height_ok(merged)) return;

  int n1 = count_in(ctx.sorted_ages, lo, rate.s[c]);
  int n2 = count_in(ctx.sorted_ages, rate.s[c], hi);
  // the reverse move is a birth from the merged (k-1)-changepoint state
  double log_ratio = -birth_log_ratio(k - 1, rate.span(), w1, w2, merged, rate.h[c],
                                      rate.h[c + 1], n1, n2, ctx);
  check_finite(log_ratio, rate, "death");
  if (std::log(rng.uniform()) < log_ratio) {
    rate.s.erase(rate.s.begin() + static_cast<std::ptrdiff_t>(c));
    rate.h[c] = merged;
    rate.h.erase(rate.h.begin() + static_cast<std::ptrdiff_t>(c) + 1);
    ++stats.death_accepted;
  }
}

void update_rate(RateFunction& rate, const MoveContext& ctx, Rng& rng, MoveStats& stats) {
  MoveProbabilities mp = move_probabilities(ctx.prior, rate.k(), ctx.options.move_constant);
  double u = rng.uniform();
  if (u < mp.height) {
    move_height(rate, ctx, rng, stats);
  } else if (u < mp.height + mp.position) {
    move_position(rate, ctx, rng, stats);
  } else if (u < mp.height + mp.position + mp.birth) {
    move_birth(rate, ctx, rng, stats);
  } else {
    move_death(rate, ctx, rng, stats);
  }
}

void validate_options(const ChainOptions& options) {
  if (options.iterations < 1 || options.burn_in < 0 || options.burn_in >= options.iterations) {
    throw DataError("chain needs 0 <= burn_in < iterations");
  }
  if (options.thin < 1) throw DataError("thin must be >= 1");
  if (!(options.grid_step > 0)) throw DataError("grid step must be positive");
  if (!(options.move_constant > 0 && options.move_constant <= 0.45)) {
    throw DataError("move constant must lie in (0, 0.45]");
  }
}

PosteriorSamples run_loop(const PriorSpec& prior, const ChainOptions& options, double t_a,
                          double t_b, long n_determinations, const Workspace* ws,
                          const std::vector<double>* fixed_ages) {
  validate_options(options);
  Rng rng(options.seed);

  PosteriorSamples out;
  out.t_a = t_a;
  out.t_b = t_b;
  out.grid_step = options.grid_step;
  out.n_determinations = n_determinations;
  out.prior = prior;
  out.options = options;

  RateFunction rate = init_rate(prior, t_a, t_b, rng);

  std::vector<double> theta;
  if (ws != nullptr) {
    // initial ages: one categorical draw from each independent calibration density
    theta.resize(ws->like.size());
    for (std::size_t i = 0; i < ws->like.size(); ++i) {
      const double* cdf = ws->cdf[i].data();
      const auto m = static_cast<std::size_t>(ws->grid.n_cells());
      double target = rng.uniform() * cdf[m];
      int j = static_cast<int>(std::upper_bound(cdf + 1, cdf + m + 1, target) - (cdf + 1));
      theta[i] = ws->grid.centre(std::min(j, static_cast<int>(m) - 1));
    }
  }

  std::vector<double> sorted_ages;
  if (!options.prior_only && fixed_ages != nullptr) {
    sorted_ages = *fixed_ages;
    std::sort(sorted_ages.begin(), sorted_ages.end());
  }

  long kept_target = (options.iterations - options.burn_in) / options.thin;
  out.samples.reserve(static_cast<std::size_t>(std::max(0L, kept_target)));

  MoveContext ctx{prior, options, sorted_ages, !options.prior_only};
  for (long it = 1; it <= options.iterations; ++it) {
    if (ws != nullptr && !options.prior_only) {
      update_calendar_ages(rate, *ws, theta, rng, out.stats);
      sorted_ages = theta;
      std::sort(sorted_ages.begin(), sorted_ages.end());
    }
    update_rate(rate, ctx, rng, out.stats);
    if (it > options.burn_in && (it - options.burn_in) % options.thin == 0) {
      out.samples.push_back(Sample{it, rate, theta});
    }
  }
  return out;
}

}  // namespace

namespace {

Workspace make_workspace(const std::vector<Determination>& dets, const CalibrationCurve& curve,
                         const CalendarGrid& grid) {
  Workspace ws{grid, {}, {}};
  CurveOnGrid cg = curve_on_grid(curve, grid);
  const auto m = static_cast<std::size_t>(grid.n_cells());
  for (const auto& det : dets) {
    Eigen::ArrayXd w = calibration_weights(det, cg);
    // Max-weight check, not sum > 0: Eigen's vectorised exp clamps rather
    // than underflows, so an off-curve determination yields subnormal noise.
    if (!(w.maxCoeff() > std::numeric_limits<double>::min())) {
      throw DataError("determination " + det.id + " has no calibration mass inside [" +
                      std::to_string(grid.start) + ", " + std::to_string(grid.end) + "]");
    }
    Eigen::ArrayXd cdf(m + 1);
    cdf(0) = 0;
    for (std::size_t j = 0; j < m; ++j) cdf(static_cast<Eigen::Index>(j) + 1) = cdf(static_cast<Eigen::Index>(j)) + w(static_cast<Eigen::Index>(j));
    ws.like.push_back(std::move(w));
    ws.cdf.push_back(std::move(cdf));
  }
  return ws;
}

}  // namespace

std::vector<double> resample_calendar_ages(const std::vector<Determination>& dets,
                                           const CalibrationCurve& curve,
                                           const CalendarGrid& grid, const RateFunction& rate,
                                           Rng& rng) {
  validate(rate);
  Workspace ws = make_workspace(dets, curve, grid);
  std::vector<double> theta(dets.size(), grid.centre(0));
  MoveStats stats;
  update_calendar_ages(rate, ws, theta, rng, stats);
  return theta;
}

PosteriorSamples run_chain(const std::vector<Determination>& dets,
                           const CalibrationCurve& curve, double t_a, double t_b,
                           const PriorSpec& prior, const ChainOptions& options) {
  if (dets.empty()) throw DataError("chain needs at least one determination");
  Workspace ws = make_workspace(dets, curve, CalendarGrid(t_a, t_b, options.grid_step));
  return run_loop(prior, options, t_a, t_b, static_cast<long>(dets.size()), &ws, nullptr);
}

PosteriorSamples run_rate_chain(const EventSet& events, const PriorSpec& prior,
                                const ChainOptions& options) {
  if (!(events.t_a < events.t_b)) throw DataError("event bounds require t_a < t_b");
  for (double age : events.ages) {
    if (age < events.t_a || age > events.t_b) {
      throw DataError("event age " + std::to_string(age) + " outside bounds");
    }
  }
  return run_loop(prior, options, events.t_a, events.t_b, static_cast<long>(events.ages.size()),
                  nullptr, options.prior_only ? nullptr : &events.ages);
}

}  // namespace c14rate
