#include <algorithm>
#include <cmath>
#include <vector>

#include "c14rate/errors.hpp"
#include "c14rate/sim.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace c14rate;

namespace {

RateFunction step_rate() {
  RateFunction r;
  r.t_a = 1750;
  r.t_b = 3300;
  r.s = {1950, 2300, 2700, 3100};
  r.h = {0.0, 0.06, 0.28, 0.08, 0.0};
  return r;
}

}  // namespace

TEST_CASE("a zero rate yields no events") {
  RateFunction z;
  z.t_a = 100;
  z.t_b = 900;
  z.h = {0.0};
  Rng rng(1);
  auto ev = sample_pp_events(z, rng);
  CHECK(ev.ages.empty());
  CHECK(ev.t_a == 100);
  CHECK(ev.t_b == 900);
}

TEST_CASE("event draws respect the piecewise structure") {
  auto rate = step_rate();
  const int draws = 400;

  long total = 0;
  std::vector<double> mid_counts, old_counts;  // two disjoint support pieces
  std::vector<double> pooled_mid;              // positions inside [2300, 2700)
  for (int d = 0; d < draws; ++d) {
    Rng rng(static_cast<std::uint64_t>(1000 + d));
    auto ev = sample_pp_events(rate, rng);
    total += ev.n();

    CHECK(std::is_sorted(ev.ages.begin(), ev.ages.end()));
    double mid = 0, old_side = 0;
    for (double a : ev.ages) {
      CHECK(a >= rate.t_a);
      CHECK(a <= rate.t_b);
      CHECK(rate_at(rate, a) > 0);  // never inside a zero-rate stretch
      if (a >= 2300 && a < 2700) {
        ++mid;
        pooled_mid.push_back(a);
      }
      if (a >= 1950 && a < 2300) ++old_side;
    }
    mid_counts.push_back(mid);
    old_counts.push_back(old_side);
  }

  SUBCASE("total count is Poisson with the integrated-rate mean") {
    // sum over 400 draws ~ Poisson(400 * 165); +/- 4 sigma
    double mean = draws * rate_integral(rate);
    CHECK(total > mean - 4 * std::sqrt(mean));
    CHECK(total < mean + 4 * std::sqrt(mean));
  }

  SUBCASE("per-piece counts match their own means") {
    CHECK(oracle::mean(mid_counts) == doctest::Approx(0.28 * 400).epsilon(0.05));
    CHECK(oracle::mean(old_counts) == doctest::Approx(0.06 * 350).epsilon(0.10));
  }

  SUBCASE("positions within a constant piece are uniform") {
    double ks = oracle::ks_statistic(pooled_mid, [](double x) { return (x - 2300) / 400.0; });
    // 1% critical value for this many pooled draws
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(pooled_mid.size())));
  }

  SUBCASE("counts in disjoint windows are uncorrelated") {
    CHECK(std::fabs(oracle::correlation(mid_counts, old_counts)) < 0.15);
  }
}

TEST_CASE("thinned sampling agrees with direct sampling in distribution") {
  // target: a two-step rate expressed as a function, dominated by a constant
  RateFunction target;
  target.t_a = 0;
  target.t_b = 100;
  target.s = {60};
  target.h = {0.1, 0.4};

  RateFunction envelope;
  envelope.t_a = 0;
  envelope.t_b = 100;
  envelope.h = {0.4};

  const int draws = 500;
  double young = 0, old_side = 0;
  for (int d = 0; d < draws; ++d) {
    Rng rng(static_cast<std::uint64_t>(7000 + d));
    auto ev = sample_pp_events_thinned([&](double t) { return rate_at(target, t); },
                                       envelope, rng);
    for (double a : ev.ages) (a < 60 ? young : old_side) += 1.0;
  }
  // expected means per draw: 0.1*60 = 6 young, 0.4*40 = 16 old
  CHECK(young / draws == doctest::Approx(6.0).epsilon(0.05));
  CHECK(old_side / draws == doctest::Approx(16.0).epsilon(0.05));

  SUBCASE("an envelope the target exceeds is rejected loudly") {
    RateFunction low;
    low.t_a = 0;
    low.t_b = 100;
    low.h = {0.2};  // below the target's 0.4 piece
    bool threw = false;
    for (int d = 0; d < 50 && !threw; ++d) {
      Rng rng(static_cast<std::uint64_t>(d));
      try {
        sample_pp_events_thinned([&](double t) { return rate_at(target, t); }, low, rng);
      } catch (const NumericalError&) {
        threw = true;
      }
    }
    CHECK(threw);
  }
}

TEST_CASE("forward model") {
  auto curve = fixtures::linear_curve(0, 1000, 1.0, 100.0, 5.0);
  std::vector<double> ages = {200, 300, 400, 500};

  SUBCASE("zero noise reproduces the curve exactly") {
    ForwardModelSpec spec;
    spec.sigma_obs = 0.0;
    spec.include_curve_error = false;
    Rng rng(3);
    auto dets = forward_model(ages, curve, spec, rng);
    REQUIRE(dets.size() == 4);
    CHECK(dets[0].id == "sim_000");
    CHECK(dets[3].id == "sim_003");
    for (std::size_t i = 0; i < dets.size(); ++i) {
      CHECK(dets[i].x == 100.0 + ages[i]);  // the curve's point estimate, untouched
      CHECK(dets[i].sigma == 0.0);
    }
  }

  SUBCASE("noise has the combined measurement and curve spread") {
    ForwardModelSpec spec;
    spec.sigma_obs = 12.0;
    std::vector<double> many(20000, 500.0);
    Rng rng(17);
    auto dets = forward_model(many, curve, spec, rng);
    std::vector<double> residuals;
    for (const auto& d : dets) {
      residuals.push_back(d.x - 600.0);
      CHECK(d.sigma == 12.0);
    }
    double expected_sd = std::sqrt(12.0 * 12.0 + 5.0 * 5.0);
    CHECK(std::fabs(oracle::mean(residuals)) < 4 * expected_sd / std::sqrt(20000.0));
    CHECK(oracle::sd(residuals) == doctest::Approx(expected_sd).epsilon(0.02));

    SUBCASE("curve error can be excluded") {
      Rng rng2(18);
      ForwardModelSpec bare = spec;
      bare.include_curve_error = false;
      auto d2 = forward_model(many, curve, bare, rng2);
      std::vector<double> r2;
      for (const auto& d : d2) r2.push_back(d.x - 600.0);
      CHECK(oracle::sd(r2) == doctest::Approx(12.0).epsilon(0.02));
    }
  }

  SUBCASE("ages outside the curve are refused") {
    ForwardModelSpec spec;
    Rng rng(3);
    CHECK_THROWS_AS(forward_model({1500.0}, curve, spec, rng), DataError);
  }
}

TEST_CASE("named scenarios") {
  CHECK(preset_names() == std::vector<std::string>{"uniform-phase", "four-changepoint",
                                                   "exp-growth"});
  CHECK_THROWS_AS(make_preset("no-such-scenario", 1), DataError);

  SUBCASE("uniform phase: exact count inside the phase") {
    auto p = make_preset("uniform-phase", 5);
    CHECK(p.t_a == 1850);
    CHECK(p.t_b == 2350);
    CHECK(p.events.n() == 40);
    for (double a : p.events.ages) {
      CHECK(a >= 2050);
      CHECK(a <= 2100);
    }
    REQUIRE(p.piecewise_truth.has_value());
    CHECK(rate_integral(*p.piecewise_truth) == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(rate_at(*p.piecewise_truth, 2075) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(rate_at(*p.piecewise_truth, 2000) == 0.0);

    PresetParams params;
    params.n_uniform = 12;
    auto small = make_preset("uniform-phase", 5, params);
    CHECK(small.events.n() == 12);
    CHECK(rate_integral(*small.piecewise_truth) == doctest::Approx(12.0).epsilon(1e-12));
  }

  SUBCASE("four changepoints: the documented step shape") {
    auto p = make_preset("four-changepoint", 9);
    REQUIRE(p.piecewise_truth.has_value());
    CHECK(p.piecewise_truth->s == std::vector<double>{1950, 2300, 2700, 3100});
    CHECK(p.piecewise_truth->h == std::vector<double>{0.0, 0.06, 0.28, 0.08, 0.0});
    CHECK(rate_integral(*p.piecewise_truth) == doctest::Approx(165.0).epsilon(1e-12));
    for (double a : p.events.ages) CHECK(rate_at(*p.piecewise_truth, a) > 0);
  }

  SUBCASE("exponential growth: normalisation pins the expected count") {
    PresetParams params;
    params.growth_r = 0.004;
    auto p = make_preset("exp-growth", 13, params);
    REQUIRE(p.exponential_truth.has_value());
    const auto& t = *p.exponential_truth;
    CHECK(t.r == 0.004);
    CHECK(t.c ==
          doctest::Approx(t.n_events * t.r / (std::exp(t.r * (t.a - t.b)) - 1.0)).epsilon(1e-12));

    // integral of the truth over its support equals the expected count
    double integral =
        oracle::simpson([&](double th) { return t.at(th); }, t.b + 1e-9, t.a, 20000);
    CHECK(integral == doctest::Approx(t.n_events).epsilon(1e-4));

    // support is (b, a]: zero at and below b, c at a
    CHECK(t.at(t.b) == 0.0);
    CHECK(t.at(t.a) == doctest::Approx(t.c).epsilon(1e-12));
    CHECK(t.at(t.a + 1) == 0.0);
    CHECK(t.at(5000.0) > t.at(5800.0));  // grows toward the present

    for (double a : p.events.ages) {
      CHECK(a > t.b);
      CHECK(a <= t.a);
    }
    // count near its expectation (sd ~ sqrt(500))
    CHECK(p.events.n() > 400);
    CHECK(p.events.n() < 600);
  }

  SUBCASE("scenario draws are seed-deterministic") {
    auto a = make_preset("four-changepoint", 77);
    auto b = make_preset("four-changepoint", 77);
    auto c = make_preset("four-changepoint", 78);
    CHECK(a.events.ages == b.events.ages);
    CHECK(a.events.ages != c.events.ages);
  }
}
