#include <cmath>
#include <vector>

#include "c14rate/errors.hpp"
#include "c14rate/posterior.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace c14rate;

namespace {

Sample make_state(long iter, double t_a, double t_b, std::vector<double> s,
                  std::vector<double> h) {
  Sample st;
  st.iter = iter;
  st.rate.t_a = t_a;
  st.rate.t_b = t_b;
  st.rate.s = std::move(s);
  st.rate.h = std::move(h);
  return st;
}

PosteriorSamples make_samples(double t_a, double t_b, std::vector<Sample> states) {
  PosteriorSamples ps;
  ps.t_a = t_a;
  ps.t_b = t_b;
  ps.grid_step = 1.0;
  ps.prior = PriorSpec{};
  ps.samples = std::move(states);
  return ps;
}

}  // namespace

TEST_CASE("mean rate over hand-built states") {
  auto ps = make_samples(0, 100,
                         {make_state(1, 0, 100, {}, {1.0}), make_state(2, 0, 100, {}, {3.0})});
  CalendarGrid grid(0, 100, 10);
  auto summary = mean_rate(ps, grid, 0.95);

  REQUIRE(summary.mean.size() == grid.n_cells());
  CHECK(summary.n_realisations == 2);
  for (int j = 0; j < grid.n_cells(); ++j) {
    CHECK(summary.mean(j) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(summary.band.lower(j) ==
          doctest::Approx(oracle::quantile_type7({1.0, 3.0}, 0.025)).epsilon(1e-12));
    CHECK(summary.band.upper(j) ==
          doctest::Approx(oracle::quantile_type7({1.0, 3.0}, 0.975)).epsilon(1e-12));
  }

  SUBCASE("a single state gives a degenerate band equal to the state") {
    auto one = make_samples(0, 100, {make_state(1, 0, 100, {50}, {1.0, 4.0})});
    auto s1 = mean_rate(one, grid, 0.95);
    for (int j = 0; j < grid.n_cells(); ++j) {
      double expected = grid.centre(j) < 50 ? 1.0 : 4.0;
      CHECK(s1.mean(j) == expected);
      CHECK(s1.band.lower(j) == expected);
      CHECK(s1.band.upper(j) == expected);
    }
  }

  SUBCASE("empty sample sets and bad levels are errors") {
    auto none = make_samples(0, 100, {});
    CHECK_THROWS_AS(mean_rate(none, grid, 0.95), DataError);
    CHECK_THROWS_AS(mean_rate(ps, grid, 1.0), DataError);
    CHECK_THROWS_AS(mean_rate(ps, grid, 0.0), DataError);
  }
}

TEST_CASE("quantile band matches a sort-based oracle on varied states") {
  std::vector<Sample> states;
  std::vector<double> heights = {0.2, 0.9, 1.4, 2.2, 3.1, 0.1, 5.0};
  for (std::size_t i = 0; i < heights.size(); ++i) {
    states.push_back(make_state(static_cast<long>(i), 0, 10, {}, {heights[i]}));
  }
  auto ps = make_samples(0, 10, states);
  CalendarGrid grid(0, 10, 5);
  auto summary = mean_rate(ps, grid, 0.8);

  CHECK(summary.mean(0) == doctest::Approx(oracle::mean(heights)).epsilon(1e-12));
  CHECK(summary.band.lower(0) ==
        doctest::Approx(oracle::quantile_type7(heights, 0.1)).epsilon(1e-12));
  CHECK(summary.band.upper(0) ==
        doctest::Approx(oracle::quantile_type7(heights, 0.9)).epsilon(1e-12));
}

TEST_CASE("changepoint count distribution") {
  auto ps = make_samples(0, 100, {make_state(1, 0, 100, {}, {1.0}),
                                  make_state(2, 0, 100, {}, {2.0}),
                                  make_state(3, 0, 100, {40}, {1.0, 2.0})});
  auto pmf = changepoint_counts(ps);
  REQUIRE(pmf.size() == static_cast<std::size_t>(ps.prior.k_max) + 1);
  CHECK(pmf[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pmf[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  double total = 0;
  for (double p : pmf) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pmf[5] == 0.0);

  auto none = make_samples(0, 100, {});
  CHECK_THROWS_AS(changepoint_counts(none), DataError);
}

TEST_CASE("changepoint locations are indexed oldest first") {
  // every state has the same two changepoints at 30 and 70
  std::vector<Sample> states;
  for (int i = 0; i < 5; ++i) states.push_back(make_state(i, 0, 100, {30, 70}, {1, 2, 3}));
  auto ps = make_samples(0, 100, states);

  auto hists = changepoint_locations(ps, 2, 10.0);
  REQUIRE(hists.size() == 2);

  // histogram 0 is index 1, the OLDEST changepoint (largest cal BP): 70
  REQUIRE(hists[0].edges.size() == 11);
  CHECK(hists[0].edges.front() == 0.0);
  CHECK(hists[0].edges.back() == 100.0);
  for (std::size_t b = 0; b < hists[0].density.size(); ++b) {
    double lo = hists[0].edges[b];
    CHECK(hists[0].density[b] == doctest::Approx(lo == 70.0 ? 0.1 : 0.0).epsilon(1e-12));
    CHECK(hists[1].density[b] == doctest::Approx(lo == 30.0 ? 0.1 : 0.0).epsilon(1e-12));
  }

  SUBCASE("densities integrate to one") {
    for (const auto& h : hists) {
      double mass = 0;
      for (std::size_t b = 0; b < h.density.size(); ++b) {
        mass += h.density[b] * (h.edges[b + 1] - h.edges[b]);
      }
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("a bin width that does not divide the window truncates the last bin") {
    auto ragged = changepoint_locations(ps, 2, 30.0);
    CHECK(ragged[0].edges.back() == 100.0);
    CHECK(ragged[0].edges[ragged[0].edges.size() - 2] == 90.0);
    double mass = 0;
    for (std::size_t b = 0; b < ragged[0].density.size(); ++b) {
      mass += ragged[0].density[b] * (ragged[0].edges[b + 1] - ragged[0].edges[b]);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("conditioning on an absent count is an error") {
    CHECK_THROWS_AS(changepoint_locations(ps, 1, 10.0), DataError);
    CHECK_THROWS_AS(changepoint_locations(ps, 0, 10.0), DataError);   // k_cond < 1
    CHECK_THROWS_AS(changepoint_locations(ps, 2, -5.0), DataError);  // bad width
  }
}

TEST_CASE("conditional heights are indexed oldest first") {
  // states with k = 1: heights (young, old) = (2, 6) and (2, 6) again
  std::vector<Sample> states = {make_state(1, 0, 100, {40}, {2.0, 6.0}),
                                make_state(2, 0, 100, {60}, {2.0, 6.0})};
  auto ps = make_samples(0, 100, states);

  auto hists = conditional_heights(ps, 1, 12);
  REQUIRE(hists.size() == 2);

  // histogram 0 is index 1 (oldest interval, height 6); histogram 1 holds 2
  auto mode_centre = [](const Histogram& h) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < h.density.size(); ++b) {
      if (h.density[b] > h.density[best]) best = b;
    }
    return 0.5 * (h.edges[best] + h.edges[best + 1]);
  };
  CHECK(std::fabs(mode_centre(hists[0]) - 6.0) < 0.5);
  CHECK(std::fabs(mode_centre(hists[1]) - 2.0) < 0.5);

  for (const auto& h : hists) {
    double mass = 0;
    for (std::size_t b = 0; b < h.density.size(); ++b) {
      mass += h.density[b] * (h.edges[b + 1] - h.edges[b]);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.edges.front() == 0.0);
    CHECK(h.edges.back() >= 6.0);  // covers the largest height seen
  }

  CHECK_THROWS_AS(conditional_heights(ps, 3, 12), DataError);  // no k = 3 states
  CHECK_THROWS_AS(conditional_heights(ps, 1, 0), DataError);
}

TEST_CASE("conditional mean rate equals the mean over the matching subset") {
  std::vector<Sample> states = {make_state(1, 0, 100, {}, {1.0}),
                                make_state(2, 0, 100, {50}, {1.0, 3.0}),
                                make_state(3, 0, 100, {20}, {2.0, 4.0}),
                                make_state(4, 0, 100, {}, {5.0})};
  auto ps = make_samples(0, 100, states);
  CalendarGrid grid(0, 100, 4);

  auto cond = conditional_mean_rate(ps, 1, grid, 0.9);
  auto only = make_samples(0, 100, {states[1], states[2]});
  auto direct = mean_rate(only, grid, 0.9);

  CHECK(cond.n_realisations == 2);
  for (int j = 0; j < grid.n_cells(); ++j) {
    CHECK(cond.mean(j) == direct.mean(j));
    CHECK(cond.band.lower(j) == direct.band.lower(j));
    CHECK(cond.band.upper(j) == direct.band.upper(j));
  }

  SUBCASE("law of total expectation across k") {
    auto overall = mean_rate(ps, grid, 0.9);
    auto pmf = changepoint_counts(ps);
    auto c0 = conditional_mean_rate(ps, 0, grid, 0.9);
    for (int j = 0; j < grid.n_cells(); ++j) {
      double mixed = pmf[0] * c0.mean(j) + pmf[1] * cond.mean(j);
      CHECK(overall.mean(j) == doctest::Approx(mixed).epsilon(1e-12));
    }
  }
}

TEST_CASE("realisation export picks an even spread ending at the last state") {
  std::vector<Sample> states;
  for (int i = 0; i < 10; ++i) states.push_back(make_state(i + 1, 0, 10, {}, {double(i)}));
  auto ps = make_samples(0, 10, states);

  auto all = export_realisations(ps, 10);
  REQUIRE(all.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(all[static_cast<std::size_t>(i)].iter == i + 1);

  auto one = export_realisations(ps, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].iter == 10);  // the most recent kept state

  auto five = export_realisations(ps, 5);
  REQUIRE(five.size() == 5);
  CHECK(five.back().iter == 10);
  for (std::size_t i = 1; i < five.size(); ++i) CHECK(five[i].iter > five[i - 1].iter);

  CHECK_THROWS_AS(export_realisations(ps, 0), DataError);
  CHECK_THROWS_AS(export_realisations(ps, 11), DataError);
  auto none = make_samples(0, 10, {});
  CHECK_THROWS_AS(export_realisations(none, 1), DataError);
}
