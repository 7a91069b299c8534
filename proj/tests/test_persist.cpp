#include <cmath>
#include <string>
#include <vector>

#include "c14rate/calibration.hpp"
#include "c14rate/errors.hpp"
#include "c14rate/persist.hpp"
#include "c14rate/sampler.hpp"
#include "c14rate/sim.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace c14rate;

namespace {

PosteriorSamples small_run() {
  EventSet ev;
  ev.t_a = 0;
  ev.t_b = 300;
  ev.ages = {40, 90, 95, 180, 240};
  ChainOptions opt;
  opt.seed = 12;
  opt.iterations = 400;
  opt.burn_in = 100;
  opt.thin = 3;
  return run_rate_chain(ev, default_prior(5, 0, 300), opt);
}

}  // namespace

TEST_CASE("doubles survive the text round trip bit for bit") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 1.7976931348623157e308, -0.0, 12345.678901234567}) {
    double back = std::stod(format_double(v));
    CHECK(back == v);
  }
  CHECK(format_double(2141.0) == "2141");
}

TEST_CASE("posterior samples round-trip through the line format") {
  fixtures::TempDir tmp;
  auto run = small_run();
  REQUIRE(!run.samples.empty());

  auto path = tmp.file("samples.jsonl");
  write_samples(run, path);
  auto back = read_samples(path);

  CHECK(back.t_a == run.t_a);
  CHECK(back.t_b == run.t_b);
  CHECK(back.grid_step == run.grid_step);
  CHECK(back.n_determinations == run.n_determinations);
  CHECK(back.prior.n_lambda == run.prior.n_lambda);
  CHECK(back.prior.alpha == run.prior.alpha);
  CHECK(back.prior.beta == run.prior.beta);
  CHECK(back.prior.k_max == run.prior.k_max);
  REQUIRE(back.samples.size() == run.samples.size());
  for (std::size_t i = 0; i < run.samples.size(); ++i) {
    CHECK(back.samples[i].iter == run.samples[i].iter);
    CHECK(back.samples[i].rate.s == run.samples[i].rate.s);
    CHECK(back.samples[i].rate.h == run.samples[i].rate.h);
    CHECK(back.samples[i].rate.t_a == run.t_a);
    CHECK(back.samples[i].theta == run.samples[i].theta);
  }

  SUBCASE("serialisation to a string matches the file") {
    CHECK(samples_to_string(run) == fixtures::read_text(path));
  }

  SUBCASE("the first line carries the format tag") {
    auto text = fixtures::read_text(path);
    CHECK(text.rfind("{\"format\":\"c14rate-posterior\"", 0) == 0);
  }
}

TEST_CASE("malformed sample files are rejected with locations") {
  fixtures::TempDir tmp;
  auto path = tmp.file("bad.jsonl");

  SUBCASE("wrong format tag") {
    fixtures::write_text(path, "{\"format\":\"something-else\",\"version\":1}\n");
    CHECK_THROWS_AS(read_samples(path), ParseError);
  }

  SUBCASE("unsupported version") {
    fixtures::write_text(path, "{\"format\":\"c14rate-posterior\",\"version\":99}\n");
    CHECK_THROWS_AS(read_samples(path), ParseError);
  }

  SUBCASE("missing header") {
    fixtures::write_text(path, "{\"iter\":1,\"k\":0,\"s\":[],\"h\":[1.0],\"theta\":[]}\n");
    CHECK_THROWS_AS(read_samples(path), ParseError);
  }

  SUBCASE("record whose k disagrees with s carries its line number") {
    auto run = small_run();
    std::string text = samples_to_string(run);
    // corrupt the first record: k = 999 cannot match its s array
    auto pos = text.find("\n");
    auto next = text.find("\"k\":", pos);
    REQUIRE(next != std::string::npos);
    text = text.substr(0, next) + "\"k\":999," + text.substr(text.find(",", next + 4) + 1);
    fixtures::write_text(path, text);
    try {
      read_samples(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }

  SUBCASE("unreadable path") {
    CHECK_THROWS_AS(read_samples(tmp.file("absent.jsonl")), DataError);
  }
}

TEST_CASE("density CSV round trip") {
  fixtures::TempDir tmp;
  auto curve = fixtures::synthetic_curve();
  CalendarGrid grid(2000, 2400, 2);
  auto dens = calibrate_one(Determination{"d", 2141, 30}, curve, grid);

  auto path = tmp.file("density.csv");
  write_density_csv(dens, path, {"source: test"});
  auto back = read_density_csv(path);

  CHECK(back.grid.start == grid.start);
  CHECK(back.grid.end == grid.end);
  CHECK(back.grid.step == grid.step);
  CHECK(back.normalised);
  for (int j = 0; j < grid.n_cells(); ++j) {
    // written at 17 significant digits, then renormalised on read
    CHECK(back.values(j) == doctest::Approx(dens.values(j)).epsilon(1e-12));
  }

  SUBCASE("provenance lines are comments before the header") {
    auto text = fixtures::read_text(path);
    CHECK(text.rfind("# c14rate " + std::string(kVersion), 0) == 0);
    CHECK(text.find("# source: test") != std::string::npos);
    CHECK(text.find("cal_age,density") != std::string::npos);
  }

  SUBCASE("a custom value column name is honoured") {
    write_density_csv(dens, path, {}, "spd");
    CHECK(fixtures::read_text(path).find("cal_age,spd") != std::string::npos);
    CHECK_NOTHROW(read_density_csv(path));  // any cal_age,* header reads back
  }

  SUBCASE("unnormalised and irregular files are refused") {
    fixtures::write_text(path, "cal_age,density\n10,0.5\n20,0.5\n");
    CHECK_THROWS_AS(read_density_csv(path), DataError);  // integrates to 10

    fixtures::write_text(path, "cal_age,density\n10,0.05\n20,0.05\n35,0.0\n");
    CHECK_THROWS_AS(read_density_csv(path), DataError);  // uneven spacing

    fixtures::write_text(path, "cal_age,density\n10,0.1\n");
    CHECK_THROWS_AS(read_density_csv(path), DataError);  // single row

    fixtures::write_text(path, "wrong,header\n10,0.05\n20,0.05\n");
    CHECK_THROWS_AS(read_density_csv(path), ParseError);

    fixtures::write_text(path, "cal_age,density\n10,abc\n20,0.05\n");
    CHECK_THROWS_AS(read_density_csv(path), ParseError);
  }
}

TEST_CASE("band CSV layout") {
  fixtures::TempDir tmp;
  CalendarGrid grid(0, 30, 10);
  Eigen::ArrayXd mean(3);
  mean << 1.0, 2.0, 3.0;
  QuantileBand band;
  band.lower = Eigen::ArrayXd::Constant(3, 0.5);
  band.upper = Eigen::ArrayXd::Constant(3, 4.5);
  band.level = 0.9;

  auto path = tmp.file("band.csv");
  write_band_csv(grid, mean, band, "mean", path, {"level: 0.9"});
  auto text = fixtures::read_text(path);
  CHECK(text.find("cal_age,mean,lower,upper") != std::string::npos);
  CHECK(text.find("\n5,1,0.5,4.5") != std::string::npos);
  CHECK(text.find("\n25,3,0.5,4.5") != std::string::npos);
}

TEST_CASE("histogram CSV layouts") {
  fixtures::TempDir tmp;

  SUBCASE("count pmf") {
    auto path = tmp.file("counts.csv");
    write_histogram_csv({0.25, 0.5, 0.25}, path, {});
    auto text = fixtures::read_text(path);
    CHECK(text.find("k,probability") != std::string::npos);
    CHECK(text.find("\n0,0.25") != std::string::npos);
    CHECK(text.find("\n1,0.5") != std::string::npos);
    CHECK(text.find("\n2,0.25") != std::string::npos);
  }

  SUBCASE("indexed histogram blocks") {
    Histogram h1{{0, 10, 20}, {0.08, 0.02}};
    Histogram h2{{0, 10, 20}, {0.01, 0.09}};
    auto path = tmp.file("locations.csv");
    write_indexed_histograms_csv({h1, h2}, path, {});
    auto text = fixtures::read_text(path);
    CHECK(text.find("index,bin_start,bin_end,density") != std::string::npos);
    CHECK(text.find("\n1,0,10," + format_double(0.08)) != std::string::npos);
    CHECK(text.find("\n2,10,20," + format_double(0.09)) != std::string::npos);
  }
}

TEST_CASE("determination table round trip") {
  fixtures::TempDir tmp;
  std::vector<Determination> dets = {{"lab-1", 2141.5, 30}, {"lab-2", 2200, 25.5}};
  auto path = tmp.file("dets.csv");
  write_determinations_csv(dets, path, {"origin: simulated"});
  auto back = load_determinations(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "lab-1");
  CHECK(back[0].x == 2141.5);
  CHECK(back[1].sigma == 25.5);
  CHECK(fixtures::read_text(path).find("# origin: simulated") != std::string::npos);
}

TEST_CASE("truth sidecar round trip") {
  fixtures::TempDir tmp;

  SUBCASE("piecewise truth reads back as a rate") {
    auto preset = make_preset("four-changepoint", 3);
    auto path = tmp.file("truth.json");
    write_truth_json(preset, 3, path);
    auto rate = read_truth_rate(path);
    CHECK(rate.t_a == preset.piecewise_truth->t_a);
    CHECK(rate.s == preset.piecewise_truth->s);
    CHECK(rate.h == preset.piecewise_truth->h);
  }

  SUBCASE("exponential truth cannot be read as a piecewise rate") {
    auto preset = make_preset("exp-growth", 3);
    auto path = tmp.file("truth.json");
    write_truth_json(preset, 3, path);
    CHECK_THROWS_AS(read_truth_rate(path), DataError);
  }

  SUBCASE("garbage is a parse error") {
    auto path = tmp.file("truth.json");
    fixtures::write_text(path, "not json at all");
    CHECK_THROWS_AS(read_truth_rate(path), ParseError);
    CHECK_THROWS_AS(read_truth_rate(tmp.file("absent.json")), DataError);
  }
}

TEST_CASE("move statistics sidecar") {
  fixtures::TempDir tmp;
  auto run = small_run();
  auto path = tmp.file("moves.json");
  write_move_stats(run.stats, run, path);
  auto text = fixtures::read_text(path);
  CHECK(text.find("height") != std::string::npos);
  CHECK(text.find("birth") != std::string::npos);
  CHECK(text.find("proposed") != std::string::npos);
}
