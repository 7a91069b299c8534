#include "c14rate/persist.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "c14rate/errors.hpp"
#include "c14rate/sim.hpp"

namespace c14rate {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "c14rate-posterior";

json options_to_json(const ChainOptions& o) {
  return json{{"seed", o.seed},           {"iterations", o.iterations},
              {"burn_in", o.burn_in},     {"thin", o.thin},
              {"grid_step", o.grid_step}, {"move_constant", o.move_constant},
              {"prior_only", o.prior_only}};
}

json prior_to_json(const PriorSpec& p) {
  return json{{"n_lambda", p.n_lambda}, {"alpha", p.alpha}, {"beta", p.beta},
              {"k_max", p.k_max}};
}

void header_from_json(const json& h, PosteriorSamples& out, const std::string& path) {
  if (h.value("format", "") != kFormatName) {
    throw ParseError(path + ": not a " + std::string(kFormatName) + " file");
  }
  if (h.value("version", -1) != kSamplesFormatVersion) {
    throw ParseError(path + ": unsupported samples format version");
  }
  out.t_a = h.at("t_a").get<double>();
  out.t_b = h.at("t_b").get<double>();
  out.grid_step = h.at("grid_step").get<double>();
  out.n_determinations = h.at("n_determinations").get<long>();
  const json& p = h.at("prior");
  out.prior = PriorSpec{p.at("n_lambda").get<double>(), p.at("alpha").get<double>(),
                        p.at("beta").get<double>(), p.at("k_max").get<int>()};
  const json& o = h.at("options");
  out.options.seed = o.at("seed").get<std::uint64_t>();
  out.options.iterations = o.at("iterations").get<long>();
  out.options.burn_in = o.at("burn_in").get<long>();
  out.options.thin = o.at("thin").get<long>();
  out.options.grid_step = o.at("grid_step").get<double>();
  out.options.move_constant = o.at("move_constant").get<double>();
  out.options.prior_only = o.at("prior_only").get<bool>();
  const json& st = h.at("move_stats");
  out.stats.height_proposed = st.at("height_proposed").get<long>();
  out.stats.height_accepted = st.at("height_accepted").get<long>();
  out.stats.position_proposed = st.at("position_proposed").get<long>();
  out.stats.position_accepted = st.at("position_accepted").get<long>();
  out.stats.birth_proposed = st.at("birth_proposed").get<long>();
  out.stats.birth_accepted = st.at("birth_accepted").get<long>();
  out.stats.death_proposed = st.at("death_proposed").get<long>();
  out.stats.death_accepted = st.at("death_accepted").get<long>();
  out.stats.ages_resampled = st.at("ages_resampled").get<long>();
}

json stats_to_json(const MoveStats& s) {
  return json{{"height_proposed", s.height_proposed},
              {"height_accepted", s.height_accepted},
              {"position_proposed", s.position_proposed},
              {"position_accepted", s.position_accepted},
              {"birth_proposed", s.birth_proposed},
              {"birth_accepted", s.birth_accepted},
              {"death_proposed", s.death_proposed},
              {"death_accepted", s.death_accepted},
              {"ages_resampled", s.ages_resampled}};
}

void write_provenance(std::ostream& os, const std::vector<std::string>& provenance) {
  os << "# c14rate " << kVersion << "\n";
  for (const auto& line : provenance) os << "# " << line << "\n";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string samples_to_string(const PosteriorSamples& samples) {
  json header{{"format", kFormatName},
              {"version", kSamplesFormatVersion},
              {"t_a", samples.t_a},
              {"t_b", samples.t_b},
              {"grid_step", samples.grid_step},
              {"n_determinations", samples.n_determinations},
              {"prior", prior_to_json(samples.prior)},
              {"options", options_to_json(samples.options)},
              {"move_stats", stats_to_json(samples.stats)}};
  std::string out = header.dump();
  out += '\n';
  for (const auto& s : samples.samples) {
    json rec{{"iter", s.iter}, {"k", s.rate.k()}, {"s", s.rate.s}, {"h", s.rate.h},
             {"theta", s.theta}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void write_samples(const PosteriorSamples& samples, const std::string& path) {
  auto out = open_out(path);
  out << samples_to_string(samples);
}

PosteriorSamples read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open samples file: " + path);
  std::string line;
  int line_no = 0;
  PosteriorSamples out;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!header_seen) {
        header_from_json(j, out, path);
        header_seen = true;
        continue;
      }
      Sample s;
      s.iter = j.at("iter").get<long>();
      s.rate.t_a = out.t_a;
      s.rate.t_b = out.t_b;
      s.rate.s = j.at("s").get<std::vector<double>>();
      s.rate.h = j.at("h").get<std::vector<double>>();
      s.theta = j.at("theta").get<std::vector<double>>();
      if (j.at("k").get<int>() != s.rate.k()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": k does not match s");
      }
      validate(s.rate);
      out.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw ParseError(path + ": missing header line");
  return out;
}

void write_move_stats(const MoveStats& stats, const PosteriorSamples& samples,
                      const std::string& path) {
  json j = stats_to_json(stats);
  j["kept_samples"] = samples.samples.size();
  j["seed"] = samples.options.seed;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_density_csv(const DensityGrid& density, const std::string& path,
                       const std::vector<std::string>& provenance,
                       const std::string& value_name) {
  auto out = open_out(path);
  write_provenance(out, provenance);
  out << "cal_age," << value_name << "\n";
  for (int j = 0; j < density.grid.n_cells(); ++j) {
    out << format_double(density.grid.centre(j)) << "," << format_double(density.values(j))
        << "\n";
  }
}

DensityGrid read_density_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open density file: " + path);
  std::string line;
  int line_no = 0;
  std::vector<double> ages, values;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("cal_age,", 0) != 0) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected cal_age header");
      }
      header_seen = true;
      continue;
    }
    std::istringstream ss(line);
    double age = 0, value = 0;
    char comma = 0;
    if (!(ss >> age >> comma >> value) || comma != ',') {
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed density row");
    }
    ages.push_back(age);
    values.push_back(value);
  }
  if (ages.size() < 2) throw DataError(path + ": needs at least 2 density rows");
  double step = ages[1] - ages[0];
  for (std::size_t i = 1; i < ages.size(); ++i) {
    if (std::abs(ages[i] - ages[i - 1] - step) > 1e-6 * step) {
      throw DataError(path + ": density rows are not on a regular grid");
    }
  }
  CalendarGrid grid(ages.front() - step / 2, ages.back() + step / 2, step);
  DensityGrid density{grid, Eigen::Map<Eigen::ArrayXd>(values.data(),
                                                       static_cast<Eigen::Index>(values.size())),
                      false};
  double total = density.values.sum() * step;
  if (std::abs(total - 1.0) > 1e-6) {
    throw DataError(path + ": density does not integrate to 1");
  }
  density.values /= total;  // exact renormalisation after text round-trip
  density.normalised = true;
  return density;
}

void write_band_csv(const CalendarGrid& grid, const Eigen::ArrayXd& centre_values,
                    const QuantileBand& band, const std::string& value_name,
                    const std::string& path, const std::vector<std::string>& provenance) {
  auto out = open_out(path);
  write_provenance(out, provenance);
  out << "cal_age," << value_name << ",lower,upper\n";
  for (int j = 0; j < grid.n_cells(); ++j) {
    out << format_double(grid.centre(j)) << "," << format_double(centre_values(j)) << ","
        << format_double(band.lower(j)) << "," << format_double(band.upper(j)) << "\n";
  }
}

void write_histogram_csv(const std::vector<double>& probabilities, const std::string& path,
                         const std::vector<std::string>& provenance) {
  auto out = open_out(path);
  write_provenance(out, provenance);
  out << "k,probability\n";
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    out << k << "," << format_double(probabilities[k]) << "\n";
  }
}

void write_indexed_histograms_csv(const std::vector<Histogram>& histograms,
                                  const std::string& path,
                                  const std::vector<std::string>& provenance) {
  auto out = open_out(path);
  write_provenance(out, provenance);
  out << "index,bin_start,bin_end,density\n";
  for (std::size_t i = 0; i < histograms.size(); ++i) {
    const auto& hist = histograms[i];
    for (std::size_t b = 0; b < hist.density.size(); ++b) {
      out << (i + 1) << "," << format_double(hist.edges[b]) << ","
          << format_double(hist.edges[b + 1]) << "," << format_double(hist.density[b]) << "\n";
    }
  }
}

void write_realisations_csv(const std::vector<Sample>& realisations, const CalendarGrid& grid,
                            const std::string& path,
                            const std::vector<std::string>& provenance) {
  auto out = open_out(path);
  write_provenance(out, provenance);
  out << "cal_age";
  char label[16];
  for (std::size_t r = 0; r < realisations.size(); ++r) {
    std::snprintf(label, sizeof label, ",r%03zu", r);
    out << label;
  }
  out << "\n";
  for (int j = 0; j < grid.n_cells(); ++j) {
    out << format_double(grid.centre(j));
    for (const auto& s : realisations) {
      out << "," << format_double(rate_at(s.rate, grid.centre(j)));
    }
    out << "\n";
  }
}

void write_determinations_csv(const std::vector<Determination>& dets, const std::string& path,
                              const std::vector<std::string>& provenance) {
  auto out = open_out(path);
  write_provenance(out, provenance);
  out << "id,c14_age,sigma\n";
  for (const auto& d : dets) {
    out << d.id << "," << format_double(d.x) << "," << format_double(d.sigma) << "\n";
  }
}

void write_truth_json(const PresetResult& preset, std::uint64_t seed, const std::string& path) {
  json truth;
  if (preset.piecewise_truth) {
    const RateFunction& r = *preset.piecewise_truth;
    truth = json{{"type", "piecewise"}, {"t_a", r.t_a}, {"t_b", r.t_b}, {"s", r.s},
                 {"h", r.h}};
  } else if (preset.exponential_truth) {
    const ExponentialTruth& e = *preset.exponential_truth;
    truth = json{{"type", "exponential"}, {"r", e.r}, {"a", e.a}, {"b", e.b}, {"c", e.c},
                 {"n_events", e.n_events}};
  }
  json j{{"preset", preset.name},
         {"seed", seed},
         {"t_a", preset.t_a},
         {"t_b", preset.t_b},
         {"n_events", preset.events.ages.size()},
         {"truth", truth}};
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

RateFunction read_truth_rate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open truth file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    const json& truth = j.at("truth");
    if (truth.value("type", "") != "piecewise") {
      throw DataError(path + ": truth is not a piecewise rate");
    }
    RateFunction rate{truth.at("t_a").get<double>(), truth.at("t_b").get<double>(),
                      truth.at("s").get<std::vector<double>>(),
                      truth.at("h").get<std::vector<double>>()};
    validate(rate);
    return rate;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace c14rate
