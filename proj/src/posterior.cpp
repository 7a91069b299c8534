#include "c14rate/posterior.hpp"

#include <algorithm>
#include <cmath>

#include "c14rate/errors.hpp"

namespace c14rate {

namespace {

// rate of one sample at every cell centre: one linear sweep over the cells
void rate_row(const RateFunction& rate, const CalendarGrid& grid, Eigen::MatrixXd& rows,
              Eigen::Index r) {
  std::size_t piece = 0;
  for (int j = 0; j < grid.n_cells(); ++j) {
    double c = grid.centre(j);
    while (piece < rate.s.size() && c >= rate.s[piece]) ++piece;
    rows(r, j) = rate.h[piece];
  }
}

RateSummary summarise(const std::vector<const RateFunction*>& rates, const CalendarGrid& grid,
                      double level) {
  if (rates.empty()) throw DataError("no posterior realisations to summarise");
  if (!(level > 0 && level < 1)) throw DataError("band level must be in (0, 1)");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(rates.size()), grid.n_cells());
  for (std::size_t r = 0; r < rates.size(); ++r) {
    rate_row(*rates[r], grid, rows, static_cast<Eigen::Index>(r));
  }
  double tail = (1.0 - level) / 2.0;
  RateSummary out;
  out.grid = grid;
  out.mean = rows.colwise().mean().array();
  out.band = QuantileBand{pointwise_quantile(rows, tail), pointwise_quantile(rows, 1.0 - tail),
                          level};
  out.n_realisations = static_cast<long>(rates.size());
  return out;
}

std::vector<const RateFunction*> states_with_k(const PosteriorSamples& samples, int k_cond) {
  std::vector<const RateFunction*> subset;
  for (const auto& s : samples.samples) {
    if (s.rate.k() == k_cond) subset.push_back(&s.rate);
  }
  if (subset.empty()) {
    throw DataError("no posterior realisations with " + std::to_string(k_cond) +
                    " changepoints");
  }
  return subset;
}

}  // namespace

RateSummary mean_rate(const PosteriorSamples& samples, const CalendarGrid& grid, double level) {
  std::vector<const RateFunction*> all;
  all.reserve(samples.samples.size());
  for (const auto& s : samples.samples) all.push_back(&s.rate);
  return summarise(all, grid, level);
}

std::vector<double> changepoint_counts(const PosteriorSamples& samples) {
  if (samples.samples.empty()) throw DataError("no posterior realisations to summarise");
  std::vector<double> pmf(static_cast<std::size_t>(samples.prior.k_max) + 1, 0.0);
  for (const auto& s : samples.samples) pmf[static_cast<std::size_t>(s.rate.k())] += 1.0;
  for (auto& p : pmf) p /= static_cast<double>(samples.samples.size());
  return pmf;
}

std::vector<Histogram> changepoint_locations(const PosteriorSamples& samples, int k_cond,
                                             double bin_width) {
  if (k_cond < 1) throw DataError("location summaries need k_cond >= 1");
  if (!(bin_width > 0)) throw DataError("bin width must be positive");
  auto subset = states_with_k(samples, k_cond);

  int n_bins = static_cast<int>(std::ceil((samples.t_b - samples.t_a) / bin_width - 1e-9));
  std::vector<double> edges(static_cast<std::size_t>(n_bins) + 1);
  for (int b = 0; b <= n_bins; ++b) {
    edges[static_cast<std::size_t>(b)] = std::min(samples.t_a + b * bin_width, samples.t_b);
  }

  std::vector<Histogram> out(static_cast<std::size_t>(k_cond));
  for (auto& hist : out) {
    hist.edges = edges;
    hist.density.assign(static_cast<std::size_t>(n_bins), 0.0);
  }
  for (const auto* rate : subset) {
    // index 1 = oldest changepoint = largest cal BP = last element of s
    for (int i = 1; i <= k_cond; ++i) {
      double s = rate->s[static_cast<std::size_t>(k_cond - i)];
      auto b = static_cast<std::size_t>(std::min<int>(
          static_cast<int>((s - samples.t_a) / bin_width), n_bins - 1));
      out[static_cast<std::size_t>(i - 1)].density[b] += 1.0;
    }
  }
  for (auto& hist : out) {
    for (std::size_t b = 0; b < hist.density.size(); ++b) {
      double width = hist.edges[b + 1] - hist.edges[b];
      hist.density[b] /= static_cast<double>(subset.size()) * width;
    }
  }
  return out;
}

std::vector<Histogram> conditional_heights(const PosteriorSamples& samples, int k_cond,
                                           int n_bins) {
  if (k_cond < 0) throw DataError("height summaries need k_cond >= 0");
  if (n_bins < 1) throw DataError("need at least one bin");
  auto subset = states_with_k(samples, k_cond);

  double h_max = 0;
  for (const auto* rate : subset) {
    for (double h : rate->h) h_max = std::max(h_max, h);
  }
  double top = h_max > 0 ? h_max * (1.0 + 1e-9) : 1.0;
  double width = top / n_bins;

  std::vector<Histogram> out(static_cast<std::size_t>(k_cond) + 1);
  for (auto& hist : out) {
    hist.edges.resize(static_cast<std::size_t>(n_bins) + 1);
    for (int b = 0; b <= n_bins; ++b) hist.edges[static_cast<std::size_t>(b)] = b * width;
    hist.density.assign(static_cast<std::size_t>(n_bins), 0.0);
  }
  for (const auto* rate : subset) {
    // index 1 = oldest interval = last height
    for (int i = 1; i <= k_cond + 1; ++i) {
      double h = rate->h[static_cast<std::size_t>(k_cond + 1 - i)];
      auto b = static_cast<std::size_t>(std::min<int>(static_cast<int>(h / width), n_bins - 1));
      out[static_cast<std::size_t>(i - 1)].density[b] += 1.0;
    }
  }
  for (auto& hist : out) {
    for (auto& d : hist.density) d /= static_cast<double>(subset.size()) * width;
  }
  return out;
}

RateSummary conditional_mean_rate(const PosteriorSamples& samples, int k_cond,
                                  const CalendarGrid& grid, double level) {
  return summarise(states_with_k(samples, k_cond), grid, level);
}

std::vector<Sample> export_realisations(const PosteriorSamples& samples, int count) {
  const auto n = static_cast<long>(samples.samples.size());
  if (n == 0) throw DataError("no posterior realisations to export");
  if (count < 1 || count > n) throw DataError("export count must lie in [1, kept samples]");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long j = 1; j <= count; ++j) {
    out.push_back(samples.samples[static_cast<std::size_t>(j * n / count - 1)]);
  }
  return out;
}

}  // namespace c14rate
