#pragma once

#include <string>
#include <vector>

#include "c14rate/posterior.hpp"
#include "c14rate/sampler.hpp"
#include "c14rate/sim.hpp"

namespace c14rate {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSamplesFormatVersion = 1;

// Posterior samples persist as JSON lines: a header object
// {"format":"c14rate-posterior","version":1,...metadata...} followed by one
// record {"iter":...,"k":...,"s":[...],"h":[...],"theta":[...]} per kept
// state.  Numbers round-trip exactly (shortest-representation doubles).
void write_samples(const PosteriorSamples& samples, const std::string& path);
PosteriorSamples read_samples(const std::string& path);
std::string samples_to_string(const PosteriorSamples& samples);

// Acceptance-statistics sidecar (per-move proposed/accepted counts).
void write_move_stats(const MoveStats& stats, const PosteriorSamples& samples,
                      const std::string& path);

// CSV files open with '#' comment lines (tool version, then caller-supplied
// provenance lines), then a column-header row.  Numbers are written with 17
// significant digits so re-reading reproduces the doubles exactly.

void write_density_csv(const DensityGrid& density, const std::string& path,
                       const std::vector<std::string>& provenance,
                       const std::string& value_name = "density");
DensityGrid read_density_csv(const std::string& path);

// "cal_age,<value>,lower,upper" rows; used for SPD bands and rate summaries.
void write_band_csv(const CalendarGrid& grid, const Eigen::ArrayXd& centre_values,
                    const QuantileBand& band, const std::string& value_name,
                    const std::string& path, const std::vector<std::string>& provenance);

void write_histogram_csv(const std::vector<double>& probabilities, const std::string& path,
                         const std::vector<std::string>& provenance);

// One block per index: "index,bin_start,bin_end,density".
void write_indexed_histograms_csv(const std::vector<Histogram>& histograms,
                                  const std::string& path,
                                  const std::vector<std::string>& provenance);

// Wide table "cal_age,r000,r001,..." of rate realisations at cell centres.
void write_realisations_csv(const std::vector<Sample>& realisations,
                            const CalendarGrid& grid, const std::string& path,
                            const std::vector<std::string>& provenance);

// Determination table ("id,c14_age,sigma").
void write_determinations_csv(const std::vector<Determination>& dets,
                              const std::string& path,
                              const std::vector<std::string>& provenance);

// Simulation truth sidecar: preset name, seed, window, truth descriptor.
void write_truth_json(const PresetResult& preset, std::uint64_t seed,
                      const std::string& path);

// Reads back the "truth" object of a truth sidecar as a RateFunction (only
// for piecewise truths; throws DataError for exponential ones).
RateFunction read_truth_rate(const std::string& path);

// 17-significant-digit decimal form that round-trips IEEE doubles.
std::string format_double(double v);

}  // namespace c14rate
