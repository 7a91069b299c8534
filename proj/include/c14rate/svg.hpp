#pragma once

#include <optional>
#include <string>
#include <vector>

#include "c14rate/posterior.hpp"

namespace c14rate {

// Self-contained SVG panel of a fitted rate: posterior mean with quantile
// band, optional true rate overlay, and (when curve/determinations are
// given) the calibration curve and a determination rug on a secondary
// radiocarbon-age axis.  Calendar age runs old-to-young left-to-right.
struct PlotInputs {
  RateSummary summary;
  std::optional<RateFunction> truth;
  const CalibrationCurve* curve = nullptr;           // optional overlay
  const std::vector<Determination>* dets = nullptr;  // optional rug
  std::string title;
};

void write_rate_svg(const PlotInputs& inputs, const std::string& path);

}  // namespace c14rate
