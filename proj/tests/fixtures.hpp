#pragma once

// Shared test fixtures: the bundled synthetic curve, hand-built curves with
// known algebra, and scratch directories that clean up after themselves.

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "c14rate/calibration.hpp"

#ifndef C14RATE_DATA_DIR
#error "C14RATE_DATA_DIR must be defined by the build"
#endif

namespace fixtures {

inline std::string data_path(const std::string& name) {
  return std::string(C14RATE_DATA_DIR) + "/" + name;
}

inline c14rate::CalibrationCurve synthetic_curve() {
  return c14rate::load_curve(data_path("synthetic_curve.14c"));
}

// Straight-line curve m(theta) = intercept + slope * theta with constant
// error; the calibration density under it is exactly analysable.
inline c14rate::CalibrationCurve linear_curve(double lo, double hi, double slope,
                                              double intercept, double tau) {
  int n = 2;
  c14rate::CalibrationCurve c;
  c.cal_age.resize(n);
  c.c14_age.resize(n);
  c.error.resize(n);
  c.cal_age << lo, hi;
  c.c14_age << intercept + slope * lo, intercept + slope * hi;
  c.error << tau, tau;
  return c;
}

// Curve from explicit knot triples (cal_age ascending).
inline c14rate::CalibrationCurve curve_from_knots(
    const std::vector<std::array<double, 3>>& knots) {
  c14rate::CalibrationCurve c;
  auto n = static_cast<Eigen::Index>(knots.size());
  c.cal_age.resize(n);
  c.c14_age.resize(n);
  c.error.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c.cal_age(i) = knots[static_cast<std::size_t>(i)][0];
    c.c14_age(i) = knots[static_cast<std::size_t>(i)][1];
    c.error(i) = knots[static_cast<std::size_t>(i)][2];
  }
  return c;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 gen(std::random_device{}());
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto p = base / ("c14rate_test_" + std::to_string(gen()));
      std::error_code ec;
      if (std::filesystem::create_directory(p, ec)) {
        path_ = p;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Path of a real calibration curve when the environment provides one
// (C14RATE_CURVE_DIR containing intcal20.14c); empty string otherwise.
inline std::string real_curve_path() {
  const char* dir = std::getenv("C14RATE_CURVE_DIR");
  if (dir == nullptr) return {};
  auto p = std::filesystem::path(dir) / "intcal20.14c";
  return std::filesystem::exists(p) ? p.string() : std::string{};
}

}  // namespace fixtures
