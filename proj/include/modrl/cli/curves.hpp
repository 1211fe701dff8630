#pragma once

#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace modrl::cli {

// Centered windows; near the edges the window is truncated to the available
// points. Window w covers [i - (w-1)/2, i + w/2].
std::vector<double> moving_average(std::span<const double> xs, std::size_t window);
std::vector<double> rolling_min(std::span<const double> xs, std::size_t window);
std::vector<double> rolling_max(std::span<const double> xs, std::size_t window);

struct CurveRow {
  std::uint64_t env_steps = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct LogSeries {
  std::vector<std::uint64_t> env_steps;
  std::vector<double> reward_mean;
};

// Reads the train log, keeping rows that have a reward_mean.
LogSeries read_reward_series(std::istream& log);

// A window longer than the series collapses it to one aggregate row.
std::vector<CurveRow> curves(const LogSeries& series, std::size_t window, std::size_t minmax_window);

std::string format_curves(const std::vector<CurveRow>& rows, char delimiter = ',');

}  // namespace modrl::cli
