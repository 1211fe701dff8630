#include "modrl/cli/curves.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "modrl/common/errors.hpp"

namespace modrl::cli {

namespace {

template <typename F>
std::vector<double> centered(std::span<const double> xs, std::size_t window, F&& reduce) {
  require(window >= 1, "curves: window must be at least 1");
  const std::size_t n = xs.size();
  const std::size_t back = (window - 1) / 2;
  const std::size_t ahead = window / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= back ? i - back : 0;
    const std::size_t hi = std::min(n, i + ahead + 1);
    out[i] = reduce(xs.subspan(lo, hi - lo));
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<double> moving_average(std::span<const double> xs, std::size_t window) {
  return centered(xs, window, [](std::span<const double> w) {
    return std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  });
}

std::vector<double> rolling_min(std::span<const double> xs, std::size_t window) {
  return centered(xs, window, [](std::span<const double> w) { return *std::min_element(w.begin(), w.end()); });
}

std::vector<double> rolling_max(std::span<const double> xs, std::size_t window) {
  return centered(xs, window, [](std::span<const double> w) { return *std::max_element(w.begin(), w.end()); });
}

LogSeries read_reward_series(std::istream& log) {
  std::string line;
  if (!std::getline(log, line)) throw ConfigError("curves: empty log");
  const auto header = split(line);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("curves: log has no '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto steps_col = col("env_steps");
  const auto reward_col = col("reward_mean");
  LogSeries s;
  std::size_t lineno = 1;
  while (std::getline(log, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ConfigError("curves: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                        " fields, expected " + std::to_string(header.size()));
    }
    if (cells[reward_col].empty()) continue;
    try {
      s.env_steps.push_back(std::stoull(cells[steps_col]));
      s.reward_mean.push_back(std::stod(cells[reward_col]));
    } catch (const std::exception&) {
      throw ConfigError("curves: line " + std::to_string(lineno) + " is not numeric");
    }
  }
  return s;
}

std::vector<CurveRow> curves(const LogSeries& s, std::size_t window, std::size_t minmax_window) {
  require(window >= 1 && minmax_window >= 1, "curves: windows must be at least 1");
  const auto n = s.reward_mean.size();
  if (n == 0) return {};
  const std::span<const double> xs(s.reward_mean);
  if (window > n) {
    CurveRow r;
    r.env_steps = s.env_steps.back();
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
    r.min = *std::min_element(xs.begin(), xs.end());
    r.max = *std::max_element(xs.begin(), xs.end());
    return {r};
  }
  const auto mean = moving_average(xs, window);
  const auto lo = rolling_min(xs, minmax_window);
  const auto hi = rolling_max(xs, minmax_window);
  std::vector<CurveRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = {s.env_steps[i], mean[i], lo[i], hi[i]};
  return rows;
}

std::string format_curves(const std::vector<CurveRow>& rows, char d) {
  std::string out = std::string("env_steps") + d + "reward_smoothed" + d + "reward_min" + d + "reward_max\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%llu%c%.10g%c%.10g%c%.10g\n", static_cast<unsigned long long>(r.env_steps), d,
                  r.mean, d, r.min, d, r.max);
    out += buf;
  }
  return out;
}

}  // namespace modrl::cli
