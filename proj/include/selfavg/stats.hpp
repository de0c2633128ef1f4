#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace selfavg {

struct MeanError {
  double mean = 0.0;
  double stderr = 0.0;
};

/// Leave-one-out jackknife of an arbitrary statistic of column means.
/// `rows[i]` holds the scalars measured on sample i; `statistic` maps a vector
/// of column means to the reported quantities. Returns (value at full means,
/// jackknife stderr) per reported quantity.
std::vector<MeanError> jackknife(const std::vector<std::vector<double>>& rows,
                                 const std::function<std::vector<double>(std::span<const double>)>& statistic);

/// Jackknife of the plain mean of one column; coincides with sqrt(var/n).
MeanError jackknife_mean(std::span<const double> values);

/// Binning analysis for a correlated time series: the block size doubles
/// until fewer than `min_blocks` blocks remain; the reported error is the
/// largest naive error over the levels visited.
MeanError blocking(std::span<const double> series, std::size_t min_blocks = 32);

/// Runs body(i) for i in [0, count) on `parallelism` worker threads. Work is
/// handed out by an atomic counter; callers store results by index, so the
/// outcome does not depend on scheduling. Exceptions are rethrown (lowest index first).
void parallel_for(std::size_t count, int parallelism, const std::function<void(std::size_t)>& body);

/// Parallelism from SELFAVG_THREADS, falling back to 1.
int default_parallelism();

}  // namespace selfavg
