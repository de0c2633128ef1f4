#include "selfavg/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "selfavg/errors.hpp"

namespace selfavg {

std::vector<MeanError> jackknife(const std::vector<std::vector<double>>& rows,
                                 const std::function<std::vector<double>(std::span<const double>)>& statistic) {
  const std::size_t n = rows.size();
  if (n < 2) throw ValidationError("jackknife: need at least 2 samples");
  const std::size_t cols = rows.front().size();
  std::vector<double> sums(cols, 0.0);
  for (const auto& row : rows) {
    if (row.size() != cols) throw ValidationError("jackknife: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) sums[c] += row[c];
  }
  std::vector<double> means(cols);
  for (std::size_t c = 0; c < cols; ++c) means[c] = sums[c] / static_cast<double>(n);
  const auto full = statistic(means);

  std::vector<std::vector<double>> leave_one_out(n);
  std::vector<double> partial(cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cols; ++c) partial[c] = (sums[c] - rows[i][c]) / static_cast<double>(n - 1);
    leave_one_out[i] = statistic(partial);
  }
  std::vector<MeanError> out(full.size());
  for (std::size_t k = 0; k < full.size(); ++k) {
    double avg = 0.0;
    for (const auto& v : leave_one_out) avg += v[k];
    avg /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& v : leave_one_out) ss += (v[k] - avg) * (v[k] - avg);
    out[k] = {full[k], std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n))};
  }
  return out;
}

MeanError jackknife_mean(std::span<const double> values) {
  std::vector<std::vector<double>> rows;
  rows.reserve(values.size());
  for (double v : values) rows.push_back({v});
  return jackknife(rows, [](std::span<const double> m) { return std::vector<double>{m[0]}; }).front();
}

MeanError blocking(std::span<const double> series, std::size_t min_blocks) {
  if (series.size() < 2) throw ValidationError("blocking: need at least 2 measurements");
  std::vector<double> level(series.begin(), series.end());
  double mean = 0.0;
  for (double v : level) mean += v;
  mean /= static_cast<double>(level.size());

  double worst = 0.0;
  bool first = true;
  while (level.size() >= 2 && (first || level.size() >= min_blocks)) {
    first = false;
    const auto nb = static_cast<double>(level.size());
    double m = 0.0;
    for (double v : level) m += v;
    m /= nb;
    double ss = 0.0;
    for (double v : level) ss += (v - m) * (v - m);
    worst = std::max(worst, std::sqrt(ss / (nb - 1.0) / nb));
    std::vector<double> next(level.size() / 2);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = 0.5 * (level[2 * i] + level[2 * i + 1]);
    level = std::move(next);
  }
  return {mean, worst};
}

void parallel_for(std::size_t count, int parallelism, const std::function<void(std::size_t)>& body) {
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(parallelism), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = count;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

int default_parallelism() {
  if (const char* env = std::getenv("SELFAVG_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

}  // namespace selfavg
