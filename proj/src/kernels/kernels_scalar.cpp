#include "selfavg/kernels.hpp"

namespace selfavg::kernels::detail {

void fwht_scalar(double* data, std::size_t size) {
  for (std::size_t h = 1; h < size; h <<= 1) {
    for (std::size_t i = 0; i < size; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = data[j];
        const double b = data[j + h];
        data[j] = a + b;
        data[j + h] = a - b;
      }
    }
  }
}

double gather_product_sum_scalar(const double* table, const std::uint32_t* bases, const int* exponents,
                                 std::size_t n_groups, std::size_t n_sites) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n_sites; ++i) {
    const std::uint32_t bit = 1U << i;
    double prod = 1.0;
    for (std::size_t g = 0; g < n_groups; ++g) {
      const double v = table[bases[g] ^ bit];
      double p = v;
      for (int e = 1; e < exponents[g]; ++e) p *= v;
      prod *= p;
    }
    sum += prod;
  }
  return sum;
}

}  // namespace selfavg::kernels::detail
