#include "pmcast/spline.hpp"

#include "pmcast/errors.hpp"

namespace pmcast {

std::vector<double> cubic_spline_on_grid(std::span<const double> xs, std::span<const double> ys,
                                         std::size_t count) {
  const std::size_t n = xs.size();
  if (n == 0 || ys.size() != n) throw ContractError("spline: knot arrays empty or of unequal length");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(xs[i] > xs[i - 1])) throw ContractError("spline: knots must be strictly increasing");
  }
  std::vector<double> out(count);
  if (n == 1) {
    std::fill(out.begin(), out.end(), ys[0]);
    return out;
  }

  // Second derivatives m_i with natural end conditions m_0 = m_{n-1} = 0,
  // solved with the Thomas algorithm.
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    const std::size_t inner = n - 2;
    std::vector<double> diag(inner), upper(inner), rhs(inner);
    for (std::size_t k = 0; k < inner; ++k) {
      const std::size_t i = k + 1;
      const double h0 = xs[i] - xs[i - 1];
      const double h1 = xs[i + 1] - xs[i];
      diag[k] = 2.0 * (h0 + h1);
      upper[k] = h1;
      rhs[k] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    for (std::size_t k = 1; k < inner; ++k) {
      const double lower = xs[k + 1] - xs[k];
      const double w = lower / diag[k - 1];
      diag[k] -= w * upper[k - 1];
      rhs[k] -= w * rhs[k - 1];
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for (std::size_t k = inner - 1; k-- > 0;) {
      m[k + 1] = (rhs[k] - upper[k] * m[k + 2]) / diag[k];
    }
  }

  std::size_t seg = 0;
  for (std::size_t t = 0; t < count; ++t) {
    const double x = static_cast<double>(t);
    while (seg + 2 < n && x > xs[seg + 1]) ++seg;
    const double x0 = xs[seg];
    const double x1 = xs[seg + 1];
    const double h = x1 - x0;
    const double a = (x1 - x) / h;
    const double b = (x - x0) / h;
    // Outside the knot span the end cubic is extended.
    out[t] = a * ys[seg] + b * ys[seg + 1] +
             ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * (h * h) / 6.0;
  }
  return out;
}

}  // namespace pmcast
