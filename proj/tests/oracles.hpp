#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's fitting or variance code.

#include <cmath>
#include <cstddef>
#include <vector>

namespace ccboot::testing {

struct PlainRow {
  int d;
  std::vector<double> x;
};

inline double plain_loglik(const std::vector<double>& beta, const std::vector<PlainRow>& rows) {
  double total = 0.0;
  for (const auto& r : rows) {
    double eta = beta[0];
    for (std::size_t j = 0; j < r.x.size(); ++j) eta += beta[j + 1] * r.x[j];
    total += r.d * eta - std::log(1.0 + std::exp(eta));
  }
  return total;
}

// Golden-section search for the maximum of a concave f on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Direct maximisation of the log-likelihood by cyclic coordinate search:
// each coordinate is bracketed coarsely and refined by golden section.
inline std::vector<double> coordinate_search_mle(const std::vector<PlainRow>& rows, std::size_t k) {
  std::vector<double> beta(k, 0.0);
  int quiet_sweeps = 0;
  for (int sweep = 0; sweep < 50000; ++sweep) {
    double biggest = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      auto f = [&](double v) {
        std::vector<double> trial = beta;
        trial[j] = v;
        return plain_loglik(trial, rows);
      };
      // coarse bracket: walk outwards in steps of 0.25 until the value drops
      double step = sweep == 0 ? 0.5 : 0.05;
      double left = beta[j] - step, right = beta[j] + step;
      while (f(left) > f(left + step)) left -= step, step *= 1.5;
      step = sweep == 0 ? 0.5 : 0.05;
      while (f(right) > f(right - step)) right += step, step *= 1.5;
      const double best = golden_max(f, left, right, 1e-11);
      biggest = std::max(biggest, std::abs(best - beta[j]));
      beta[j] = best;
    }
    // golden-section resolution is ~1e-8 on these likelihoods
    quiet_sweeps = biggest < 1e-7 ? quiet_sweeps + 1 : 0;
    if (quiet_sweeps >= 3) break;
  }
  return beta;
}

// Central finite-difference gradient of plain_loglik.
inline std::vector<double> fd_gradient(const std::vector<double>& beta, const std::vector<PlainRow>& rows, double h) {
  std::vector<double> g(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) {
    auto up = beta, down = beta;
    up[j] += h;
    down[j] -= h;
    g[j] = (plain_loglik(up, rows) - plain_loglik(down, rows)) / (2.0 * h);
  }
  return g;
}

}  // namespace ccboot::testing
