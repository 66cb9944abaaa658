#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

namespace shufflesum {

namespace detail {

/// Regularized lower incomplete gamma P(a, x): series expansion.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// Regularized upper incomplete gamma Q(a, x): Lentz continued fraction.
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// Q(a, x) = 1 - P(a, x), the upper regularized incomplete gamma.
inline double regularized_gamma_upper(double a, double x) {
  if (!(a > 0) || x < 0) throw std::invalid_argument("regularized_gamma_upper: bad arguments");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

/// Survival function of the chi-square distribution.
inline double chi_square_p_value(double statistic, int dof) {
  if (dof < 1) throw std::invalid_argument("chi_square_p_value: dof must be >= 1");
  if (statistic <= 0) return 1.0;
  return regularized_gamma_upper(0.5 * dof, 0.5 * statistic);
}

/// Outcome of a goodness-of-fit test.
struct GofReport {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  bool pass = false;
  std::size_t bins = 0;
};

/// Pearson chi-square over prebuilt bins. Caller guarantees the expected
/// counts are adequate.
inline GofReport chi_square_from_bins(const std::vector<double>& observed,
                                      const std::vector<double>& expected,
                                      double significance = 1e-3) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square_from_bins: need >= 2 matching bins");
  GofReport r;
  r.bins = observed.size();
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0)
      throw std::invalid_argument("chi_square_from_bins: nonpositive expected count");
    const double diff = observed[i] - expected[i];
    r.statistic += diff * diff / expected[i];
  }
  r.dof = static_cast<int>(observed.size()) - 1;
  r.p_value = chi_square_p_value(r.statistic, r.dof);
  r.pass = r.p_value > significance;
  return r;
}

/// Chi-square test of integer-valued samples against a pmf with possibly
/// unbounded support. Bins cover the observed range; the mass falling
/// outside is folded into the two edge bins, and adjacent bins are merged
/// until every expected count reaches min_expected (standard validity rule).
inline GofReport chi_square_integer_gof(const std::map<std::int64_t, std::uint64_t>& counts,
                                        std::uint64_t trials,
                                        const std::function<double(std::int64_t)>& pmf,
                                        double significance = 1e-3,
                                        double min_expected = 5.0) {
  if (counts.empty() || trials == 0)
    throw std::invalid_argument("chi_square_integer_gof: no samples");
  const std::int64_t lo = counts.begin()->first;
  const std::int64_t hi = counts.rbegin()->first;

  std::vector<double> obs, exp;
  double central_mass = 0.0;
  for (std::int64_t k = lo; k <= hi; ++k) {
    auto it = counts.find(k);
    obs.push_back(it == counts.end() ? 0.0 : static_cast<double>(it->second));
    const double p = pmf(k);
    exp.push_back(static_cast<double>(trials) * p);
    central_mass += p;
  }

  // Mass outside the covered range, summed until negligible.
  double left_tail = 0.0, right_tail = 0.0;
  for (std::int64_t k = lo - 1; k > lo - 4096; --k) {
    const double p = pmf(k);
    left_tail += p;
    if (p < 1e-18) break;
  }
  for (std::int64_t k = hi + 1; k < hi + 4096; ++k) {
    const double p = pmf(k);
    right_tail += p;
    if (p < 1e-18) break;
  }
  exp.front() += static_cast<double>(trials) * left_tail;
  exp.back() += static_cast<double>(trials) * right_tail;

  // Merge adjacent bins left to right until expected counts are adequate;
  // fold a deficient final bin backwards.
  std::vector<double> mobs, mexp;
  double co = 0.0, ce = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    co += obs[i];
    ce += exp[i];
    if (ce >= min_expected) {
      mobs.push_back(co);
      mexp.push_back(ce);
      co = ce = 0.0;
    }
  }
  if (ce > 0.0 || co > 0.0) {
    if (!mexp.empty()) {
      mobs.back() += co;
      mexp.back() += ce;
    } else {
      mobs.push_back(co);
      mexp.push_back(ce);
    }
  }
  if (mobs.size() < 2)
    throw std::invalid_argument(
        "chi_square_integer_gof: too few samples for the binning rule");
  return chi_square_from_bins(mobs, mexp, significance);
}

}  // namespace shufflesum
