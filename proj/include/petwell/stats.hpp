#pragma once

// Studentized range distribution and Tukey-Kramer simultaneous pairwise
// comparison of group means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace petwell::stats {

/// Degrees of freedom above this are treated as infinite.
inline constexpr double kInfiniteDf = 1e4;

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

inline void check_domain(double q, int k, double df) {
  if (!(q >= 0.0) || std::isnan(q)) throw std::domain_error("studentized range: q must be >= 0");
  if (k < 2) throw std::domain_error("studentized range: k must be >= 2");
  if (!(df > 0.0)) throw std::domain_error("studentized range: df must be > 0");
}

template <typename F>
double integrate(F f, double a, double b) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-11, &err);
}

/// log density of s = sqrt(chi2_df / df).
inline double log_scale_density(double s, double df) {
  const double h = df / 2.0;
  return std::log(2.0) + h * std::log(h) - std::lgamma(h) + (df - 1.0) * std::log(s) - h * s * s;
}

}  // namespace detail

/// P(range of k iid standard normals <= w).
inline double range_cdf_infinite(double w, int k) {
  if (w <= 0.0) return 0.0;
  const double kd = k;
  const double v = kd * detail::integrate(
                            [&](double z) {
                              const double d = normal_cdf(z) - normal_cdf(z - w);
                              return d <= 0.0 ? 0.0 : normal_pdf(z) * std::pow(d, kd - 1.0);
                            },
                            -8.0, 8.0 + w);
  return std::clamp(v, 0.0, 1.0);
}

/// P(Q <= q) for the studentized range with k groups and df error degrees
/// of freedom. Infinite (or > 1e4) df uses the normal-range integral.
inline double studentized_range_cdf(double q, int k, double df) {
  detail::check_domain(q, k, df);
  if (q == 0.0) return 0.0;
  if (std::isinf(q)) return 1.0;
  if (df > kInfiniteDf) return range_cdf_infinite(q, k);

  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double ld = detail::log_scale_density(s, df);
    if (ld < -745.0) return 0.0;
    return std::exp(ld) * range_cdf_infinite(q * s, k);
  };
  const double sd = 1.0 / std::sqrt(2.0 * df);
  const double mode = df > 1.0 ? std::sqrt((df - 1.0) / df) : 0.0;
  const double hi = std::max(mode + 14.0 * sd, 2.0 + 14.0 * sd);
  double v;
  if (mode > 14.0 * sd) {
    const double lo = mode - 14.0 * sd;
    v = detail::integrate(integrand, lo, mode) + detail::integrate(integrand, mode, hi);
  } else if (mode > 0.0) {
    v = detail::integrate(integrand, 0.0, mode) + detail::integrate(integrand, mode, hi);
  } else {
    v = detail::integrate(integrand, 0.0, 1.0) + detail::integrate(integrand, 1.0, hi);
  }
  return std::clamp(v, 0.0, 1.0);
}

class QuantileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// q with CDF(q) = 1 - alpha, found by bracketing then TOMS 748.
inline double studentized_range_quantile(double alpha, int k, double df) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("studentized range quantile: alpha must be in (0, 1)");
  detail::check_domain(0.0, k, df);
  const double target = 1.0 - alpha;
  auto f = [&](double q) { return studentized_range_cdf(q, k, df) - target; };

  double lo = 0.0, hi = 4.0;
  int expansions = 0;
  while (f(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 30) {
      std::ostringstream msg;
      msg << "studentized range quantile: no upper bracket (alpha=" << alpha << ", k=" << k << ", df=" << df
          << ", last q=" << hi << ")";
      throw QuantileError(msg.str());
    }
  }
  std::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12 * std::max(1.0, std::abs(a)); };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f(lo), f(hi), tol, iters);
  const double q = 0.5 * (a + b);
  const double residual = f(q);
  if (std::abs(residual) > 1e-6) {
    std::ostringstream msg;
    msg << "studentized range quantile did not converge (alpha=" << alpha << ", k=" << k << ", df=" << df
        << ", bracket=[" << a << ", " << b << "], residual=" << residual << ", iterations=" << iters << ")";
    throw QuantileError(msg.str());
  }
  return q;
}

/// Read-mostly memo for critical values keyed on (alpha, k, df).
class QuantileCache {
 public:
  double get(double alpha, int k, double df) {
    const Key key{alpha, k, df > kInfiniteDf ? std::numeric_limits<double>::infinity() : df};
    {
      std::shared_lock lock(mutex_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    const double q = studentized_range_quantile(alpha, k, std::get<2>(key));
    std::unique_lock lock(mutex_);
    memo_.emplace(key, q);
    return q;
  }

  static QuantileCache& shared() {
    static QuantileCache cache;
    return cache;
  }

 private:
  using Key = std::tuple<double, int, double>;
  std::shared_mutex mutex_;
  std::map<Key, double> memo_;
};

struct GroupSample {
  std::string label;
  std::vector<double> values;
};

struct ComparisonResult {
  std::string first;
  std::string second;
  double lower = 0.0;
  double estimate = 0.0;  // mean(first) - mean(second)
  double upper = 0.0;
  double p_value = 1.0;
  bool degenerate = false;  // zero pooled variance

  std::string label() const { return first + "-" + second; }
};

inline double group_mean(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

/// Sample standard deviation (n - 1); 0 for a single value.
inline double group_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = group_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

/// All unordered pairs (i < j) in input order. Estimates are computed from
/// deviations about the smallest observation, and the per-group sums of
/// squares are added in sorted order, so neither shifting every value by an
/// exactly representable constant nor reordering the groups changes any bit
/// of the output beyond the expected sign flips.
inline std::vector<ComparisonResult> tukey_kramer(std::span<const GroupSample> groups, double alpha = 0.05,
                                                  QuantileCache& cache = QuantileCache::shared()) {
  if (groups.size() < 2) throw std::invalid_argument("tukey_kramer needs at least two groups");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("tukey_kramer: alpha must be in (0, 1)");
  for (const auto& g : groups) {
    if (g.values.size() < 2) throw std::invalid_argument("tukey_kramer: group '" + g.label + "' has fewer than 2 values");
    for (double v : g.values)
      if (!std::isfinite(v)) throw std::invalid_argument("tukey_kramer: non-finite value in group '" + g.label + "'");
  }
  double ref = groups.front().values.front();
  for (const auto& g : groups) ref = std::min(ref, *std::min_element(g.values.begin(), g.values.end()));
  const auto k = groups.size();
  std::vector<double> dmean(k), group_ss(k);
  std::size_t total = 0;
  for (std::size_t g = 0; g < k; ++g) {
    const auto& v = groups[g].values;
    double sum = 0.0;
    for (double x : v) sum += x - ref;
    dmean[g] = sum / static_cast<double>(v.size());
    for (double x : v) {
      const double d = (x - ref) - dmean[g];
      group_ss[g] += d * d;
    }
    total += v.size();
  }
  std::sort(group_ss.begin(), group_ss.end());
  double ss = 0.0;
  for (double s : group_ss) ss += s;
  const double df = static_cast<double>(total - k);
  const double mse = ss / df;
  const double qcrit = cache.get(alpha, static_cast<int>(k), df);

  std::vector<ComparisonResult> out;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      ComparisonResult r{groups[i].label, groups[j].label};
      r.estimate = dmean[i] - dmean[j];
      const double ni = static_cast<double>(groups[i].values.size());
      const double nj = static_cast<double>(groups[j].values.size());
      const double se = std::sqrt(mse * (1.0 / ni + 1.0 / nj) / 2.0);
      const double half = qcrit * se;
      r.lower = r.estimate - half;
      r.upper = r.estimate + half;
      if (se == 0.0) {
        r.degenerate = true;
        r.p_value = r.estimate == 0.0 ? 1.0 : 0.0;
      } else {
        r.p_value = std::clamp(1.0 - studentized_range_cdf(std::abs(r.estimate) / se, static_cast<int>(k), df), 0.0, 1.0);
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace petwell::stats
