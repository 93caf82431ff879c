#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rvmdh/error.hpp"
#include "rvmdh/market_data.hpp"
#include "rvmdh/noise_fit.hpp"
#include "rvmdh/realized_vol.hpp"
#include "rvmdh/sampling.hpp"

namespace rvmdh {

//===========================================================================//
// Moments                                                                   //
//===========================================================================//
inline double mean(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorKind::InsufficientData, "mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

namespace detail {
// Exact test; the rounded mean of a constant sample need not equal its value.
inline bool is_constant(std::span<const double> x) noexcept {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}
}  // namespace detail

// (n-1)-denominator standard deviation.
inline double sample_std(std::span<const double> x) {
  if (x.size() < 2) throw Error(ErrorKind::InsufficientData, "standard deviation needs n >= 2");
  if (detail::is_constant(x)) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// Non-excess kurtosis m4 / m2^2 with biased central moments (3 for a Gaussian).
inline double kurtosis(std::span<const double> x) {
  if (x.size() < 4) throw Error(ErrorKind::InsufficientData, "kurtosis needs n >= 4");
  if (detail::is_constant(x)) throw Error(ErrorKind::Degenerate, "kurtosis of a constant sample");
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw Error(ErrorKind::Degenerate, "kurtosis of a constant sample");
  return m4 / (m2 * m2);
}

//===========================================================================//
// Delete-1 jackknife                                                        //
//===========================================================================//
enum class Statistic { StdDev, Kurtosis };

inline double evaluate(Statistic stat, std::span<const double> x) {
  return stat == Statistic::StdDev ? sample_std(x) : kurtosis(x);
}

// SE = sqrt((n-1)/n * sum_i (theta_(i) - theta_bar)^2) over all n
// leave-one-out subsamples. `stat` is any callable span<const double> -> double.
template <class Stat>
double jackknife_se(std::span<const double> x, Stat&& stat) {
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorKind::InsufficientData, "jackknife needs n >= 3");
  std::vector<double> sub(x.begin() + 1, x.end());
  std::vector<double> theta(n);
  // sub holds x without element i; swapping one slot walks i through 0..n-1.
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) sub[i - 1] = x[i - 1];
    theta[i] = stat(std::span<const double>(sub));
  }
  double tbar = 0.0;
  for (double t : theta) tbar += t;
  tbar /= static_cast<double>(n);
  double ss = 0.0;
  for (double t : theta) ss += (t - tbar) * (t - tbar);
  return std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
}

inline double jackknife_se(std::span<const double> x, Statistic stat) {
  return jackknife_se(x, [stat](std::span<const double> s) { return evaluate(stat, s); });
}

// sigma * sqrt(1 + delta): undoes the variance shrinkage caused by a relative
// noise bias delta in the RV used for standardization.
inline double bias_corrected_std(double sigma, double delta_bias) {
  if (delta_bias < 0.0) throw Error(ErrorKind::Domain, "bias must be non-negative");
  if (sigma < 0.0) throw Error(ErrorKind::Domain, "standard deviation must be non-negative");
  return sigma * std::sqrt(1.0 + delta_bias);
}

//===========================================================================//
// Anderson-Darling normality test (mean and variance estimated)             //
//===========================================================================//
struct AdResult {
  double statistic = 0.0;  // A^2
  double adjusted = 0.0;   // A*^2 = A^2 (1 + 0.75/n + 2.25/n^2)
  double p_value = 1.0;
  bool clamped = false;    // some |z| exceeded kAdZLimit
  std::size_t n = 0;
};

// erfc underflows just past |z| = 38; beyond this the log-CDF terms lose meaning.
inline constexpr double kAdZLimit = 37.0;

// D'Agostino & Stephens piecewise approximation for the composite normal case.
// Past the vertex of the top branch's quadratic the formula turns upward, so
// it is held at zero there.
inline double ad_p_value(double a_star) {
  double p = 0.0;
  if (a_star >= 153.467) {
    p = 0.0;
  } else if (a_star >= 0.6) {
    p = std::exp(1.2937 - 5.709 * a_star + 0.0186 * a_star * a_star);
  } else if (a_star >= 0.34) {
    p = std::exp(0.9177 - 4.279 * a_star - 1.38 * a_star * a_star);
  } else if (a_star >= 0.2) {
    p = 1.0 - std::exp(-8.318 + 42.796 * a_star - 59.938 * a_star * a_star);
  } else {
    p = 1.0 - std::exp(-13.436 + 101.14 * a_star - 223.73 * a_star * a_star);
  }
  return std::clamp(p, 0.0, 1.0);
}

inline AdResult anderson_darling(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 8) throw Error(ErrorKind::InsufficientData, "Anderson-Darling test needs n >= 8");
  const double m = mean(x);
  const double s = sample_std(x);
  if (!(s > 0.0)) throw Error(ErrorKind::Degenerate, "Anderson-Darling test on a constant sample");

  AdResult out;
  out.n = n;
  std::vector<double> z(x.begin(), x.end());
  for (double& v : z) {
    v = (v - m) / s;
    if (std::abs(v) > kAdZLimit) {
      v = std::copysign(kAdZLimit, v);
      out.clamped = true;
    }
  }
  std::sort(z.begin(), z.end());
  // ln Phi(z) and ln(1 - Phi(z)) through erfc, which keeps both tails accurate.
  const auto log_cdf = [](double v) { return std::log(0.5 * std::erfc(-v / std::numbers::sqrt2)); };
  const auto log_sf = [](double v) { return std::log(0.5 * std::erfc(v / std::numbers::sqrt2)); };
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += static_cast<double>(2 * i + 1) * (log_cdf(z[i]) + log_sf(z[n - 1 - i]));
  const double dn = static_cast<double>(n);
  out.statistic = -dn - sum / dn;
  out.adjusted = out.statistic * (1.0 + 0.75 / dn + 2.25 / (dn * dn));
  out.p_value = ad_p_value(out.adjusted);
  return out;
}

//===========================================================================//
// Autocorrelation                                                           //
//===========================================================================//
struct AcfResult {
  std::vector<double> acf;  // lags 0..max_lag
  double band = 0.0;        // 95% limit 1.96 / sqrt(n)
  std::size_t n = 0;

  std::size_t max_lag() const noexcept { return acf.empty() ? 0 : acf.size() - 1; }
};

// Biased estimator with one global mean; acf[0] == 1.
inline AcfResult acf(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  if (max_lag < 1 || n <= max_lag)
    throw Error(ErrorKind::InsufficientData, "acf needs n > max_lag >= 1");
  const double m = mean(x);
  double denom = 0.0;
  for (double v : x) denom += (v - m) * (v - m);
  if (!(denom > 0.0)) throw Error(ErrorKind::Degenerate, "acf of a constant series");

  AcfResult out;
  out.n = n;
  out.band = 1.96 / std::sqrt(static_cast<double>(n));
  out.acf.assign(max_lag + 1, 0.0);
  out.acf[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double c = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) c += (x[t] - m) * (x[t + k] - m);
    out.acf[k] = c / denom;
  }
  return out;
}

inline std::size_t lags_inside_band(const AcfResult& r) {
  std::size_t inside = 0;
  for (std::size_t k = 1; k < r.acf.size(); ++k)
    if (std::abs(r.acf[k]) <= r.band) ++inside;
  return inside;
}

inline void write_acf_csv(std::ostream& out, const AcfResult& r) {
  out << "lag,acf,band\n";
  char buf[64];
  for (std::size_t k = 0; k < r.acf.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g", k, r.acf[k], r.band);
    out << buf << '\n';
  }
}

inline std::vector<double> absolute(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v = std::abs(v);
  return out;
}

//===========================================================================//
// Standardized returns                                                      //
//===========================================================================//
struct StandardizedSeries {
  std::string session;
  int source_delta = 0;
  std::vector<Date> days;
  std::vector<double> values;  // R_t / sqrt(RV_t)
  std::size_t excluded_zero_rv = 0;
  std::size_t excluded_unmatched = 0;  // return days with no RV entry
};

// Day-aligned R_t / sqrt(RV_t). The RV is used as measured; no Hansen-Lunde
// scaling enters.
inline StandardizedSeries standardize(const ReturnSeries& returns, const RvSeries& rv) {
  StandardizedSeries out;
  out.session = rv.session;
  out.source_delta = rv.delta_minutes;
  std::size_t j = 0;
  for (std::size_t i = 0; i < returns.values.size(); ++i) {
    const Date d = returns.days[i];
    while (j < rv.entries.size() && rv.entries[j].day < d) ++j;
    if (j == rv.entries.size() || rv.entries[j].day != d) {
      ++out.excluded_unmatched;
      continue;
    }
    if (!(rv.entries[j].rv > 0.0)) {
      ++out.excluded_zero_rv;
      continue;
    }
    out.days.push_back(d);
    out.values.push_back(returns.values[i] / std::sqrt(rv.entries[j].rv));
  }
  if (out.values.empty())
    throw Error(ErrorKind::EmptySeries, "no days with both a return and a positive RV in session " + out.session);
  return out;
}

inline ReturnSeries as_return_series(const StandardizedSeries& s) {
  ReturnSeries out;
  out.label = s.session;
  out.days = s.days;
  out.values = s.values;
  return out;
}

//===========================================================================//
// MDH report                                                                //
//===========================================================================//
struct MomentSummary {
  double std_dev = 0.0;
  double std_dev_se = 0.0;
  double kurtosis = 0.0;
  double kurtosis_se = 0.0;
  std::size_t n = 0;
};

inline MomentSummary summarize(std::span<const double> x) {
  MomentSummary s;
  s.n = x.size();
  s.std_dev = sample_std(x);
  s.std_dev_se = jackknife_se(x, Statistic::StdDev);
  s.kurtosis = kurtosis(x);
  s.kurtosis_se = jackknife_se(x, Statistic::Kurtosis);
  return s;
}

struct MdhReport {
  double std_dev = 0.0;
  double std_dev_se = 0.0;
  double kurtosis = 0.0;
  double kurtosis_se = 0.0;
  double bias_corrected_std = 0.0;
  double bias_corrected_std_se = 0.0;
  double ad_statistic = 0.0;
  double ad_adjusted = 0.0;
  double ad_p_value = 1.0;
  bool ad_clamped = false;
  double bias = 0.0;       // fitted delta(D); the correction uses max(bias, 0)
  int delta_minutes = 0;
  std::size_t n = 0;
};

// The bias-corrected SE scales by the same sqrt(1 + delta); delta is taken as
// exact.
inline MdhReport mdh_report(const StandardizedSeries& series, const NoiseFit& fit, int delta_minutes) {
  const auto m = summarize(series.values);
  const auto ad = anderson_darling(series.values);
  MdhReport r;
  r.n = m.n;
  r.std_dev = m.std_dev;
  r.std_dev_se = m.std_dev_se;
  r.kurtosis = m.kurtosis;
  r.kurtosis_se = m.kurtosis_se;
  r.delta_minutes = delta_minutes;
  r.bias = bias_at(fit, delta_minutes);
  const double applied = std::max(r.bias, 0.0);  // a noise-free curve can fit a1 slightly below 0
  r.bias_corrected_std = bias_corrected_std(m.std_dev, applied);
  r.bias_corrected_std_se = bias_corrected_std(m.std_dev_se, applied);
  r.ad_statistic = ad.statistic;
  r.ad_adjusted = ad.adjusted;
  r.ad_p_value = ad.p_value;
  r.ad_clamped = ad.clamped;
  return r;
}

}  // namespace rvmdh
