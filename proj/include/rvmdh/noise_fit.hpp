#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvmdh/config.hpp"
#include "rvmdh/error.hpp"
#include "rvmdh/market_data.hpp"
#include "rvmdh/realized_vol.hpp"

namespace rvmdh {

//===========================================================================//
// Volatility signature curve                                                //
//===========================================================================//
struct SignaturePoint {
  int delta_minutes = 0;
  double mean_rv = 0.0;
  double se = 0.0;  // sample std of RV across days / sqrt(n_days)
  std::size_t n_days = 0;
};

struct SignatureCurve {
  std::string session;
  std::vector<SignaturePoint> points;  // strictly increasing delta
  std::vector<std::string> warnings;   // one per omitted delta
};

inline SignaturePoint signature_point(const RvSeries& rv) {
  SignaturePoint p;
  p.delta_minutes = rv.delta_minutes;
  p.n_days = rv.entries.size();
  double sum = 0.0;
  for (const auto& e : rv.entries) sum += e.rv;
  p.mean_rv = sum / static_cast<double>(p.n_days);
  if (p.n_days > 1) {
    double ss = 0.0;
    for (const auto& e : rv.entries) ss += (e.rv - p.mean_rv) * (e.rv - p.mean_rv);
    p.se = std::sqrt(ss / static_cast<double>(p.n_days - 1) / static_cast<double>(p.n_days));
  }
  return p;
}

inline SignatureCurve signature_curve(const TickSeries& ts, std::string_view session, std::span<const int> deltas) {
  if (deltas.empty()) throw Error(ErrorKind::Config, "signature curve needs at least one sampling period");
  std::vector<int> sorted(deltas.begin(), deltas.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const auto& sess = ts.spec().find(session);
  for (int d : sorted) grid_size(sess, d);

  SignatureCurve curve;
  curve.session = std::string(session);
  for (int d : sorted) {
    try {
      curve.points.push_back(signature_point(rv_series(ts, session, d)));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptySeries) throw;
      curve.warnings.push_back("delta " + std::to_string(d) + " min omitted: no usable days");
    }
  }
  return curve;
}

inline void write_signature_csv(std::ostream& out, const SignatureCurve& curve) {
  out << "delta_min,mean_rv,se,n_days\n";
  char buf[64];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%d,%.6g,%.6g,%zu", p.delta_minutes, p.mean_rv, p.se, p.n_days);
    out << buf << '\n';
  }
}

inline SignatureCurve read_signature_csv(std::istream& in, std::string session = {},
                                         const std::string& source = "<stream>") {
  SignatureCurve curve;
  curve.session = std::move(session);
  std::string raw;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    if (!header) {
      if (line != "delta_min,mean_rv,se,n_days")
        throw Error(ErrorKind::Parse, where + ": expected header `delta_min,mean_rv,se,n_days`");
      header = true;
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 4) throw Error(ErrorKind::Parse, where + ": expected 4 fields");
    const auto d = detail::parse_int<int>(f[0]);
    const auto m = detail::parse_double(f[1]);
    const auto s = detail::parse_double(f[2]);
    const auto n = detail::parse_int<std::size_t>(f[3]);
    if (!d || !m || !s || !n) throw Error(ErrorKind::Parse, where + ": bad number");
    if (!curve.points.empty() && *d <= curve.points.back().delta_minutes)
      throw Error(ErrorKind::Validation, where + ": delta_min must be strictly increasing");
    curve.points.push_back({*d, *m, *s, *n});
  }
  if (!header) throw Error(ErrorKind::EmptyInput, source + ": no header");
  return curve;
}

//===========================================================================//
// Noise model a0 (1 + a1 / delta)                                           //
//===========================================================================//
enum class FitWeighting { Unweighted, InverseVariance };

struct NoiseFit {
  double a0 = 0.0;            // session-integrated variance at infinite sampling frequency
  double a1 = 0.0;            // minutes
  double residual_sse = 0.0;  // weighted objective at the optimum
  std::vector<int> deltas_used;
  FitWeighting weighting = FitWeighting::Unweighted;
};

// The model is linear in (p, q) = (a0, a0 a1) with regressor 1/delta, so the
// least-squares fit is the closed-form 2x2 normal-equation solution.
inline NoiseFit fit_noise_model(const SignatureCurve& curve, FitWeighting weighting = FitWeighting::Unweighted) {
  const auto& pts = curve.points;
  if (pts.size() < 3)
    throw Error(ErrorKind::InsufficientData, "noise fit needs at least 3 signature points, got " +
                                                 std::to_string(pts.size()));
  std::vector<double> w(pts.size(), 1.0);
  if (weighting == FitWeighting::InverseVariance) {
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (!(pts[k].se > 0.0))
        throw Error(ErrorKind::Degenerate, "weighted fit needs positive standard errors (delta " +
                                               std::to_string(pts[k].delta_minutes) + ")");
      w[k] = 1.0 / (pts[k].se * pts[k].se);
    }
  }

  // Centre the regressor before solving; the normal equations are otherwise
  // badly scaled when delta spans 1..60.
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double x = 1.0 / pts[k].delta_minutes;
    sw += w[k];
    sx += w[k] * x;
    sy += w[k] * pts[k].mean_rv;
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double dx = 1.0 / pts[k].delta_minutes - xbar;
    sxx += w[k] * dx * dx;
    sxy += w[k] * dx * (pts[k].mean_rv - ybar);
  }
  if (!(sxx > std::numeric_limits<double>::epsilon() * xbar * xbar * sw))
    throw Error(ErrorKind::Rank, "signature points share a single sampling period");
  const double q = sxy / sxx;
  const double p = ybar - q * xbar;
  if (!(p > 0.0)) throw Error(ErrorKind::Degenerate, "fitted RV level a0 is not positive");

  NoiseFit fit;
  fit.a0 = p;
  fit.a1 = q / p;
  fit.weighting = weighting;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double r = pts[k].mean_rv - (p + q / pts[k].delta_minutes);
    fit.residual_sse += w[k] * r * r;
    fit.deltas_used.push_back(pts[k].delta_minutes);
  }
  return fit;
}

inline double fitted_mean_rv(const NoiseFit& fit, double delta_minutes) {
  return fit.a0 * (1.0 + fit.a1 / delta_minutes);
}

// Relative noise bias delta(D) = a1 / D.
inline double bias_at(double a1, double delta_minutes) {
  if (!(delta_minutes > 0.0)) throw Error(ErrorKind::Domain, "sampling period must be positive");
  return a1 / delta_minutes;
}

inline double bias_at(const NoiseFit& fit, double delta_minutes) { return bias_at(fit.a1, delta_minutes); }

}  // namespace rvmdh
