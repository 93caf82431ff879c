#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvmdh/error.hpp"
#include "rvmdh/market_data.hpp"
#include "rvmdh/sampling.hpp"

namespace rvmdh {

// Sum of squared intraday returns.
inline double realized_volatility(std::span<const double> returns) {
  if (returns.empty()) throw Error(ErrorKind::MissingDay, "no intraday returns for realized volatility");
  double rv = 0.0;
  for (double r : returns) rv += r * r;
  return rv;
}

inline double realized_volatility(const SessionDayReturns& day) { return realized_volatility(day.returns); }

struct RvEntry {
  Date day;
  double rv = 0.0;
  std::size_t n = 0;
};

struct RvSeries {
  std::string session;
  int delta_minutes = 0;
  std::vector<RvEntry> entries;
  std::vector<Date> skipped_days;  // days without coverage of the open grid point

  std::size_t size() const noexcept { return entries.size(); }

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.rv);
    return out;
  }
};

inline RvSeries rv_series(const TickSeries& ts, std::string_view session, int delta_minutes) {
  grid_size(ts.spec().find(session), delta_minutes);
  RvSeries out;
  out.session = std::string(session);
  out.delta_minutes = delta_minutes;
  for (const auto day : ts.days()) {
    const auto returns = intraday_returns(ts, day, session, delta_minutes);
    if (!returns) {
      out.skipped_days.push_back(day);
      continue;
    }
    out.entries.push_back({day, realized_volatility(*returns), returns->returns.size()});
  }
  if (out.entries.empty())
    throw Error(ErrorKind::EmptySeries, "no usable days for session " + out.session + " at " +
                                            std::to_string(delta_minutes) + " min");
  return out;
}

inline void write_rv_csv(std::ostream& out, const RvSeries& rv) {
  out << "day,delta_min,n,rv\n";
  char buf[32];
  for (const auto& e : rv.entries) {
    std::snprintf(buf, sizeof buf, "%.6g", e.rv);
    out << format_date(e.day) << ',' << rv.delta_minutes << ',' << e.n << ',' << buf << '\n';
  }
}

struct HlFactor {
  double c = 0.0;
  std::size_t n_days = 0;
};

// Hansen-Lunde scale c = sum (R_t - mean R)^2 / sum RV_t, which makes the
// average RV match the variance of daily returns. Not used when sessions are
// analysed separately.
inline HlFactor hansen_lunde_factor(const ReturnSeries& daily_returns, const RvSeries& rv) {
  if (daily_returns.days.size() != rv.entries.size())
    throw Error(ErrorKind::Alignment, "daily returns and RV cover different day counts");
  for (std::size_t i = 0; i < rv.entries.size(); ++i)
    if (daily_returns.days[i] != rv.entries[i].day)
      throw Error(ErrorKind::Alignment, "daily returns and RV disagree on day " + format_date(rv.entries[i].day));
  const std::size_t n = rv.entries.size();
  if (n < 2) throw Error(ErrorKind::InsufficientData, "Hansen-Lunde factor needs at least 2 days");

  double mean = 0.0;
  for (double r : daily_returns.values) mean += r;
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = daily_returns.values[i] - mean;
    num += d * d;
    den += rv.entries[i].rv;
  }
  if (!(den > 0.0)) throw Error(ErrorKind::Degenerate, "sum of realized volatilities is zero");
  return {num / den, n};
}

}  // namespace rvmdh
