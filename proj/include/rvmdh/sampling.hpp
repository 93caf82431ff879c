#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvmdh/error.hpp"
#include "rvmdh/market_data.hpp"

namespace rvmdh {

// Log-returns on a uniform intraday grid for one session-day.
struct SessionDayReturns {
  Date day;
  std::string session;
  int delta_minutes = 0;
  std::vector<double> returns;
  double open_price = 0.0;   // price at the first grid point (the open)
  double close_price = 0.0;  // price at the last grid point (the close)
};

// Either per-day (one value per day, `indices` empty) or intraday (one value
// per grid interval, `indices` parallel to `values`).
struct ReturnSeries {
  std::string instrument;
  std::string label;                  // session or zone label
  std::optional<int> delta_minutes;   // nullopt for per-day series
  std::vector<Date> days;
  std::vector<std::size_t> indices;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool per_day() const noexcept { return indices.empty(); }
};

enum class ReturnConvention {
  Chronological,  // later log-price minus earlier log-price
  Reversed,       // earlier minus later; flips every sign
};

inline constexpr std::string_view kBreakZone = "break";
inline constexpr std::string_view kOvernightZone = "overnight";

// Throws a Config error unless delta > 0 divides the session duration exactly.
inline int grid_size(const Session& session, int delta_minutes) {
  if (delta_minutes <= 0)
    throw Error(ErrorKind::Config, "sampling period must be positive, got " + std::to_string(delta_minutes));
  const int step = delta_minutes * 60;
  if (session.duration_seconds() % step != 0)
    throw Error(ErrorKind::Config, "sampling period " + std::to_string(delta_minutes) +
                                       " min does not divide session " + session.label + " duration of " +
                                       std::to_string(session.duration_minutes()) + " min");
  return session.duration_seconds() / step;
}

inline std::vector<int> default_delta_grid(const Session& session) {
  static constexpr int kCandidates[] = {1, 2, 3, 4, 5, 6, 10, 12, 15, 20, 30, 40, 60};
  std::vector<int> out;
  for (int d : kCandidates)
    if (session.duration_seconds() % (d * 60) == 0) out.push_back(d);
  return out;
}

// Previous-tick sampling on open, open+delta, ..., close. nullopt when the day
// has no tick at or before the open grid point (partial coverage).
inline std::optional<SessionDayReturns> intraday_returns(const TickSeries& ts, Date day, std::string_view label,
                                                         int delta_minutes) {
  const auto sidx = ts.spec().index_of(label);
  const Session& session = ts.spec()[sidx];
  const int n = grid_size(session, delta_minutes);
  const auto slice = ts.session_slice(day, sidx);
  if (slice.empty() || slice.front().time > session.open) return std::nullopt;

  SessionDayReturns out;
  out.day = day;
  out.session = session.label;
  out.delta_minutes = delta_minutes;
  out.returns.reserve(static_cast<std::size_t>(n));

  std::size_t cursor = 0;
  const auto price_at = [&](TimeOfDay g) {
    while (cursor + 1 < slice.size() && slice[cursor + 1].time <= g) ++cursor;
    return slice[cursor].price;
  };
  double prev = price_at(session.open);
  out.open_price = prev;
  for (int k = 1; k <= n; ++k) {
    const double p = price_at(session.open + k * delta_minutes * 60);
    out.returns.push_back(std::log(p) - std::log(prev));
    prev = p;
  }
  out.close_price = prev;
  return out;
}

namespace detail {

struct SessionEnds {
  double open = 0.0;
  double close = 0.0;
};

inline std::optional<SessionEnds> session_ends(const TickSeries& ts, Date day, std::size_t session) {
  const auto slice = ts.session_slice(day, session);
  if (slice.empty()) return std::nullopt;
  return SessionEnds{slice.front().price, slice.back().price};
}

}  // namespace detail

// One return per day for a session label, `break` (first to second session)
// or `overnight` (last session of the previous trading day to the first
// session of this one). Opening/closing prices are the first/last ticks of the
// session. Days missing an endpoint are skipped.
inline ReturnSeries zone_returns(const TickSeries& ts, std::string_view zone,
                                 ReturnConvention convention = ReturnConvention::Chronological) {
  const auto& spec = ts.spec();
  ReturnSeries out;
  out.instrument = ts.instrument();
  out.label = std::string(zone);
  const double sign = convention == ReturnConvention::Chronological ? 1.0 : -1.0;
  const auto push = [&](Date d, double later, double earlier) {
    out.days.push_back(d);
    out.values.push_back(sign * (std::log(later) - std::log(earlier)));
  };
  const auto days = ts.days();

  if (zone == kOvernightZone) {
    const std::size_t last = spec.size() - 1;
    for (std::size_t i = 1; i < days.size(); ++i) {
      const auto prev = detail::session_ends(ts, days[i - 1], last);
      const auto cur = detail::session_ends(ts, days[i], 0);
      if (prev && cur) push(days[i], cur->open, prev->close);
    }
  } else if (zone == kBreakZone) {
    if (spec.size() < 2) throw Error(ErrorKind::Config, "break zone needs at least two sessions");
    for (const auto d : days) {
      const auto first = detail::session_ends(ts, d, 0);
      const auto second = detail::session_ends(ts, d, 1);
      if (first && second) push(d, second->open, first->close);
    }
  } else {
    const auto sidx = spec.index_of(zone);
    for (const auto d : days)
      if (const auto e = detail::session_ends(ts, d, sidx)) push(d, e->close, e->open);
  }
  if (out.values.empty())
    throw Error(ErrorKind::EmptySeries, "no usable days for zone `" + std::string(zone) + "`");
  return out;
}

inline void write_return_series_csv(std::ostream& out, const ReturnSeries& series) {
  out << "day,index,value\n";
  char buf[32];
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", series.values[i]);
    out << format_date(series.days[i]) << ',';
    if (!series.per_day()) out << series.indices[i];
    out << ',' << buf << '\n';
  }
}

inline ReturnSeries read_return_series_csv(std::istream& in, const std::string& source = "<stream>") {
  ReturnSeries series;
  std::string raw;
  std::size_t line_no = 0;
  bool header = false;
  bool any_index = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    if (!header) {
      if (line != "day,index,value") throw Error(ErrorKind::Parse, where + ": expected header `day,index,value`");
      header = true;
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 3) throw Error(ErrorKind::Parse, where + ": expected 3 fields");
    const auto d = parse_date(f[0]);
    const auto v = detail::parse_double(f[2]);
    if (!d || !v || !std::isfinite(*v)) throw Error(ErrorKind::Parse, where + ": bad day or value");
    series.days.push_back(*d);
    series.values.push_back(*v);
    if (!detail::trim(f[1]).empty()) {
      const auto idx = detail::parse_int<std::size_t>(f[1]);
      if (!idx) throw Error(ErrorKind::Parse, where + ": bad index");
      series.indices.push_back(*idx);
      any_index = true;
    } else if (any_index) {
      throw Error(ErrorKind::Parse, where + ": index column must be all empty or all set");
    }
  }
  if (!header) throw Error(ErrorKind::EmptyInput, source + ": no header");
  if (any_index && series.indices.size() != series.values.size())
    throw Error(ErrorKind::Parse, source + ": index column must be all empty or all set");
  return series;
}

}  // namespace rvmdh
