#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rvmdh/config.hpp"
#include "rvmdh/error.hpp"

namespace rvmdh {

//===========================================================================//
// Calendar types                                                            //
//===========================================================================//
// Exchange-local wall clock throughout; no timezone arithmetic.
using Date = std::chrono::sys_days;

inline std::optional<Date> parse_date(std::string_view s) {
  s = detail::trim(s);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const auto y = detail::parse_int<int>(s.substr(0, 4));
  const auto m = detail::parse_int<unsigned>(s.substr(5, 2));
  const auto d = detail::parse_int<unsigned>(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m}, std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

inline std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

// Seconds since local midnight.
class TimeOfDay {
 public:
  constexpr TimeOfDay() = default;
  constexpr explicit TimeOfDay(int seconds) : seconds_(seconds) {}
  static constexpr TimeOfDay hms(int h, int m, int s = 0) { return TimeOfDay(h * 3600 + m * 60 + s); }

  constexpr int seconds() const noexcept { return seconds_; }
  constexpr auto operator<=>(const TimeOfDay&) const = default;

  constexpr TimeOfDay operator+(int secs) const noexcept { return TimeOfDay(seconds_ + secs); }

  // Accepts HH:MM:SS, or HH:MM when allow_short is set.
  static std::optional<TimeOfDay> parse(std::string_view s, bool allow_short = false) {
    s = detail::trim(s);
    const auto parts = detail::split(s, ':');
    if (parts.size() != 3 && !(allow_short && parts.size() == 2)) return std::nullopt;
    int v[3] = {0, 0, 0};
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i].size() != 2) return std::nullopt;
      const auto x = detail::parse_int<int>(parts[i]);
      if (!x) return std::nullopt;
      v[i] = *x;
    }
    if (v[0] > 23 || v[1] > 59 || v[2] > 59) return std::nullopt;
    return hms(v[0], v[1], v[2]);
  }

  std::string to_string(bool with_seconds = true) const {
    char buf[16];
    if (with_seconds)
      std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", seconds_ / 3600, seconds_ / 60 % 60, seconds_ % 60);
    else
      std::snprintf(buf, sizeof buf, "%02d:%02d", seconds_ / 3600, seconds_ / 60 % 60);
    return buf;
  }

 private:
  int seconds_ = 0;
};

struct Tick {
  Date date;
  TimeOfDay time;
  double price = 0.0;

  friend bool operator==(const Tick&, const Tick&) = default;
};

inline bool earlier(const Tick& a, const Tick& b) noexcept {
  return a.date != b.date ? a.date < b.date : a.time < b.time;
}

//===========================================================================//
// Sessions                                                                  //
//===========================================================================//
struct Session {
  std::string label;
  TimeOfDay open;
  TimeOfDay close;

  // h, in minutes (rounded down if the clock times are not whole minutes).
  int duration_minutes() const noexcept { return (close.seconds() - open.seconds()) / 60; }
  int duration_seconds() const noexcept { return close.seconds() - open.seconds(); }
};

class SessionSpec {
 public:
  SessionSpec() = default;

  explicit SessionSpec(std::vector<Session> sessions) : sessions_(std::move(sessions)) {
    if (sessions_.empty()) throw Error(ErrorKind::Config, "session spec has no sessions");
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
      const auto& s = sessions_[i];
      if (s.label.empty()) throw Error(ErrorKind::Config, "session label is empty");
      if (s.close <= s.open)
        throw Error(ErrorKind::Config, "session " + s.label + " must close after it opens");
      if (i > 0 && s.open < sessions_[i - 1].close)
        throw Error(ErrorKind::Config, "session " + s.label + " overlaps or precedes " + sessions_[i - 1].label);
      for (std::size_t j = 0; j < i; ++j)
        if (sessions_[j].label == s.label) throw Error(ErrorKind::Config, "duplicate session label " + s.label);
    }
  }

  // Tokyo Stock Exchange: MS 9:00-11:00, AS 12:30-15:00.
  static SessionSpec tse() {
    return SessionSpec({{"MS", TimeOfDay::hms(9, 0), TimeOfDay::hms(11, 0)},
                        {"AS", TimeOfDay::hms(12, 30), TimeOfDay::hms(15, 0)}});
  }

  // Reads every `session = LABEL,HH:MM,HH:MM` line; other keys are ignored so
  // that simulator configs can embed a session spec.
  static SessionSpec from_config(const KeyValueConfig& cfg) {
    std::vector<Session> sessions;
    for (const auto& e : cfg.all("session")) {
      const auto fields = detail::split(e.value, ',');
      const auto where = cfg.source() + ":" + std::to_string(e.line);
      if (fields.size() != 3) throw Error(ErrorKind::Config, where + ": expected `session = LABEL,HH:MM,HH:MM`");
      const auto open = TimeOfDay::parse(fields[1], true);
      const auto close = TimeOfDay::parse(fields[2], true);
      if (!open || !close) throw Error(ErrorKind::Config, where + ": bad session clock time");
      sessions.push_back({std::string(detail::trim(fields[0])), *open, *close});
    }
    if (sessions.empty()) throw Error(ErrorKind::Config, cfg.source() + ": missing required key `session`");
    std::stable_sort(sessions.begin(), sessions.end(),
                     [](const Session& a, const Session& b) { return a.open < b.open; });
    return SessionSpec(std::move(sessions));
  }

  static SessionSpec load(const std::string& path) { return from_config(KeyValueConfig::load(path)); }

  void write(std::ostream& out) const {
    for (const auto& s : sessions_)
      out << "session = " << s.label << ',' << s.open.to_string(false) << ',' << s.close.to_string(false) << '\n';
  }

  const std::vector<Session>& sessions() const noexcept { return sessions_; }
  std::size_t size() const noexcept { return sessions_.size(); }
  const Session& operator[](std::size_t i) const { return sessions_.at(i); }

  std::size_t index_of(std::string_view label) const {
    for (std::size_t i = 0; i < sessions_.size(); ++i)
      if (sessions_[i].label == label) return i;
    throw Error(ErrorKind::Config, "unknown session label `" + std::string(label) + "`");
  }
  const Session& find(std::string_view label) const { return sessions_[index_of(label)]; }

  // Session containing a time of day. Both endpoints are inclusive; when one
  // session closes exactly as the next opens, the opening session wins.
  std::optional<std::size_t> session_of(TimeOfDay t) const noexcept {
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
      const auto& s = sessions_[i];
      if (t < s.open) return std::nullopt;
      if (t < s.close) return i;
      if (t == s.close) {
        if (i + 1 < sessions_.size() && sessions_[i + 1].open == t) return i + 1;
        return i;
      }
    }
    return std::nullopt;
  }

 private:
  std::vector<Session> sessions_;
};

//===========================================================================//
// TickSeries                                                                //
//===========================================================================//
struct IngestReport {
  std::size_t rows = 0;                  // data rows read
  std::size_t dropped_out_of_session = 0;
  std::size_t duplicates_collapsed = 0;
};

// Immutable, day-indexed tick store. All ticks lie inside some session.
class TickSeries {
 public:
  TickSeries() = default;

  TickSeries(std::string instrument, SessionSpec spec, std::vector<Tick> ticks, IngestReport report = {})
      : instrument_(std::move(instrument)), spec_(std::move(spec)), ticks_(std::move(ticks)), report_(report) {
    for (std::size_t i = 0; i < ticks_.size(); ++i) {
      const auto& t = ticks_[i];
      if (!(t.price > 0.0)) throw Error(ErrorKind::Validation, "tick price must be positive");
      if (i > 0 && !earlier(ticks_[i - 1], t))
        throw Error(ErrorKind::Validation, "tick timestamps must be strictly increasing");
      if (!spec_.session_of(t.time))
        throw Error(ErrorKind::Validation, "tick at " + t.time.to_string() + " lies outside every session");
      if (days_.empty() || days_.back().date != t.date) days_.push_back({t.date, i, i});
      days_.back().end = i + 1;
    }
  }

  const std::string& instrument() const noexcept { return instrument_; }
  const SessionSpec& spec() const noexcept { return spec_; }
  std::span<const Tick> ticks() const noexcept { return ticks_; }
  const IngestReport& report() const noexcept { return report_; }
  bool empty() const noexcept { return ticks_.empty(); }

  std::vector<Date> days() const {
    std::vector<Date> out;
    out.reserve(days_.size());
    for (const auto& d : days_) out.push_back(d.date);
    return out;
  }

  std::span<const Tick> ticks_on(Date day) const noexcept {
    const auto it = std::lower_bound(days_.begin(), days_.end(), day,
                                     [](const DayRange& r, Date d) { return r.date < d; });
    if (it == days_.end() || it->date != day) return {};
    return std::span<const Tick>(ticks_).subspan(it->begin, it->end - it->begin);
  }

  // Ticks of `day` in the labelled session, in time order (contiguous because
  // sessions are ordered and non-overlapping).
  std::span<const Tick> session_slice(Date day, std::size_t session) const {
    const auto all = ticks_on(day);
    const auto idx = [this](const Tick& t) { return *spec_.session_of(t.time); };
    const auto first = std::partition_point(all.begin(), all.end(), [&](const Tick& t) { return idx(t) < session; });
    const auto last = std::partition_point(first, all.end(), [&](const Tick& t) { return idx(t) == session; });
    return all.subspan(static_cast<std::size_t>(first - all.begin()), static_cast<std::size_t>(last - first));
  }

  friend bool operator==(const TickSeries& a, const TickSeries& b) {
    return a.instrument_ == b.instrument_ && a.ticks_ == b.ticks_;
  }

 private:
  struct DayRange {
    Date date;
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  std::string instrument_;
  SessionSpec spec_;
  std::vector<Tick> ticks_;
  std::vector<DayRange> days_;
  IngestReport report_;
};

inline std::span<const Tick> session_slices(const TickSeries& ts, Date day, std::string_view label) {
  return ts.session_slice(day, ts.spec().index_of(label));
}

//===========================================================================//
// Tick CSV: header `date,time,price`                                        //
//===========================================================================//
inline TickSeries read_ticks_csv(std::istream& in, const SessionSpec& spec, std::string instrument = {},
                                 const std::string& source = "<stream>") {
  std::string raw;
  std::size_t line_no = 0;
  const auto where = [&] { return source + ":" + std::to_string(line_no); };

  bool header_seen = false;
  std::vector<Tick> rows;
  IngestReport report;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
      if (line != "date,time,price") throw Error(ErrorKind::Parse, where() + ": expected header `date,time,price`");
      header_seen = true;
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 3) throw Error(ErrorKind::Parse, where() + ": expected 3 fields");
    const auto date = parse_date(f[0]);
    if (!date) throw Error(ErrorKind::Parse, where() + ": bad date `" + std::string(f[0]) + "`");
    const auto time = TimeOfDay::parse(f[1]);
    if (!time) throw Error(ErrorKind::Parse, where() + ": bad time `" + std::string(f[1]) + "`");
    const auto price = detail::parse_double(f[2]);
    if (!price) throw Error(ErrorKind::Parse, where() + ": bad price `" + std::string(f[2]) + "`");
    if (!(*price > 0.0) || !std::isfinite(*price))
      throw Error(ErrorKind::Validation, where() + ": price must be positive and finite");
    ++report.rows;
    if (!spec.session_of(*time)) {
      ++report.dropped_out_of_session;
      continue;
    }
    rows.push_back({*date, *time, *price});
  }
  if (!header_seen) throw Error(ErrorKind::EmptyInput, source + ": no header");

  // Stable sort keeps file order among equal timestamps; the last one wins.
  std::stable_sort(rows.begin(), rows.end(), earlier);
  std::vector<Tick> ticks;
  ticks.reserve(rows.size());
  for (const auto& t : rows) {
    if (!ticks.empty() && !earlier(ticks.back(), t)) {
      ticks.back() = t;
      ++report.duplicates_collapsed;
    } else {
      ticks.push_back(t);
    }
  }
  if (ticks.empty()) throw Error(ErrorKind::EmptyInput, source + ": no in-session ticks");
  return TickSeries(std::move(instrument), spec, std::move(ticks), report);
}

inline TickSeries ingest_csv(const std::string& path, const SessionSpec& spec, std::string instrument = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open tick file " + path);
  return read_ticks_csv(in, spec, std::move(instrument), path);
}

inline void write_ticks_csv(std::ostream& out, std::span<const Tick> ticks) {
  out << "date,time,price\n";
  for (const auto& t : ticks)
    out << format_date(t.date) << ',' << t.time.to_string() << ',' << detail::format_exact(t.price) << '\n';
}

inline void write_ticks_csv(std::ostream& out, const TickSeries& ts) { write_ticks_csv(out, ts.ticks()); }

}  // namespace rvmdh
