#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "rvmdh/config.hpp"
#include "rvmdh/error.hpp"
#include "rvmdh/market_data.hpp"

namespace rvmdh {

//===========================================================================//
// Reproducible substreams                                                   //
//===========================================================================//
// SplitMix64 finaliser; used to derive independent generator seeds from
// (seed, stream, index) so that each simulated day owns its own stream.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(substream_seed(seed, stream, index));
}

//===========================================================================//
// Configuration                                                             //
//===========================================================================//
// sigma is the spot volatility of log-price per sqrt(minute).
struct ConstantVol {
  double sigma = 0.0;
};

// ln sigma follows an Ornstein-Uhlenbeck process in trading-day time,
//   d ln sigma = -reversion (ln sigma - mean_log_vol) dt + vol_of_vol dB,
// sampled exactly once per day and held constant within the day. The first
// day is drawn from the stationary law N(mean_log_vol, vol_of_vol^2 / (2 reversion)).
struct LognormalOuVol {
  double mean_log_vol = 0.0;
  double reversion = 0.0;   // per day
  double vol_of_vol = 0.0;  // per sqrt(day)

  double stationary_sd() const { return vol_of_vol / std::sqrt(2.0 * reversion); }
};

using VolModel = std::variant<ConstantVol, LognormalOuVol>;

struct SimConfig {
  std::uint64_t seed = 0;
  std::size_t n_days = 0;
  SessionSpec spec = SessionSpec::tse();
  VolModel vol = ConstantVol{};
  double noise_std = 0.0;      // omega, log-price units
  int tick_interval = 60;      // seconds; divides 60
  double initial_price = 100.0;
  Date start_date = Date{std::chrono::year{2000} / 1 / 3};
  bool overnight_diffusion = false;  // diffuse the latent price across lunch and overnight gaps
  bool keep_latent = false;          // retain true log-prices alongside the ticks
  std::string instrument = "SIM";
  unsigned threads = 1;              // does not affect the output

  void validate() const {
    if (n_days == 0) throw Error(ErrorKind::Config, "n_days must be positive");
    if (tick_interval <= 0 || 60 % tick_interval != 0)
      throw Error(ErrorKind::Config, "tick_interval must be a positive divisor of 60 seconds");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw Error(ErrorKind::Config, "noise_std must be >= 0");
    if (!(initial_price > 0.0) || !std::isfinite(initial_price))
      throw Error(ErrorKind::Config, "initial_price must be positive");
    for (const auto& s : spec.sessions())
      if (s.duration_seconds() % tick_interval != 0 || s.open.seconds() % tick_interval != 0)
        throw Error(ErrorKind::Config, "tick grid does not align with session " + s.label);
    if (const auto* c = std::get_if<ConstantVol>(&vol)) {
      if (!(c->sigma >= 0.0) || !std::isfinite(c->sigma)) throw Error(ErrorKind::Config, "sigma must be >= 0");
    } else {
      const auto& ou = std::get<LognormalOuVol>(vol);
      if (!(ou.reversion > 0.0)) throw Error(ErrorKind::Config, "reversion must be positive");
      if (!(ou.vol_of_vol >= 0.0)) throw Error(ErrorKind::Config, "vol_of_vol must be >= 0");
      if (!std::isfinite(ou.mean_log_vol)) throw Error(ErrorKind::Config, "mean_log_vol must be finite");
    }
  }

  static SimConfig from_config(const KeyValueConfig& kv) {
    SimConfig c;
    const auto where = [&](std::string_view key) { return kv.source() + ": key `" + std::string(key) + "`"; };
    const auto num = [&](std::string_view key) {
      const auto v = detail::parse_double(kv.require(key));
      if (!v) throw Error(ErrorKind::Config, where(key) + " is not a number");
      return *v;
    };
    const auto num_or = [&](std::string_view key, double fallback) { return kv.get(key) ? num(key) : fallback; };
    const auto uint = [&](std::string_view key) {
      const auto v = detail::parse_int<std::uint64_t>(kv.require(key));
      if (!v) throw Error(ErrorKind::Config, where(key) + " is not a non-negative integer");
      return *v;
    };
    const auto flag = [&](std::string_view key) {
      const auto v = kv.get(key);
      if (!v) return false;
      if (*v == "true" || *v == "1" || *v == "yes") return true;
      if (*v == "false" || *v == "0" || *v == "no") return false;
      throw Error(ErrorKind::Config, where(key) + " must be true or false");
    };

    c.seed = uint("seed");
    c.n_days = static_cast<std::size_t>(uint("n_days"));
    if (!kv.all("session").empty()) c.spec = SessionSpec::from_config(kv);  // else the TSE default
    const auto model = kv.require("vol_model");
    if (model == "constant") {
      c.vol = ConstantVol{num("sigma")};
    } else if (model == "lognormal_ou") {
      c.vol = LognormalOuVol{num("mean_log_vol"), num("reversion"), num("vol_of_vol")};
    } else {
      throw Error(ErrorKind::Config, where("vol_model") + " must be constant or lognormal_ou");
    }
    c.noise_std = num_or("noise_std", 0.0);
    if (kv.get("tick_interval")) c.tick_interval = static_cast<int>(uint("tick_interval"));
    c.initial_price = num_or("initial_price", c.initial_price);
    if (const auto d = kv.get("start_date")) {
      const auto parsed = parse_date(*d);
      if (!parsed) throw Error(ErrorKind::Config, where("start_date") + " must be YYYY-MM-DD");
      c.start_date = *parsed;
    }
    c.overnight_diffusion = flag("overnight_diffusion");
    c.keep_latent = flag("keep_latent");
    if (const auto i = kv.get("instrument")) c.instrument = *i;
    c.validate();
    return c;
  }

  static SimConfig load(const std::string& path) { return from_config(KeyValueConfig::load(path)); }

  void write(std::ostream& out) const {
    out << "seed = " << seed << '\n' << "n_days = " << n_days << '\n';
    spec.write(out);
    if (const auto* cv = std::get_if<ConstantVol>(&vol)) {
      out << "vol_model = constant\nsigma = " << detail::format_exact(cv->sigma) << '\n';
    } else {
      const auto& ou = std::get<LognormalOuVol>(vol);
      out << "vol_model = lognormal_ou\nmean_log_vol = " << detail::format_exact(ou.mean_log_vol)
          << "\nreversion = " << detail::format_exact(ou.reversion)
          << "\nvol_of_vol = " << detail::format_exact(ou.vol_of_vol) << '\n';
    }
    out << "noise_std = " << detail::format_exact(noise_std) << '\n'
        << "tick_interval = " << tick_interval << '\n'
        << "initial_price = " << detail::format_exact(initial_price) << '\n'
        << "start_date = " << format_date(start_date) << '\n'
        << "overnight_diffusion = " << (overnight_diffusion ? "true" : "false") << '\n'
        << "keep_latent = " << (keep_latent ? "true" : "false") << '\n'
        << "instrument = " << instrument << '\n';
  }
};

//===========================================================================//
// Output                                                                    //
//===========================================================================//
struct SessionTruth {
  double iv = 0.0;               // sum of sigma^2 dt over the session's steps
  double latent_open = 0.0;     // true log-price at the open
  double latent_close = 0.0;    // true log-price at the close
  std::size_t tick_count = 0;
};

struct SimOutput {
  TickSeries ticks;
  std::vector<Date> days;
  std::vector<double> daily_sigma;                // spot vol of each day
  std::vector<std::vector<SessionTruth>> truth;   // [day][session]
  std::vector<double> latent_log_prices;          // parallel to ticks when keep_latent

  std::size_t day_index(Date day) const {
    const auto it = std::lower_bound(days.begin(), days.end(), day);
    if (it == days.end() || *it != day) throw Error(ErrorKind::Lookup, "day " + format_date(day) + " not simulated");
    return static_cast<std::size_t>(it - days.begin());
  }

  double true_iv(Date day, std::string_view session) const {
    return truth[day_index(day)][ticks.spec().index_of(session)].iv;
  }
};

// Latent log close minus latent log open of a session.
inline double true_session_return(const SimOutput& out, Date day, std::string_view session) {
  const auto& t = out.truth[out.day_index(day)][out.ticks.spec().index_of(session)];
  return t.latent_close - t.latent_open;
}

inline void write_true_iv_csv(std::ostream& os, const SimOutput& out) {
  os << "day,session,iv\n";
  const auto& spec = out.ticks.spec();
  for (std::size_t d = 0; d < out.days.size(); ++d)
    for (std::size_t s = 0; s < spec.size(); ++s)
      os << format_date(out.days[d]) << ',' << spec[s].label << ',' << detail::format_exact(out.truth[d][s].iv)
         << '\n';
}

//===========================================================================//
// simulate                                                                  //
//===========================================================================//
namespace detail {

enum : std::uint64_t { kVolStream = 1, kDayStream = 2 };

inline std::vector<Date> weekdays_from(Date start, std::size_t count) {
  std::vector<Date> out;
  out.reserve(count);
  for (Date d = start; out.size() < count; d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
  }
  return out;
}

inline std::vector<double> daily_sigmas(const SimConfig& cfg) {
  std::vector<double> sig(cfg.n_days);
  if (const auto* c = std::get_if<ConstantVol>(&cfg.vol)) {
    std::fill(sig.begin(), sig.end(), c->sigma);
    return sig;
  }
  const auto& ou = std::get<LognormalOuVol>(cfg.vol);
  auto rng = substream(cfg.seed, kVolStream, 0);
  std::normal_distribution<double> z;
  const double phi = std::exp(-ou.reversion);
  const double innov = ou.vol_of_vol * std::sqrt((1.0 - phi * phi) / (2.0 * ou.reversion));
  double lv = ou.mean_log_vol + ou.stationary_sd() * z(rng);
  for (std::size_t d = 0; d < cfg.n_days; ++d) {
    if (d > 0) lv = ou.mean_log_vol + phi * (lv - ou.mean_log_vol) + innov * z(rng);
    sig[d] = std::exp(lv);
  }
  return sig;
}

// One day's path relative to the day's starting latent log-price.
struct DayPath {
  std::vector<TimeOfDay> times;
  std::vector<double> latent;  // relative log-price at each tick
  std::vector<double> noise;   // xi at each tick
  std::vector<SessionTruth> truth;
  double end = 0.0;            // relative log-price carried into the next day
};

inline DayPath simulate_day(const SimConfig& cfg, std::size_t day, double sigma) {
  auto rng = substream(cfg.seed, kDayStream, day);
  std::normal_distribution<double> z;
  const auto& spec = cfg.spec;
  const double dt = cfg.tick_interval / 60.0;  // minutes
  const double step_sd = sigma * std::sqrt(dt);

  DayPath p;
  p.truth.resize(spec.size());
  double x = 0.0;
  if (cfg.overnight_diffusion && day > 0) {
    const double gap = (24 * 3600 - spec.sessions().back().close.seconds() + spec[0].open.seconds()) / 60.0;
    x += sigma * std::sqrt(gap) * z(rng);
  }
  for (std::size_t s = 0; s < spec.size(); ++s) {
    const auto& sess = spec[s];
    if (s > 0 && cfg.overnight_diffusion) {
      const double gap = (sess.open.seconds() - spec[s - 1].close.seconds()) / 60.0;
      x += sigma * std::sqrt(gap) * z(rng);
    }
    const int steps = sess.duration_seconds() / cfg.tick_interval;
    auto& truth = p.truth[s];
    truth.latent_open = x;
    truth.tick_count = static_cast<std::size_t>(steps) + 1;
    for (int k = 0; k <= steps; ++k) {
      if (k > 0) {
        x += step_sd * z(rng);
        truth.iv += sigma * sigma * dt;
      }
      p.times.push_back(sess.open + k * cfg.tick_interval);
      p.latent.push_back(x);
      p.noise.push_back(cfg.noise_std * z(rng));
    }
    truth.latent_close = x;
  }
  p.end = x;
  return p;
}

}  // namespace detail

// Diffusion d ln p = sigma dW observed with i.i.d. N(0, omega^2) log-price
// noise at every tick. Each day draws from its own substream, so the result is
// bit-identical for any thread count.
inline SimOutput simulate(const SimConfig& cfg) {
  cfg.validate();
  SimOutput out;
  out.days = detail::weekdays_from(cfg.start_date, cfg.n_days);
  out.daily_sigma = detail::daily_sigmas(cfg);

  std::vector<detail::DayPath> paths(cfg.n_days);
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.n_days)));
  if (workers == 1) {
    for (std::size_t d = 0; d < cfg.n_days; ++d) paths[d] = detail::simulate_day(cfg, d, out.daily_sigma[d]);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t d = w; d < cfg.n_days; d += workers) paths[d] = detail::simulate_day(cfg, d, out.daily_sigma[d]);
      });
  }

  std::size_t total = 0;
  for (const auto& p : paths) total += p.times.size();
  std::vector<Tick> ticks;
  ticks.reserve(total);
  if (cfg.keep_latent) out.latent_log_prices.reserve(total);
  out.truth.reserve(cfg.n_days);

  double offset = std::log(cfg.initial_price);
  for (std::size_t d = 0; d < cfg.n_days; ++d) {
    auto& p = paths[d];
    for (std::size_t i = 0; i < p.times.size(); ++i) {
      const double latent = offset + p.latent[i];
      const double observed = latent + p.noise[i];
      if (!(std::abs(observed) < 700.0))
        throw Error(ErrorKind::Diverged, "log-price left the representable range on " + format_date(out.days[d]));
      ticks.push_back({out.days[d], p.times[i], std::exp(observed)});
      if (cfg.keep_latent) out.latent_log_prices.push_back(latent);
    }
    for (auto& t : p.truth) {
      t.latent_open += offset;
      t.latent_close += offset;
    }
    out.truth.push_back(std::move(p.truth));
    offset += p.end;
    p = {};
  }
  out.ticks = TickSeries(cfg.instrument, cfg.spec, std::move(ticks));
  return out;
}

}  // namespace rvmdh
