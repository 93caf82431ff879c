// rvmdh: realized volatility, noise-bias fitting and the MDH test battery.
//
// Exit codes: 0 success, 2 configuration/usage, 3 I/O, 4 data degeneracy,
// 1 unexpected internal failure.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rvmdh/rvmdh.hpp"

namespace fs = std::filesystem;
using namespace rvmdh;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Parse:
    case ErrorKind::Validation:
    case ErrorKind::Lookup:
    case ErrorKind::Domain:
      return 2;
    case ErrorKind::Io:
      return 3;
    default:
      return 4;
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects everything a run touches, then writes manifest.json next to the outputs.
class Run {
 public:
  Run(std::string command, std::vector<std::string> argv) : command_(std::move(command)), argv_(std::move(argv)) {}

  void set_out(const std::string& dir) {
    out_ = dir;
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec || !fs::is_directory(out_)) throw Error(ErrorKind::Io, "cannot create output directory " + dir);
  }

  void input(const std::string& role, const std::string& path) { inputs_[role] = path; }
  void config(const std::string& path) { configs_.push_back(path); }
  void seed(std::uint64_t s) { seed_ = s; }
  void detail(const std::string& key, Json value) { details_[key] = std::move(value); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto path = out_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    body(os);
    os.flush();
    if (!os) throw Error(ErrorKind::Io, "write failed: " + path.string());
    outputs_.push_back(path.string());
  }

  void write_json(const std::string& name, const Json& j) {
    write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

  void finish() {
    Json m;
    m["command"] = command_;
    m["argv"] = argv_;
    m["tool_version"] = std::string(kVersion);
    m["timestamp"] = utc_timestamp();
    m["working_directory"] = fs::current_path().string();
    m["config_paths"] = configs_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    if (seed_) m["seed"] = *seed_;
    else m["seed"] = nullptr;
    for (auto it = details_.begin(); it != details_.end(); ++it) m[it.key()] = it.value();
    const auto path = out_ / "manifest.json";
    std::ofstream os(path, std::ios::binary);
    os << m.dump(2) << '\n';
    if (!os) throw Error(ErrorKind::Io, "write failed: " + path.string());
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  fs::path out_;
  Json inputs_ = Json::object();
  std::vector<std::string> configs_;
  std::vector<std::string> outputs_;
  std::optional<std::uint64_t> seed_;
  Json details_ = Json::object();
};

std::string spec_text(const SessionSpec& spec) {
  std::ostringstream os;
  spec.write(os);
  return os.str();
}

struct TickInput {
  std::string ticks;
  std::string spec;
  std::string instrument;

  void add(CLI::App* cmd) {
    cmd->add_option("--ticks", ticks, "Tick CSV (date,time,price)")->required();
    cmd->add_option("--spec", spec, "Session spec file (session = LABEL,HH:MM,HH:MM); default TSE")
        ->envname("RVMDH_SESSION_SPEC");
    cmd->add_option("--instrument", instrument, "Instrument name (default: tick file stem)");
  }

  TickSeries load(Run& run) const {
    SessionSpec s = SessionSpec::tse();
    if (!spec.empty()) {
      s = SessionSpec::load(spec);
      run.config(spec);
    }
    run.input("ticks", ticks);
    run.detail("session_spec", spec_text(s));
    auto ts = ingest_csv(ticks, s, instrument.empty() ? fs::path(ticks).stem().string() : instrument);
    const auto& rep = ts.report();
    run.detail("ingest", {{"rows", rep.rows},
                          {"dropped_out_of_session", rep.dropped_out_of_session},
                          {"duplicates_collapsed", rep.duplicates_collapsed}});
    return ts;
  }
};

template <class Read>
auto read_file(const std::string& path, Read&& read) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read(in);
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "rvmdh: warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Realized volatility, microstructure-noise bias and MDH normality tests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::vector<std::string> args(argv, argv + argc);
  std::function<void()> action;
  std::string out_dir;
  const auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", out_dir, "Output directory")->required(); };

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a diffusion-plus-noise tick dataset");
  std::string sim_config;
  std::optional<std::uint64_t> sim_seed;
  unsigned sim_threads = 1;
  sim->add_option("--config", sim_config, "Simulator config file")->required()->envname("RVMDH_CONFIG");
  sim->add_option("--seed", sim_seed, "Override the config seed");
  sim->add_option("--threads", sim_threads, "Worker threads (output does not depend on it)")
      ->check(CLI::PositiveNumber);
  add_out(sim);
  sim->callback([&] {
    action = [&] {
      Run run("simulate", args);
      auto cfg = SimConfig::load(sim_config);
      run.config(sim_config);
      if (sim_seed) cfg.seed = *sim_seed;
      cfg.threads = sim_threads;
      run.set_out(out_dir);
      run.seed(cfg.seed);
      const auto out = simulate(cfg);
      std::ostringstream effective;
      cfg.write(effective);
      run.detail("effective_config", effective.str());
      run.write("ticks.csv", [&](std::ostream& os) { write_ticks_csv(os, out.ticks); });
      run.write("true_iv.csv", [&](std::ostream& os) { write_true_iv_csv(os, out); });
      run.finish();
      std::cout << "simulated " << out.days.size() << " days, " << out.ticks.ticks().size() << " ticks -> "
                << out_dir << '\n';
    };
  });

  // rv
  auto* rv = app.add_subcommand("rv", "Daily realized volatility of one session at one sampling interval");
  TickInput rv_in;
  std::string rv_session;
  int rv_delta = 5;
  rv_in.add(rv);
  rv->add_option("--session", rv_session, "Session label")->required();
  rv->add_option("--delta", rv_delta, "Sampling interval in minutes");
  add_out(rv);
  rv->callback([&] {
    action = [&] {
      Run run("rv", args);
      const auto ts = rv_in.load(run);
      const auto series = rv_series(ts, rv_session, rv_delta);
      run.set_out(out_dir);
      run.write("rv_" + rv_session + "_d" + std::to_string(rv_delta) + ".csv",
                [&](std::ostream& os) { write_rv_csv(os, series); });
      std::vector<std::string> skipped;
      for (const auto d : series.skipped_days) skipped.push_back(format_date(d));
      run.detail("skipped_days", skipped);
      run.finish();
    };
  });

  // signature
  auto* sig = app.add_subcommand("signature", "Mean RV per sampling interval (signature curve)");
  TickInput sig_in;
  std::string sig_session;
  std::vector<int> sig_deltas;
  sig_in.add(sig);
  sig->add_option("--session", sig_session, "Session label")->required();
  sig->add_option("--deltas", sig_deltas, "Sampling intervals in minutes (default grid if omitted)")->delimiter(',');
  add_out(sig);
  sig->callback([&] {
    action = [&] {
      Run run("signature", args);
      const auto ts = sig_in.load(run);
      const auto& sess = ts.spec().find(sig_session);
      const auto deltas = sig_deltas.empty() ? default_delta_grid(sess) : sig_deltas;
      for (int d : deltas) grid_size(sess, d);
      run.set_out(out_dir);
      const auto curve = signature_curve(ts, sig_session, deltas);
      warn(curve.warnings);
      run.write("signature_" + sig_session + ".csv", [&](std::ostream& os) { write_signature_csv(os, curve); });
      run.detail("deltas", deltas);
      run.finish();
    };
  });

  // fit
  auto* fit = app.add_subcommand("fit", "Fit mean RV = a0 (1 + a1 / delta) to a signature curve");
  std::string fit_signature;
  std::string fit_session;
  bool fit_weighted = false;
  fit->add_option("--signature", fit_signature, "Signature CSV (delta_min,mean_rv,se,n_days)")->required();
  fit->add_option("--session", fit_session, "Session label used to name the output");
  fit->add_flag("--weighted-fit", fit_weighted, "Weight points by 1/se^2");
  add_out(fit);
  fit->callback([&] {
    action = [&] {
      Run run("fit", args);
      run.input("signature", fit_signature);
      const auto curve = read_file(fit_signature, [&](std::istream& in) {
        return read_signature_csv(in, fit_session, fit_signature);
      });
      run.set_out(out_dir);
      const auto f = fit_noise_model(curve, fit_weighted ? FitWeighting::InverseVariance : FitWeighting::Unweighted);
      auto j = to_json(f);
      if (!fit_session.empty()) j["session"] = fit_session;
      run.write_json(fit_session.empty() ? "fit.json" : "fit_" + fit_session + ".json", j);
      run.finish();
      std::cout << "a0 = " << format_value(f.a0, 6) << "  a1 = " << format_value(f.a1, 6) << '\n';
    };
  });

  // standardize
  auto* stz = app.add_subcommand("standardize", "Session returns divided by sqrt(RV)");
  TickInput stz_in;
  std::string stz_session;
  int stz_delta = 5;
  stz_in.add(stz);
  stz->add_option("--session", stz_session, "Session label")->required();
  stz->add_option("--delta", stz_delta, "Sampling interval of the RV in minutes");
  add_out(stz);
  stz->callback([&] {
    action = [&] {
      Run run("standardize", args);
      const auto ts = stz_in.load(run);
      grid_size(ts.spec().find(stz_session), stz_delta);
      run.set_out(out_dir);
      const auto returns = zone_returns(ts, stz_session);
      const auto s = standardize(returns, rv_series(ts, stz_session, stz_delta));
      run.write("returns_" + stz_session + ".csv", [&](std::ostream& os) { write_return_series_csv(os, returns); });
      run.write("standardized_" + stz_session + ".csv",
                [&](std::ostream& os) { write_return_series_csv(os, as_return_series(s)); });
      run.detail("excluded_zero_rv", s.excluded_zero_rv);
      run.detail("excluded_unmatched", s.excluded_unmatched);
      run.finish();
    };
  });

  // normtest
  auto* nt = app.add_subcommand("normtest", "Moments, jackknife errors and Anderson-Darling test of a series");
  std::string nt_series;
  std::string nt_fit;
  int nt_delta = 5;
  nt->add_option("--series", nt_series, "Series CSV (day,index,value)")->required();
  nt->add_option("--fit", nt_fit, "Fit JSON; adds the bias-corrected std at --delta");
  nt->add_option("--delta", nt_delta, "Sampling interval in minutes of the RV behind the series");
  add_out(nt);
  nt->callback([&] {
    action = [&] {
      Run run("normtest", args);
      run.input("series", nt_series);
      const auto series = read_file(nt_series, [&](std::istream& in) { return read_return_series_csv(in, nt_series); });
      Json j;
      if (!nt_fit.empty()) {
        run.input("fit", nt_fit);
        const auto f = read_file(nt_fit, [&](std::istream& in) {
          try {
            return noise_fit_from_json(Json::parse(in));
          } catch (const Json::parse_error& e) {
            throw Error(ErrorKind::Parse, nt_fit + ": " + e.what());
          }
        });
        StandardizedSeries s;
        s.days = series.days;
        s.values = series.values;
        s.source_delta = nt_delta;
        run.set_out(out_dir);
        j = to_json(mdh_report(s, f, nt_delta));
      } else {
        run.set_out(out_dir);
        j = to_json(summarize(series.values));
        j["anderson_darling"] = to_json(anderson_darling(series.values));
      }
      run.write_json("normtest.json", j);
      run.finish();
    };
  });

  // acf
  auto* ac = app.add_subcommand("acf", "Autocorrelation function of a series (or of its absolute value)");
  std::string ac_series;
  std::size_t ac_lag = 50;
  bool ac_abs = false;
  ac->add_option("--series", ac_series, "Series CSV (day,index,value)")->required();
  ac->add_option("--max-lag", ac_lag, "Largest lag");
  ac->add_flag("--abs", ac_abs, "Use absolute values");
  add_out(ac);
  ac->callback([&] {
    action = [&] {
      Run run("acf", args);
      run.input("series", ac_series);
      const auto series = read_file(ac_series, [&](std::istream& in) { return read_return_series_csv(in, ac_series); });
      run.set_out(out_dir);
      const auto r = acf(ac_abs ? absolute(series.values) : series.values, ac_lag);
      run.write("acf.csv", [&](std::ostream& os) { write_acf_csv(os, r); });
      run.finish();
    };
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Full per-session pipeline: RV, signature, fit, standardization, tests");
  TickInput pipe_in;
  PipelineOptions opt;
  bool pipe_weighted = false;
  pipe_in.add(pipe);
  pipe->add_option("--session", opt.sessions, "Session label (repeatable; default all)");
  pipe->add_option("--delta", opt.delta_minutes, "Sampling interval for RV and standardization in minutes");
  pipe->add_option("--deltas", opt.fit_deltas, "Sampling intervals for the signature fit (default grid)")
      ->delimiter(',');
  pipe->add_flag("--weighted-fit", pipe_weighted, "Weight the signature fit by 1/se^2");
  pipe->add_option("--max-lag", opt.max_lag, "Largest ACF lag");
  add_out(pipe);
  pipe->callback([&] {
    action = [&] {
      Run run("pipeline", args);
      const auto ts = pipe_in.load(run);
      opt.weighting = pipe_weighted ? FitWeighting::InverseVariance : FitWeighting::Unweighted;
      // Configuration problems surface before the output directory is touched.
      for (const auto& l : opt.sessions) ts.spec().find(l);
      for (const auto& s : ts.spec().sessions()) {
        if (!opt.sessions.empty() && std::find(opt.sessions.begin(), opt.sessions.end(), s.label) == opt.sessions.end())
          continue;
        grid_size(s, opt.delta_minutes);
        for (int d : opt.fit_deltas) grid_size(s, d);
      }
      const auto result = run_pipeline(ts, opt);
      run.set_out(out_dir);
      for (const auto& s : result.sessions) {
        const auto& l = s.session;
        warn(s.signature.warnings);
        run.write("rv_" + l + ".csv", [&](std::ostream& os) { write_rv_csv(os, s.rv); });
        run.write("signature_" + l + ".csv", [&](std::ostream& os) { write_signature_csv(os, s.signature); });
        run.write_json("fit_" + l + ".json", to_json(s.fit));
        run.write("returns_" + l + ".csv", [&](std::ostream& os) { write_return_series_csv(os, s.returns); });
        run.write("standardized_" + l + ".csv",
                  [&](std::ostream& os) { write_return_series_csv(os, as_return_series(s.standardized)); });
        run.write_json("mdh_report_" + l + ".json", report_json(result.instrument, s));
        run.write("acf_abs_returns_" + l + ".csv", [&](std::ostream& os) { write_acf_csv(os, s.acf_abs_raw); });
        run.write("acf_abs_standardized_" + l + ".csv",
                  [&](std::ostream& os) { write_acf_csv(os, s.acf_abs_standardized); });
      }
      const auto table = format_mdh_table(result);
      run.write("mdh_table.txt", [&](std::ostream& os) { os << table; });
      run.write_json("report.json", report_json(result));
      run.detail("delta_minutes", opt.delta_minutes);
      run.detail("fit_deltas", opt.fit_deltas);
      run.detail("weighted_fit", pipe_weighted);
      run.detail("max_lag", opt.max_lag);
      run.finish();
      std::cout << table;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    std::cerr << "rvmdh: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "rvmdh: internal error: " << e.what() << '\n';
    return 1;
  }
}
