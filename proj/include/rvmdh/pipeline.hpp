#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rvmdh/error.hpp"
#include "rvmdh/market_data.hpp"
#include "rvmdh/noise_fit.hpp"
#include "rvmdh/realized_vol.hpp"
#include "rvmdh/sampling.hpp"
#include "rvmdh/stats.hpp"

namespace rvmdh {

struct PipelineOptions {
  int delta_minutes = 5;
  std::vector<int> fit_deltas;        // empty: default grid of each session
  FitWeighting weighting = FitWeighting::Unweighted;
  std::size_t max_lag = 50;
  std::vector<std::string> sessions;  // empty: every session of the spec
};

struct SessionResult {
  std::string session;
  RvSeries rv;                        // at delta_minutes
  SignatureCurve signature;
  NoiseFit fit;
  ReturnSeries returns;               // per-day session returns
  StandardizedSeries standardized;
  std::vector<double> raw_aligned;    // session returns on the standardized days
  MomentSummary raw;
  MdhReport report;
  AcfResult acf_abs_raw;
  AcfResult acf_abs_standardized;
};

struct PipelineResult {
  std::string instrument;
  PipelineOptions options;
  std::vector<SessionResult> sessions;
};

inline SessionResult run_session(const TickSeries& ts, const std::string& session, const PipelineOptions& opt) {
  SessionResult r;
  r.session = session;
  const auto& sess = ts.spec().find(session);
  grid_size(sess, opt.delta_minutes);
  const auto deltas = opt.fit_deltas.empty() ? default_delta_grid(sess) : opt.fit_deltas;
  for (int d : deltas) grid_size(sess, d);

  r.rv = rv_series(ts, session, opt.delta_minutes);
  r.signature = signature_curve(ts, session, deltas);
  r.fit = fit_noise_model(r.signature, opt.weighting);
  r.returns = zone_returns(ts, session);
  r.standardized = standardize(r.returns, r.rv);

  std::size_t j = 0;
  for (const auto d : r.standardized.days) {
    while (r.returns.days[j] != d) ++j;
    r.raw_aligned.push_back(r.returns.values[j]);
  }
  r.raw = summarize(r.raw_aligned);
  r.report = mdh_report(r.standardized, r.fit, opt.delta_minutes);
  r.acf_abs_raw = acf(absolute(r.raw_aligned), opt.max_lag);
  r.acf_abs_standardized = acf(absolute(r.standardized.values), opt.max_lag);
  return r;
}

// simulate/ingest -> RV at delta -> signature + noise fit -> standardize ->
// moments, jackknife errors, bias correction, AD test, ACFs; per session.
inline PipelineResult run_pipeline(const TickSeries& ts, const PipelineOptions& opt) {
  PipelineResult out;
  out.instrument = ts.instrument();
  out.options = opt;
  std::vector<std::string> labels = opt.sessions;
  if (labels.empty())
    for (const auto& s : ts.spec().sessions()) labels.push_back(s.label);
  // Validate every session's configuration before doing any work.
  for (const auto& l : labels) {
    const auto& sess = ts.spec().find(l);
    grid_size(sess, opt.delta_minutes);
    for (int d : opt.fit_deltas) grid_size(sess, d);
  }
  for (const auto& l : labels) {
    try {
      out.sessions.push_back(run_session(ts, l, opt));
    } catch (const Error& e) {
      throw Error(e.kind(), "session " + l + ": " + e.message());
    }
  }
  return out;
}

}  // namespace rvmdh
