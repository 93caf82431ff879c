#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvmdh/noise_fit.hpp"
#include "rvmdh/pipeline.hpp"
#include "rvmdh/stats.hpp"

namespace rvmdh {

using Json = nlohmann::ordered_json;

inline Json to_json(const NoiseFit& fit) {
  Json bias = Json::array();
  for (int d : fit.deltas_used) bias.push_back({{"delta_min", d}, {"bias", bias_at(fit, d)}});
  return {{"a0", fit.a0},
          {"a1", fit.a1},
          {"residual_sse", fit.residual_sse},
          {"weighted", fit.weighting == FitWeighting::InverseVariance},
          {"deltas_used", fit.deltas_used},
          {"bias_table", bias}};
}

inline NoiseFit noise_fit_from_json(const Json& j) {
  NoiseFit fit;
  try {
    fit.a0 = j.at("a0").get<double>();
    fit.a1 = j.at("a1").get<double>();
    fit.residual_sse = j.value("residual_sse", 0.0);
    fit.deltas_used = j.value("deltas_used", std::vector<int>{});
    fit.weighting = j.value("weighted", false) ? FitWeighting::InverseVariance : FitWeighting::Unweighted;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("fit report: ") + e.what());
  }
  return fit;
}

inline Json to_json(const MomentSummary& m) {
  return {{"std_dev", m.std_dev}, {"std_dev_se", m.std_dev_se}, {"kurtosis", m.kurtosis},
          {"kurtosis_se", m.kurtosis_se}, {"n", m.n}};
}

inline Json to_json(const AdResult& ad) {
  return {{"ad_statistic", ad.statistic}, {"ad_adjusted", ad.adjusted}, {"ad_p_value", ad.p_value},
          {"ad_clamped", ad.clamped}, {"n", ad.n}};
}

inline Json to_json(const MdhReport& r) {
  return {{"std_dev", r.std_dev},
          {"std_dev_se", r.std_dev_se},
          {"kurtosis", r.kurtosis},
          {"kurtosis_se", r.kurtosis_se},
          {"bias_corrected_std", r.bias_corrected_std},
          {"bias_corrected_std_se", r.bias_corrected_std_se},
          {"ad_statistic", r.ad_statistic},
          {"ad_adjusted", r.ad_adjusted},
          {"ad_p_value", r.ad_p_value},
          {"ad_clamped", r.ad_clamped},
          {"bias", r.bias},
          {"n", r.n}};
}

// MDH report with provenance.
inline Json report_json(const std::string& instrument, const SessionResult& s) {
  Json j = to_json(s.report);
  j["instrument"] = instrument;
  j["session"] = s.session;
  j["delta_min"] = s.report.delta_minutes;
  j["fit"] = {{"a0", s.fit.a0}, {"a1", s.fit.a1}};
  j["raw_returns"] = to_json(s.raw);
  j["excluded_zero_rv"] = s.standardized.excluded_zero_rv;
  j["excluded_unmatched"] = s.standardized.excluded_unmatched;
  j["skipped_days"] = s.rv.skipped_days.size();
  return j;
}

inline Json report_json(const PipelineResult& p) {
  Json sessions = Json::array();
  for (const auto& s : p.sessions) sessions.push_back(report_json(p.instrument, s));
  return {{"instrument", p.instrument}, {"delta_min", p.options.delta_minutes}, {"sessions", sessions}};
}

//===========================================================================//
// Human-readable table                                                      //
//===========================================================================//
// "0.915(32)": value to `sig` significant digits, error in units of the last
// printed digit.
inline std::string format_value_error(double value, double error, int sig = 3) {
  const double mag = value == 0.0 ? 0.0 : std::floor(std::log10(std::abs(value)));
  const int decimals = std::max(0, sig - 1 - static_cast<int>(mag));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string out = buf;
  if (std::isfinite(error)) {
    const auto scaled = static_cast<long long>(std::llround(error * std::pow(10.0, decimals)));
    out += "(" + std::to_string(scaled) + ")";
  }
  return out;
}

inline std::string format_value(double value, int sig = 3) { return format_value_error(value, NAN, sig); }

// Columns are sessions; rows follow the layout of a std/kurtosis comparison
// table for original and standardized returns.
inline std::string format_mdh_table(const std::vector<std::string>& labels, const std::vector<MomentSummary>& raw,
                                    const std::vector<MdhReport>& reports) {
  std::ostringstream os;
  char buf[256];
  const auto row = [&](const char* group, const char* name, const std::vector<std::string>& cells) {
    std::snprintf(buf, sizeof buf, "%-16s %-22s", group, name);
    os << buf;
    for (const auto& c : cells) {
      std::snprintf(buf, sizeof buf, " %14s", c.c_str());
      os << buf;
    }
    os << '\n';
  };
  row("", "", labels);
  std::vector<std::string> c;
  if (!raw.empty()) {
    c.clear();
    for (const auto& m : raw) c.push_back(format_value_error(m.std_dev * 100.0, m.std_dev_se * 100.0));
    row("R_t", "std.dv. (x10^2)", c);
    c.clear();
    for (const auto& m : raw) c.push_back(format_value_error(m.kurtosis, m.kurtosis_se));
    row("", "kurt.", c);
  }
  c.clear();
  for (const auto& r : reports) c.push_back(format_value_error(r.std_dev, r.std_dev_se));
  row("R_t/RV_t^{1/2}", "std.dv. (=sigma)", c);
  c.clear();
  for (const auto& r : reports) c.push_back(format_value_error(r.kurtosis, r.kurtosis_se));
  row("", "kurt.", c);
  c.clear();
  for (const auto& r : reports) c.push_back(format_value_error(r.bias_corrected_std, r.bias_corrected_std_se));
  row("", "sigma*(1+delta)^{1/2}", c);
  c.clear();
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%.3f", r.ad_p_value);
    c.push_back(buf);
  }
  row("AD", "p-value", c);
  return os.str();
}

inline std::string format_mdh_table(const PipelineResult& p) {
  std::vector<std::string> labels;
  std::vector<MomentSummary> raw;
  std::vector<MdhReport> reports;
  for (const auto& s : p.sessions) {
    labels.push_back(s.session);
    raw.push_back(s.raw);
    reports.push_back(s.report);
  }
  return format_mdh_table(labels, raw, reports);
}

}  // namespace rvmdh
