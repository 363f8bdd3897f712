#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "twinsim/analytic.hpp"
#include "twinsim/core.hpp"
#include "twinsim/csv.hpp"
#include "twinsim/estimators.hpp"
#include "twinsim/montecarlo.hpp"
#include "twinsim/oracle.hpp"
#include "twinsim/version.hpp"

/// Named run descriptions, their JSON form, and the batch runners behind
/// the command-line tool. All outputs are deterministic for a fixed
/// scenario: rerunning writes byte-identical CSV and manifest files.
namespace twinsim::scenario {

struct Scenario {
  std::string name = "custom";
  SourceConfig source;
  ChannelConfig channel;
  std::vector<ConditionWindow> windows;
  std::uint64_t pulses = 20000;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Optional per-mode mean occupations for sweep runs, strictly increasing.
  std::vector<double> sweep;
  /// Optional per-point (matched, unmatched) overrides, same length as sweep.
  std::vector<std::pair<int, int>> sweep_modes;
  bool gaussian_binomial = false;
};

inline std::vector<std::string> builtin_names() {
  return {"fig2a", "sweep-large-aperture", "sweep-small-aperture", "fano-sweep", "oracle-small"};
}

/// Bundled desk-scale run descriptions. Aperture variants differ only in
/// mode counts; the narrow selection windows are one fifteenth of the tap
/// spread, centred either on the mean or slightly below it.
inline std::optional<Scenario> builtin_scenario(const std::string& name) {
  const double narrow = 1.0 / 15.0;
  Scenario s;
  s.name = name;
  if (name == "fig2a") {
    s.source = {7.0, 91, 9};
    s.channel = {0.1, 0.8, 0.8, 0.8, 0.0};
    s.windows = {{1.0, 0.5}};
    s.pulses = 20000;
    s.seed = 1001;
    s.sweep = {2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
    return s;
  }
  if (name == "sweep-large-aperture") {
    s.source = {7.0, 910, 90};
    s.channel = {0.12, 0.8, 0.8, 0.8, 0.0};
    s.windows = {{1.0, narrow}, {0.93, narrow}};
    s.pulses = 10000;
    s.seed = 1002;
    s.sweep = {2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
    return s;
  }
  if (name == "sweep-small-aperture") {
    s.source = {7.0, 136, 14};
    s.channel = {0.12, 0.8, 0.8, 0.8, 0.0};
    s.windows = {{1.0, narrow}, {0.93, narrow}};
    s.pulses = 10000;
    s.seed = 1003;
    s.sweep = {2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
    return s;
  }
  if (name == "fano-sweep") {
    s.source = {50.0, 100, 0};
    s.channel = {0.1, 0.7, 0.7, 0.7, 0.0};
    s.windows = {{1.0, narrow}};
    s.pulses = 50000;
    s.seed = 1004;
    s.sweep = {50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0};
    return s;
  }
  if (name == "oracle-small") {
    s.source = {0.8, 2, 1};
    s.channel = {0.2, 0.7, 0.7, 0.7, 0.0};
    s.windows = {{1.0, 0.5}, {1.5, 1.0}};
    s.pulses = 200000;
    s.seed = 1005;
    return s;
  }
  return std::nullopt;
}

struct ScenarioParse {
  Scenario scenario;
  bool ok = false;
  bool io_failure = false;
  std::vector<std::string> errors;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const char* where,
                       std::initializer_list<const char*> allowed,
                       std::vector<std::string>& errs) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) errs.push_back(std::string("unknown key '") + item.key() + "' in " + where);
  }
}

inline bool take_number(const json& obj, const char* key, const char* where, double& out,
                        std::vector<std::string>& errs) {
  auto it = obj.find(key);
  if (it == obj.end()) return false;
  if (!it->is_number()) {
    errs.push_back(std::string(where) + "." + key + " must be a number");
    return false;
  }
  out = it->get<double>();
  return true;
}

inline bool take_int(const json& obj, const char* key, const char* where, std::int64_t& out,
                     std::vector<std::string>& errs) {
  auto it = obj.find(key);
  if (it == obj.end()) return false;
  if (!it->is_number_integer()) {
    errs.push_back(std::string(where) + "." + key + " must be an integer");
    return false;
  }
  out = it->get<std::int64_t>();
  return true;
}

inline bool valid_name(const std::string& s) {
  if (s.empty() || s.size() > 64) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
  return true;
}

}  // namespace detail

/// Parses a scenario from JSON text. Unknown keys anywhere are errors;
/// all problems are collected rather than stopping at the first.
inline ScenarioParse parse_scenario_json(const std::string& text) {
  using nlohmann::json;
  ScenarioParse out;
  const json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) {
    out.errors.push_back("invalid JSON");
    return out;
  }
  if (!root.is_object()) {
    out.errors.push_back("top level must be an object");
    return out;
  }
  auto& errs = out.errors;
  detail::check_keys(root, "top level",
                     {"name", "source", "channel", "windows", "pulses", "seed", "threads", "sweep",
                      "sweep_modes", "gaussian_binomial"},
                     errs);
  Scenario& s = out.scenario;

  if (auto it = root.find("name"); it != root.end()) {
    if (!it->is_string())
      errs.push_back("name must be a string");
    else {
      s.name = it->get<std::string>();
      if (!detail::valid_name(s.name))
        errs.push_back("name must be 1-64 characters from [A-Za-z0-9_-]");
    }
  }

  if (auto it = root.find("source"); it != root.end()) {
    if (!it->is_object())
      errs.push_back("source must be an object");
    else {
      detail::check_keys(*it, "source", {"n_mean_per_mode", "matched_modes", "unmatched_modes"},
                         errs);
      detail::take_number(*it, "n_mean_per_mode", "source", s.source.n_mean_per_mode, errs);
      std::int64_t iv = 0;
      if (detail::take_int(*it, "matched_modes", "source", iv, errs))
        s.source.matched_modes = static_cast<int>(iv);
      if (detail::take_int(*it, "unmatched_modes", "source", iv, errs))
        s.source.unmatched_modes = static_cast<int>(iv);
    }
  }

  if (auto it = root.find("channel"); it != root.end()) {
    if (!it->is_object())
      errs.push_back("channel must be an object");
    else {
      detail::check_keys(
          *it, "channel", {"tap_ratio", "eta_signal", "eta_idler", "eta_tap", "read_noise_sd"},
          errs);
      detail::take_number(*it, "tap_ratio", "channel", s.channel.tap_ratio, errs);
      detail::take_number(*it, "eta_signal", "channel", s.channel.eta_signal, errs);
      detail::take_number(*it, "eta_idler", "channel", s.channel.eta_idler, errs);
      // The monitor detector inherits the beam efficiency unless given.
      if (!detail::take_number(*it, "eta_tap", "channel", s.channel.eta_tap, errs))
        s.channel.eta_tap = s.channel.eta_signal;
      detail::take_number(*it, "read_noise_sd", "channel", s.channel.read_noise_sd, errs);
    }
  }

  if (auto it = root.find("windows"); it != root.end()) {
    if (!it->is_array())
      errs.push_back("windows must be an array");
    else
      for (const auto& w : *it) {
        if (!w.is_object()) {
          errs.push_back("windows entries must be objects");
          continue;
        }
        detail::check_keys(w, "windows[]", {"center_scale", "width_sigma"}, errs);
        ConditionWindow cw;
        detail::take_number(w, "center_scale", "windows[]", cw.center_scale, errs);
        detail::take_number(w, "width_sigma", "windows[]", cw.width_sigma, errs);
        s.windows.push_back(cw);
      }
  }

  if (auto it = root.find("pulses"); it != root.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 1)
      errs.push_back("pulses must be a positive integer");
    else
      s.pulses = it->get<std::uint64_t>();
  }
  if (auto it = root.find("seed"); it != root.end()) {
    if (!it->is_number_integer())
      errs.push_back("seed must be an integer");
    else
      s.seed = it->get<std::uint64_t>();
  }
  if (auto it = root.find("threads"); it != root.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 1)
      errs.push_back("threads must be a positive integer");
    else
      s.threads = static_cast<int>(it->get<std::int64_t>());
  }
  if (auto it = root.find("gaussian_binomial"); it != root.end()) {
    if (!it->is_boolean())
      errs.push_back("gaussian_binomial must be a boolean");
    else
      s.gaussian_binomial = it->get<bool>();
  }

  if (auto it = root.find("sweep"); it != root.end()) {
    if (!it->is_array())
      errs.push_back("sweep must be an array of numbers");
    else {
      for (const auto& v : *it) {
        if (!v.is_number()) {
          errs.push_back("sweep entries must be numbers");
          break;
        }
        s.sweep.push_back(v.get<double>());
      }
      for (std::size_t i = 0; i + 1 < s.sweep.size(); ++i)
        if (!(s.sweep[i] < s.sweep[i + 1])) {
          errs.push_back("sweep values must be strictly increasing");
          break;
        }
    }
  }
  if (auto it = root.find("sweep_modes"); it != root.end()) {
    if (!it->is_array())
      errs.push_back("sweep_modes must be an array of [matched, unmatched] pairs");
    else {
      for (const auto& v : *it) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
            !v[1].is_number_integer()) {
          errs.push_back("sweep_modes entries must be [matched, unmatched] integer pairs");
          break;
        }
        s.sweep_modes.emplace_back(static_cast<int>(v[0].get<std::int64_t>()),
                                   static_cast<int>(v[1].get<std::int64_t>()));
      }
      if (!s.sweep_modes.empty() && s.sweep_modes.size() != s.sweep.size())
        errs.push_back("sweep_modes must have the same length as sweep");
    }
  }

  out.ok = errs.empty();
  return out;
}

inline ScenarioParse load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ScenarioParse p;
    p.io_failure = true;
    p.errors.push_back("cannot open " + path);
    return p;
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario_json(text);
}

enum class RunStatus : int {
  ok = 0,
  config_error = 2,
  io_error = 3,
  guard_error = 4,
  check_failed = 5,
};

struct RunReport {
  RunStatus status = RunStatus::ok;
  std::vector<std::string> messages;
  std::vector<std::string> files_written;
};

namespace detail {

inline std::string digest_hex(std::uint64_t d) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

inline nlohmann::json scenario_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["source"] = {{"n_mean_per_mode", s.source.n_mean_per_mode},
                 {"matched_modes", s.source.matched_modes},
                 {"unmatched_modes", s.source.unmatched_modes}};
  j["channel"] = {{"tap_ratio", s.channel.tap_ratio},
                  {"eta_signal", s.channel.eta_signal},
                  {"eta_idler", s.channel.eta_idler},
                  {"eta_tap", s.channel.eta_tap},
                  {"read_noise_sd", s.channel.read_noise_sd}};
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& w : s.windows)
    windows.push_back({{"center_scale", w.center_scale}, {"width_sigma", w.width_sigma}});
  j["windows"] = windows;
  j["pulses"] = s.pulses;
  j["seed"] = s.seed;
  j["threads"] = s.threads;
  if (!s.sweep.empty()) j["sweep"] = s.sweep;
  if (!s.sweep_modes.empty()) {
    nlohmann::json sm = nlohmann::json::array();
    for (const auto& pr : s.sweep_modes) sm.push_back({pr.first, pr.second});
    j["sweep_modes"] = sm;
  }
  if (s.gaussian_binomial) j["gaussian_binomial"] = true;
  return j;
}

/// Deterministic run manifest: no timestamps, keys in sorted order.
inline std::string manifest_text(const char* command, const Scenario& s,
                                 const std::uint64_t* digest,
                                 const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["scenario"] = scenario_json(s);
  if (digest) j["config_digest"] = digest_hex(*digest);
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

inline bool write_out(const std::filesystem::path& dir, const std::string& name,
                      const std::string& content, RunReport& rep) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    rep.status = RunStatus::io_error;
    rep.messages.push_back("cannot create directory " + dir.string());
    return false;
  }
  const std::filesystem::path p = dir / name;
  if (!csv::write_file(p.string(), content)) {
    rep.status = RunStatus::io_error;
    rep.messages.push_back("cannot write " + p.string());
    return false;
  }
  rep.files_written.push_back(p.string());
  return true;
}

inline constexpr const char* kStatHeader = "N_m,stat,value,stderr,conditioned,window_c,window_w,seed\n";

inline void stat_row(std::string& out, double nm, const char* stat, double value, double se,
                     int conditioned, double wc, double ww, std::uint64_t seed) {
  out += csv::g12(nm);
  out += ',';
  out += stat;
  out += ',';
  out += csv::g12(value);
  out += ',';
  out += csv::g12(se);
  out += ',';
  out += csv::i64(conditioned);
  out += ',';
  out += csv::g12(wc);
  out += ',';
  out += csv::g12(ww);
  out += ',';
  out += csv::u64(seed);
  out += '\n';
}

/// Statistics block for one ensemble: per-beam summaries, tap summary,
/// pair figures, and (unconditioned only) the closed-form predictions at
/// the effective efficiency (1 - tap_ratio) * eta_signal.
inline void append_stats(std::string& out, const mc::Ensemble& e, const Scenario& sc, double nm,
                         int conditioned, double wc, double ww, std::uint64_t seed) {
  const std::vector<double> sv = est::signal_values(e);
  const std::vector<double> iv = est::idler_values(e);
  const std::vector<double> cv = est::tap_values(e);
  auto emit_beam = [&](const char* suffix, const std::vector<double>& v) {
    const est::StatEstimate m = est::mean_stat(v);
    if (m.defined)
      stat_row(out, nm, (std::string("mean_") + suffix).c_str(), m.value, m.se, conditioned, wc,
               ww, seed);
    const est::StatEstimate va = est::var_stat(v);
    if (va.defined)
      stat_row(out, nm, (std::string("var_") + suffix).c_str(), va.value, va.se, conditioned, wc,
               ww, seed);
    const est::StatEstimate md = est::mdr_stat(v);
    if (md.defined)
      stat_row(out, nm, (std::string("mdr_") + suffix).c_str(), md.value, md.se, conditioned, wc,
               ww, seed);
    const est::StatEstimate g2 = est::g2_sample(v);
    if (g2.defined)
      stat_row(out, nm, (std::string("g2_") + suffix).c_str(), g2.value, g2.se, conditioned, wc,
               ww, seed);
  };
  emit_beam("s", sv);
  emit_beam("i", iv);
  emit_beam("c", cv);
  const est::StatEstimate n = est::nrf(e);
  if (n.defined) stat_row(out, nm, "nrf", n.value, n.se, conditioned, wc, ww, seed);
  const est::StatEstimate f = est::fano(e);
  if (f.defined) stat_row(out, nm, "fano", f.value, f.se, conditioned, wc, ww, seed);
  if (!conditioned) {
    const double eta_eff = (1.0 - sc.channel.tap_ratio) * sc.channel.eta_signal;
    stat_row(out, nm, "nrf_pred",
             analytic::nrf_expected(sc.source.matched_modes, sc.source.unmatched_modes, eta_eff,
                                    nm),
             0.0, 0, wc, ww, seed);
    stat_row(out, nm, "fano_pred", analytic::fano_expected(nm, eta_eff), 0.0, 0, wc, ww, seed);
  }
}

/// Window rows: a numeric status (0 ok, 1 empty, 2 zero spread, 3 not
/// enough pulses), the acceptance ratio, then conditioned statistics.
inline void append_window_block(std::string& out, const mc::Ensemble& e, const Scenario& sc,
                                double nm, const ConditionWindow& w, std::uint64_t seed) {
  const mc::ConditionResult cond = mc::apply_condition(e, w);
  int code = 0;
  switch (cond.status) {
    case mc::ConditionStatus::ok: code = 0; break;
    case mc::ConditionStatus::empty: code = 1; break;
    case mc::ConditionStatus::zero_width: code = 2; break;
    case mc::ConditionStatus::too_small: code = 3; break;
  }
  stat_row(out, nm, "window_status", code, 0.0, 1, w.center_scale, w.width_sigma, seed);
  stat_row(out, nm, "acceptance", cond.acceptance, 0.0, 1, w.center_scale, w.width_sigma, seed);
  if (cond.status == mc::ConditionStatus::ok)
    append_stats(out, cond.ensemble, sc, nm, 1, w.center_scale, w.width_sigma, seed);
}

inline ValidationResult validate_scenario_config(const Scenario& s) {
  if (s.windows.empty()) return validate(s.source, s.channel);
  ValidationResult first = validate(s.source, s.channel, s.windows[0]);
  for (std::size_t i = 1; i < s.windows.size(); ++i) {
    const ValidationResult r = validate(s.source, s.channel, s.windows[i]);
    for (const auto& e : r.errors)
      if (std::find(first.errors.begin(), first.errors.end(), e) == first.errors.end())
        first.errors.push_back(e);
  }
  if (!first.errors.empty()) first.config.reset();
  return first;
}

inline mc::SimOptions sim_options(const Scenario& s) {
  mc::SimOptions o;
  o.threads = s.threads;
  o.binomial.gaussian_fast_path = s.gaussian_binomial;
  return o;
}

}  // namespace detail

/// Runs one configuration and writes <name>_ensemble.csv,
/// <name>_stats.csv, and <name>_manifest.json into out_dir.
inline RunReport cmd_simulate(const Scenario& sc, const std::string& out_dir) {
  RunReport rep;
  const ValidationResult vr = detail::validate_scenario_config(sc);
  if (!vr.ok()) {
    rep.status = RunStatus::config_error;
    rep.messages = vr.errors;
    return rep;
  }
  const ValidatedConfig& cfg = *vr.config;
  const mc::Ensemble e = mc::run_ensemble(cfg, sc.seed, sc.pulses, detail::sim_options(sc));

  std::string stats = detail::kStatHeader;
  const double nm = sc.source.n_mean_per_mode;
  detail::append_stats(stats, e, sc, nm, 0, 0.0, 0.0, sc.seed);
  for (const auto& w : sc.windows) detail::append_window_block(stats, e, sc, nm, w, sc.seed);

  const std::filesystem::path dir(out_dir);
  if (!detail::write_out(dir, sc.name + "_ensemble.csv", mc::ensemble_csv(e), rep)) return rep;
  if (!detail::write_out(dir, sc.name + "_stats.csv", stats, rep)) return rep;
  const std::vector<std::string> outputs = {sc.name + "_ensemble.csv", sc.name + "_stats.csv",
                                            sc.name + "_manifest.json"};
  if (!detail::write_out(dir, sc.name + "_manifest.json",
                         detail::manifest_text("simulate", sc, &cfg.digest, outputs), rep))
    return rep;
  rep.messages.push_back("simulated " + csv::u64(sc.pulses) + " pulses");
  return rep;
}

/// Runs the scenario once per sweep value (overriding n_mean_per_mode and
/// optionally the mode counts) and writes one combined statistics CSV.
inline RunReport cmd_sweep(const Scenario& sc, const std::string& out_dir) {
  RunReport rep;
  if (sc.sweep.empty()) {
    rep.status = RunStatus::config_error;
    rep.messages.push_back("sweep requires a non-empty sweep array");
    return rep;
  }
  std::string stats = detail::kStatHeader;
  for (std::size_t i = 0; i < sc.sweep.size(); ++i) {
    Scenario point = sc;
    point.source.n_mean_per_mode = sc.sweep[i];
    if (!sc.sweep_modes.empty()) {
      point.source.matched_modes = sc.sweep_modes[i].first;
      point.source.unmatched_modes = sc.sweep_modes[i].second;
    }
    const ValidationResult vr = detail::validate_scenario_config(point);
    if (!vr.ok()) {
      rep.status = RunStatus::config_error;
      for (const auto& e : vr.errors)
        rep.messages.push_back("sweep point " + csv::u64(i) + ": " + e);
      return rep;
    }
    const std::uint64_t point_seed = sc.seed + i;
    const mc::Ensemble e =
        mc::run_ensemble(*vr.config, point_seed, sc.pulses, detail::sim_options(sc));
    const double nm = point.source.n_mean_per_mode;
    detail::append_stats(stats, e, point, nm, 0, 0.0, 0.0, point_seed);
    for (const auto& w : sc.windows)
      detail::append_window_block(stats, e, point, nm, w, point_seed);
  }
  const std::filesystem::path dir(out_dir);
  if (!detail::write_out(dir, sc.name + "_sweep.csv", stats, rep)) return rep;
  const std::vector<std::string> outputs = {sc.name + "_sweep.csv", sc.name + "_manifest.json"};
  if (!detail::write_out(dir, sc.name + "_manifest.json",
                         detail::manifest_text("sweep", sc, nullptr, outputs), rep))
    return rep;
  rep.messages.push_back("swept " + csv::u64(sc.sweep.size()) + " points");
  return rep;
}

/// Fits the saturating-gain model to a P,S table and writes the fitted
/// parameters plus a per-point curve table.
inline RunReport cmd_fit_gain(const std::string& data_path, const std::string& out_dir) {
  RunReport rep;
  const csv::PowerTable table = csv::read_power_signal_csv(data_path);
  if (!table.ok) {
    rep.status = RunStatus::io_error;
    rep.messages.push_back(table.error);
    return rep;
  }
  std::vector<double> P, S;
  for (const auto& r : table.rows) {
    P.push_back(r.power);
    S.push_back(r.signal);
  }
  const est::GainFit fit = est::gain_fit(P, S);
  if (!fit.ok) {
    rep.status = RunStatus::config_error;
    rep.messages.push_back(fit.message);
    return rep;
  }
  std::string params = "key,value\n";
  params += "amplitude," + csv::g12(fit.amplitude) + "\n";
  params += "rate," + csv::g12(fit.rate) + "\n";
  params += "residual_rms," + csv::g12(fit.residual_rms) + "\n";
  params += "g_min," + csv::g12(fit.g_min) + "\n";
  params += "g_max," + csv::g12(fit.g_max) + "\n";
  std::string curve = "P,S,model\n";
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double x = std::sqrt(fit.rate * P[i]);
    const double sh = std::sinh(x);
    curve += csv::g12(P[i]) + "," + csv::g12(S[i]) + "," + csv::g12(fit.amplitude * sh * sh) + "\n";
  }
  const std::filesystem::path dir(out_dir);
  if (!detail::write_out(dir, "gain_fit.csv", params, rep)) return rep;
  if (!detail::write_out(dir, "gain_curve.csv", curve, rep)) return rep;
  Scenario dummy;
  dummy.name = "fit-gain";
  const std::vector<std::string> outputs = {"gain_fit.csv", "gain_curve.csv",
                                            "gain_manifest.json"};
  nlohmann::json j;
  j["command"] = "fit-gain";
  j["version"] = kVersion;
  j["data"] = data_path;
  j["outputs"] = outputs;
  if (!detail::write_out(dir, "gain_manifest.json", j.dump(2) + "\n", rep)) return rep;
  rep.messages.push_back("amplitude " + csv::g12(fit.amplitude) + ", rate " + csv::g12(fit.rate) +
                         ", range " + csv::g12(fit.g_min) + ".." + csv::g12(fit.g_max));
  return rep;
}

/// One row of the simulation-vs-enumeration comparison.
struct OracleRow {
  std::string stat;
  int window = -1;  // -1 for unconditioned rows
  double mc = 0.0;
  double exact = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;
};

namespace detail {

inline OracleRow compare(const std::string& stat, int window, double mcv, double exv, double se) {
  OracleRow r;
  r.stat = stat;
  r.window = window;
  r.mc = mcv;
  r.exact = exv;
  r.se = se;
  if (se > 0.0) {
    r.z = std::fabs(mcv - exv) / se;
    r.pass = r.z <= 4.0;
  } else {
    r.z = 0.0;
    r.pass = std::fabs(mcv - exv) <= 1e-12;
  }
  return r;
}

inline void compare_ensemble(std::vector<OracleRow>& rows, const mc::Ensemble& e,
                             const oracle::OracleStats& ex, int window) {
  const std::vector<double> sv = est::signal_values(e);
  const std::vector<double> iv = est::idler_values(e);
  const est::StatEstimate ms = est::mean_stat(sv);
  rows.push_back(compare("mean_s", window, ms.value, ex.signal.mean, ms.se));
  const est::StatEstimate mi = est::mean_stat(iv);
  rows.push_back(compare("mean_i", window, mi.value, ex.idler.mean, mi.se));
  const est::StatEstimate vs = est::var_stat(sv);
  rows.push_back(compare("var_s", window, vs.value, ex.signal.variance, vs.se));
  const est::StatEstimate vi = est::var_stat(iv);
  rows.push_back(compare("var_i", window, vi.value, ex.idler.variance, vi.se));
  const est::StatEstimate mds = est::mdr_stat(sv);
  if (mds.defined && ex.mdr_signal_defined)
    rows.push_back(compare("mdr_s", window, mds.value, ex.mdr_signal, mds.se));
  const est::StatEstimate mdi = est::mdr_stat(iv);
  if (mdi.defined && ex.mdr_idler_defined)
    rows.push_back(compare("mdr_i", window, mdi.value, ex.mdr_idler, mdi.se));
  const est::StatEstimate nr = est::nrf(e);
  if (nr.defined && ex.pair_defined)
    rows.push_back(compare("nrf", window, nr.value, ex.nrf, nr.se));
  const est::StatEstimate fa = est::fano(e);
  if (fa.defined && ex.pair_defined)
    rows.push_back(compare("fano", window, fa.value, ex.fano, fa.se));
}

}  // namespace detail

/// Cross-validates the sampler against exact enumeration on a small
/// instance: every statistic must agree within four standard errors, and
/// selection windows must agree on whether they capture any pulses.
inline RunReport cmd_oracle_check(const Scenario& sc, const std::string& out_dir,
                                  std::vector<OracleRow>* rows_out = nullptr) {
  RunReport rep;
  const ValidationResult vr = detail::validate_scenario_config(sc);
  if (!vr.ok()) {
    rep.status = RunStatus::config_error;
    rep.messages = vr.errors;
    return rep;
  }
  const ValidatedConfig& cfg = *vr.config;
  const oracle::JointPmf pmf = oracle::exact_pipeline(cfg);
  if (!pmf.ok) {
    rep.status = RunStatus::guard_error;
    rep.messages.push_back(pmf.error);
    return rep;
  }
  const oracle::OracleStats ex = oracle::exact_stats(pmf);
  const mc::Ensemble e = mc::run_ensemble(cfg, sc.seed, sc.pulses, detail::sim_options(sc));

  std::vector<OracleRow> rows;
  detail::compare_ensemble(rows, e, ex, -1);

  for (std::size_t wi = 0; wi < sc.windows.size(); ++wi) {
    const ConditionWindow& w = sc.windows[wi];
    const mc::ConditionResult cond = mc::apply_condition(e, w);
    const oracle::ConditionalStats cex = oracle::exact_conditional_stats(pmf, w);
    const bool mc_empty = cond.status != mc::ConditionStatus::ok;
    const bool ex_empty = !cex.ok;
    if (mc_empty || ex_empty) {
      OracleRow r;
      r.stat = "window_occupancy";
      r.window = static_cast<int>(wi);
      r.mc = cond.acceptance;
      r.exact = cex.ok ? cex.mass : 0.0;
      r.se = 0.0;
      r.z = 0.0;
      r.pass = mc_empty == ex_empty;
      rows.push_back(r);
      continue;
    }
    const double n = static_cast<double>(e.records.size());
    const double mass_se = std::sqrt(cex.mass * (1.0 - cex.mass) / n);
    rows.push_back(detail::compare("acceptance", static_cast<int>(wi), cond.acceptance, cex.mass,
                                   mass_se));
    detail::compare_ensemble(rows, cond.ensemble, cex.stats, static_cast<int>(wi));
  }

  bool all_pass = true;
  std::string csv_text = "stat,window,mc,exact,se,z,pass\n";
  for (const auto& r : rows) {
    all_pass = all_pass && r.pass;
    csv_text += r.stat + "," + csv::i64(r.window) + "," + csv::g12(r.mc) + "," +
                csv::g12(r.exact) + "," + csv::g12(r.se) + "," + csv::g12(r.z) + "," +
                (r.pass ? "1" : "0") + "\n";
  }
  if (rows_out) *rows_out = rows;

  const std::filesystem::path dir(out_dir);
  if (!detail::write_out(dir, sc.name + "_oracle_check.csv", csv_text, rep)) return rep;
  if (!detail::write_out(dir, sc.name + "_oracle_pmf.csv", oracle::joint_pmf_csv(pmf), rep))
    return rep;
  const std::vector<std::string> outputs = {sc.name + "_oracle_check.csv",
                                            sc.name + "_oracle_pmf.csv",
                                            sc.name + "_manifest.json"};
  if (!detail::write_out(dir, sc.name + "_manifest.json",
                         detail::manifest_text("oracle-check", sc, &cfg.digest, outputs), rep))
    return rep;
  if (!all_pass) {
    rep.status = RunStatus::check_failed;
    for (const auto& r : rows)
      if (!r.pass)
        rep.messages.push_back("disagreement: " + r.stat + " (window " + csv::i64(r.window) +
                               ") z=" + csv::g12(r.z));
    return rep;
  }
  rep.messages.push_back("all " + csv::u64(rows.size()) + " comparisons within 4 standard errors");
  return rep;
}

}  // namespace twinsim::scenario
