#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "twinsim/csv.hpp"
#include "twinsim/estimators.hpp"
#include "twinsim/montecarlo.hpp"
#include "twinsim/oracle.hpp"
#include "twinsim/scenario.hpp"
#include "json.hpp"

using namespace twinsim;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::path("scenario_test_out") / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool has_error(const std::vector<std::string>& errs, const std::string& needle) {
  return std::find(errs.begin(), errs.end(), needle) != errs.end();
}

}  // namespace

TEST_CASE("builtin catalogue") {
  const auto names = scenario::builtin_names();
  REQUIRE(names.size() == 5);
  for (const char* n : {"fig2a", "sweep-large-aperture", "sweep-small-aperture", "fano-sweep",
                        "oracle-small"}) {
    CAPTURE(n);
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
    const auto sc = scenario::builtin_scenario(n);
    REQUIRE(sc.has_value());
    CHECK(sc->name == n);
    // every shipped scenario must validate, including all its windows
    const auto vr = scenario::detail::validate_scenario_config(*sc);
    CHECK(vr.ok());
  }
  CHECK_FALSE(scenario::builtin_scenario("no-such-thing").has_value());

  const auto fig = scenario::builtin_scenario("fig2a").value();
  CHECK(fig.source.n_mean_per_mode == 7.0);
  CHECK(fig.source.matched_modes == 91);
  CHECK(fig.source.unmatched_modes == 9);
  CHECK(fig.channel.tap_ratio == 0.1);
  CHECK(fig.channel.eta_signal == 0.8);
  CHECK(fig.pulses == 20000);
  REQUIRE_FALSE(fig.sweep.empty());
  CHECK(fig.sweep.front() == 2.0);
  CHECK(fig.sweep.back() == 7.0);
  REQUIRE(fig.windows.size() == 1);
  CHECK(fig.windows[0].width_sigma == 0.5);
}

TEST_CASE("scenario json round trip and defaults") {
  const auto p = scenario::parse_scenario_json(R"({
    "name": "demo_run",
    "source": {"n_mean_per_mode": 1.5, "matched_modes": 4, "unmatched_modes": 1},
    "channel": {"tap_ratio": 0.2, "eta_signal": 0.9, "eta_idler": 0.85},
    "windows": [{"center_scale": 1.0, "width_sigma": 0.5}],
    "pulses": 12345,
    "seed": 99,
    "threads": 2,
    "sweep": [1.0, 2.0, 3.0]
  })");
  REQUIRE(p.ok);
  CHECK(p.scenario.name == "demo_run");
  CHECK(p.scenario.source.n_mean_per_mode == 1.5);
  CHECK(p.scenario.source.matched_modes == 4);
  CHECK(p.scenario.channel.eta_idler == 0.85);
  // the monitor efficiency falls back to the signal efficiency
  CHECK(p.scenario.channel.eta_tap == 0.9);
  CHECK(p.scenario.pulses == 12345);
  CHECK(p.scenario.seed == 99);
  CHECK(p.scenario.threads == 2);
  REQUIRE(p.scenario.sweep.size() == 3);

  const auto d = scenario::parse_scenario_json("{}");
  REQUIRE(d.ok);
  CHECK(d.scenario.name == "custom");
  CHECK(d.scenario.pulses == 20000);
  CHECK(d.scenario.seed == 1);
  CHECK(d.scenario.threads == 1);
}

TEST_CASE("scenario json rejects unknown keys everywhere") {
  const auto p = scenario::parse_scenario_json(R"({
    "frobnicate": 1,
    "source": {"n_mean_per_mode": 1.0, "typo_key": 2},
    "channel": {"tap_ratio": 0.1, "bogus": 3},
    "windows": [{"center_scale": 1.0, "width_sigma": 0.5, "extra": 4}]
  })");
  REQUIRE_FALSE(p.ok);
  CHECK(has_error(p.errors, "unknown key 'frobnicate' in top level"));
  CHECK(has_error(p.errors, "unknown key 'typo_key' in source"));
  CHECK(has_error(p.errors, "unknown key 'bogus' in channel"));
  CHECK(has_error(p.errors, "unknown key 'extra' in windows[]"));
}

TEST_CASE("scenario json type and value errors are collected together") {
  const auto p = scenario::parse_scenario_json(R"({
    "name": "bad name!",
    "source": {"n_mean_per_mode": "seven", "matched_modes": 2.5},
    "pulses": 0,
    "threads": 0,
    "sweep": [3.0, 2.0]
  })");
  REQUIRE_FALSE(p.ok);
  CHECK(has_error(p.errors, "name must be 1-64 characters from [A-Za-z0-9_-]"));
  CHECK(has_error(p.errors, "source.n_mean_per_mode must be a number"));
  CHECK(has_error(p.errors, "source.matched_modes must be an integer"));
  CHECK(has_error(p.errors, "pulses must be a positive integer"));
  CHECK(has_error(p.errors, "threads must be a positive integer"));
  CHECK(has_error(p.errors, "sweep values must be strictly increasing"));
  CHECK(p.errors.size() >= 6);
}

TEST_CASE("scenario json sweep mode overrides must align") {
  const auto bad = scenario::parse_scenario_json(R"({
    "sweep": [1.0, 2.0],
    "sweep_modes": [[2, 1]]
  })");
  REQUIRE_FALSE(bad.ok);
  CHECK(has_error(bad.errors, "sweep_modes must have the same length as sweep"));

  const auto good = scenario::parse_scenario_json(R"({
    "sweep": [1.0, 2.0],
    "sweep_modes": [[2, 1], [3, 0]]
  })");
  REQUIRE(good.ok);
  REQUIRE(good.scenario.sweep_modes.size() == 2);
  CHECK(good.scenario.sweep_modes[1].first == 3);
}

TEST_CASE("scenario json top-level shape errors") {
  CHECK(scenario::parse_scenario_json("not json").errors ==
        std::vector<std::string>{"invalid JSON"});
  CHECK(scenario::parse_scenario_json("[1,2]").errors ==
        std::vector<std::string>{"top level must be an object"});
}

TEST_CASE("scenario file loading distinguishes io failures") {
  const auto p = scenario::load_scenario_file("does/not/exist.json");
  CHECK(p.io_failure);
  REQUIRE_FALSE(p.errors.empty());
  CHECK(p.errors[0].rfind("cannot open ", 0) == 0);
}

TEST_CASE("simulate writes the full artifact set") {
  auto sc = scenario::builtin_scenario("oracle-small").value();
  sc.pulses = 2000;
  const auto dir = fresh_dir("simulate");
  const auto rep = scenario::cmd_simulate(sc, dir.string());
  REQUIRE(rep.status == scenario::RunStatus::ok);
  REQUIRE(rep.files_written.size() == 3);

  const std::string ens = slurp(dir / "oracle-small_ensemble.csv");
  CHECK(ens.rfind("pulse,d_s,d_i,n_c\n", 0) == 0);
  CHECK(std::count(ens.begin(), ens.end(), '\n') == 2001);

  const std::string stats = slurp(dir / "oracle-small_stats.csv");
  CHECK(stats.rfind("N_m,stat,value,stderr,conditioned,window_c,window_w,seed\n", 0) == 0);
  CHECK(stats.find(",mean_s,") != std::string::npos);
  CHECK(stats.find(",nrf,") != std::string::npos);
  CHECK(stats.find(",nrf_pred,") != std::string::npos);
  CHECK(stats.find(",fano_pred,") != std::string::npos);
  CHECK(stats.find(",window_status,") != std::string::npos);
  CHECK(stats.find(",acceptance,") != std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(dir / "oracle-small_manifest.json"));
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["scenario"]["name"] == "oracle-small");
  CHECK(manifest["config_digest"].get<std::string>().size() == 16);
  CHECK(manifest["outputs"].size() == 3);
}

TEST_CASE("simulate is byte-for-byte reproducible") {
  auto sc = scenario::builtin_scenario("oracle-small").value();
  sc.pulses = 3000;
  sc.threads = 1;
  const auto d1 = fresh_dir("repro1");
  const auto d2 = fresh_dir("repro2");
  REQUIRE(scenario::cmd_simulate(sc, d1.string()).status == scenario::RunStatus::ok);
  sc.threads = 3;  // thread count must not leak into any artifact content
  REQUIRE(scenario::cmd_simulate(sc, d2.string()).status == scenario::RunStatus::ok);
  CHECK(slurp(d1 / "oracle-small_ensemble.csv") == slurp(d2 / "oracle-small_ensemble.csv"));
  CHECK(slurp(d1 / "oracle-small_stats.csv") == slurp(d2 / "oracle-small_stats.csv"));
}

TEST_CASE("simulate survives a dark source") {
  scenario::Scenario sc;
  sc.name = "dark";
  sc.source = {0.0, 1, 0};
  sc.channel = {0.1, 0.8, 0.8, 0.8, 0.0};
  sc.windows = {{1.0, 0.5}};
  sc.pulses = 500;
  const auto dir = fresh_dir("dark");
  const auto rep = scenario::cmd_simulate(sc, dir.string());
  REQUIRE(rep.status == scenario::RunStatus::ok);
  const std::string stats = slurp(dir / "dark_stats.csv");
  // means are reported as zero, the window reports zero spread (code 2)
  CHECK(stats.find("0,mean_s,0,0,0,") != std::string::npos);
  CHECK(stats.find(",window_status,2,") != std::string::npos);
}

TEST_CASE("simulate rejects invalid configurations with the config exit status") {
  scenario::Scenario sc;
  sc.source = {1.0, 2, 0};
  sc.channel = {0.1, 2.0, 0.8, 0.8, 0.0};  // efficiency out of range
  const auto rep = scenario::cmd_simulate(sc, fresh_dir("bad").string());
  CHECK(rep.status == scenario::RunStatus::config_error);
  REQUIRE_FALSE(rep.messages.empty());
  CHECK(has_error(rep.messages, "eta_signal out of [0,1]"));
}

TEST_CASE("sweep writes one combined table over the swept brightness") {
  auto sc = scenario::builtin_scenario("oracle-small").value();
  sc.pulses = 1500;
  sc.sweep = {0.5, 1.0};
  const auto dir = fresh_dir("sweep");
  const auto rep = scenario::cmd_sweep(sc, dir.string());
  REQUIRE(rep.status == scenario::RunStatus::ok);
  const std::string stats = slurp(dir / "oracle-small_sweep.csv");
  CHECK(stats.find("\n0.5,mean_s,") != std::string::npos);
  CHECK(stats.find("\n1,mean_s,") != std::string::npos);
  // per-point seeds are derived from the base seed in order
  CHECK(stats.find("," + csv::u64(sc.seed) + "\n") != std::string::npos);
  CHECK(stats.find("," + csv::u64(sc.seed + 1) + "\n") != std::string::npos);

  scenario::Scenario empty = sc;
  empty.sweep.clear();
  const auto bad = scenario::cmd_sweep(empty, dir.string());
  CHECK(bad.status == scenario::RunStatus::config_error);
  CHECK(has_error(bad.messages, "sweep requires a non-empty sweep array"));
}

TEST_CASE("sweep honours per-point mode overrides") {
  auto sc = scenario::builtin_scenario("oracle-small").value();
  sc.pulses = 4000;
  sc.sweep = {0.8, 0.8001};
  sc.sweep_modes = {{2, 1}, {8, 1}};
  const auto dir = fresh_dir("sweep-modes");
  const auto rep = scenario::cmd_sweep(sc, dir.string());
  REQUIRE(rep.status == scenario::RunStatus::ok);
  // four times the matched modes at the same brightness roughly quadruples
  // the detected mean
  const std::string stats = slurp(dir / "oracle-small_sweep.csv");
  double m1 = -1.0, m2 = -1.0;
  std::istringstream ss(stats);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.find(",mean_s,") == std::string::npos) continue;
    const auto second_comma = line.find(',', line.find(',') + 1);
    const double v = std::stod(line.substr(second_comma + 1));
    if (line.rfind("0.8,", 0) == 0) m1 = v;
    if (line.rfind("0.8001,", 0) == 0) m2 = v;
  }
  REQUIRE(m1 > 0.0);
  REQUIRE(m2 > 0.0);
  CHECK(m2 / m1 == Catch::Approx(3.0).margin(0.35));  // (8+1)/(2+1) modes
}

TEST_CASE("gain fit command round trip on exact data") {
  const auto dir = fresh_dir("gain");
  std::string data = "P,S\n";
  for (int p = 12; p <= 28; ++p) {
    const double sh = std::sinh(std::sqrt(static_cast<double>(p)));
    data += csv::g12(static_cast<double>(p)) + "," + csv::g12(2.0 * sh * sh) + "\n";
  }
  const auto data_path = dir / "calib.csv";
  REQUIRE(csv::write_file(data_path.string(), data));

  const auto rep = scenario::cmd_fit_gain(data_path.string(), dir.string());
  REQUIRE(rep.status == scenario::RunStatus::ok);
  const std::string params = slurp(dir / "gain_fit.csv");
  CHECK(params.rfind("key,value\n", 0) == 0);

  double amplitude = 0.0, rate = 0.0, gmin = 0.0, gmax = 0.0;
  std::istringstream ss(params);
  std::string line;
  while (std::getline(ss, line)) {
    const auto c = line.find(',');
    if (c == std::string::npos) continue;
    const std::string key = line.substr(0, c);
    if (key == "amplitude") amplitude = std::stod(line.substr(c + 1));
    if (key == "rate") rate = std::stod(line.substr(c + 1));
    if (key == "g_min") gmin = std::stod(line.substr(c + 1));
    if (key == "g_max") gmax = std::stod(line.substr(c + 1));
  }
  CHECK(std::fabs(amplitude - 2.0) / 2.0 < 1e-6);
  CHECK(std::fabs(rate - 1.0) < 1e-6);
  CHECK(gmin == Catch::Approx(std::sqrt(12.0)).epsilon(1e-6));
  CHECK(gmax == Catch::Approx(std::sqrt(28.0)).epsilon(1e-6));

  const std::string curve = slurp(dir / "gain_curve.csv");
  CHECK(curve.rfind("P,S,model\n", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 18);
}

TEST_CASE("gain fit command surfaces reader errors") {
  const auto dir = fresh_dir("gain-bad");
  CHECK(scenario::cmd_fit_gain((dir / "missing.csv").string(), dir.string()).status ==
        scenario::RunStatus::io_error);

  const auto wrong = dir / "wrong_header.csv";
  REQUIRE(csv::write_file(wrong.string(), "power,signal\n1,2\n"));
  const auto r1 = scenario::cmd_fit_gain(wrong.string(), dir.string());
  CHECK(r1.status == scenario::RunStatus::io_error);
  REQUIRE_FALSE(r1.messages.empty());
  CHECK(r1.messages[0].rfind("expected header P,S", 0) == 0);

  const auto short_file = dir / "short.csv";
  REQUIRE(csv::write_file(short_file.string(), "P,S\n12,100\n16,200\n"));
  const auto r2 = scenario::cmd_fit_gain(short_file.string(), dir.string());
  CHECK(r2.status == scenario::RunStatus::config_error);
  CHECK(has_error(r2.messages, "need at least 3 points"));
}

TEST_CASE("power table reader accepts padding and rejects corruption") {
  const auto dir = fresh_dir("reader");
  const auto padded = dir / "padded.csv";
  REQUIRE(csv::write_file(padded.string(), " P,S \r\n 12 , 100 \r\n\n13,200\n"));
  const auto t = csv::read_power_signal_csv(padded.string());
  REQUIRE(t.ok);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].power == 12.0);
  CHECK(t.rows[0].signal == 100.0);

  const auto truncated = dir / "truncated.csv";
  REQUIRE(csv::write_file(truncated.string(), "P,S\n12\n"));
  CHECK(csv::read_power_signal_csv(truncated.string()).error == "malformed row at line 2");

  const auto alpha = dir / "alpha.csv";
  REQUIRE(csv::write_file(alpha.string(), "P,S\n12,abc\n"));
  CHECK(csv::read_power_signal_csv(alpha.string()).error == "non-numeric value at line 2");

  const auto empty = dir / "empty.csv";
  REQUIRE(csv::write_file(empty.string(), ""));
  CHECK(csv::read_power_signal_csv(empty.string()).error.rfind("empty file", 0) == 0);
}

TEST_CASE("oracle check passes on the shipped small instance") {
  auto sc = scenario::builtin_scenario("oracle-small").value();
  sc.pulses = 20000;
  const auto dir = fresh_dir("oracle");
  std::vector<scenario::OracleRow> rows;
  const auto rep = scenario::cmd_oracle_check(sc, dir.string(), &rows);
  REQUIRE(rep.status == scenario::RunStatus::ok);
  REQUIRE_FALSE(rows.empty());
  for (const auto& r : rows) {
    CAPTURE(r.stat, r.window, r.z);
    CHECK(r.pass);
  }
  // the first shipped window straddles no integer: both routes must agree
  // that it is empty
  bool occupancy_row = false;
  for (const auto& r : rows)
    if (r.stat == "window_occupancy" && r.window == 0) occupancy_row = true;
  CHECK(occupancy_row);
  // the second shipped window is populated and fully compared
  bool conditioned_mean = false;
  for (const auto& r : rows)
    if (r.stat == "mean_s" && r.window == 1) conditioned_mean = true;
  CHECK(conditioned_mean);

  const std::string csv_text = slurp(dir / "oracle-small_oracle_check.csv");
  CHECK(csv_text.rfind("stat,window,mc,exact,se,z,pass\n", 0) == 0);
  const std::string pmf_text = slurp(dir / "oracle-small_oracle_pmf.csv");
  CHECK(pmf_text.rfind("d_s,d_i,n_c,p\n", 0) == 0);
}

TEST_CASE("oracle check refuses instances beyond the enumeration guard") {
  const auto sc = scenario::builtin_scenario("fig2a").value();
  const auto rep = scenario::cmd_oracle_check(sc, fresh_dir("oracle-guard").string());
  CHECK(rep.status == scenario::RunStatus::guard_error);
  REQUIRE_FALSE(rep.messages.empty());
  CHECK(rep.messages[0].find("exact enumeration requires") != std::string::npos);
}

TEST_CASE("a corrupted efficiency is detected by the cross-validation") {
  // simulate at eta = 0.7 but enumerate at eta = 0.75: the mean comparison
  // must reject the mismatch decisively
  const auto sim = validate(SourceConfig{0.8, 2, 1}, ChannelConfig{0.2, 0.7, 0.7, 0.7, 0.0});
  const auto ref = validate(SourceConfig{0.8, 2, 1}, ChannelConfig{0.2, 0.75, 0.75, 0.75, 0.0});
  REQUIRE(sim.ok());
  REQUIRE(ref.ok());
  const auto e = mc::run_ensemble(*sim.config, 404, 200000);
  const auto pmf = oracle::exact_pipeline(*ref.config);
  REQUIRE(pmf.ok);
  const auto ex = oracle::exact_stats(pmf);
  const auto ms = est::mean_stat(est::signal_values(e));
  const double z = std::fabs(ms.value - ex.signal.mean) / ms.se;
  CHECK(z > 10.0);
}

TEST_CASE("run statuses map to the documented exit codes") {
  CHECK(static_cast<int>(scenario::RunStatus::ok) == 0);
  CHECK(static_cast<int>(scenario::RunStatus::config_error) == 2);
  CHECK(static_cast<int>(scenario::RunStatus::io_error) == 3);
  CHECK(static_cast<int>(scenario::RunStatus::guard_error) == 4);
  CHECK(static_cast<int>(scenario::RunStatus::check_failed) == 5);
}
