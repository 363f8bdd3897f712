// End-to-end sampled run: generate a tapped twin-beam ensemble, condition
// on the tap count, and compare the difference-noise and single-beam
// statistics before and after the window.
#include <cstdio>

#include "twinsim/estimators.hpp"
#include "twinsim/montecarlo.hpp"
#include "twinsim/scenario.hpp"

namespace {

void report(const char* label, const twinsim::mc::Ensemble& e) {
  using namespace twinsim;
  const auto sig = est::summarize(est::signal_values(e));
  const auto n = est::nrf(e);
  const auto f = est::fano(e);
  std::printf("%-14s pulses %7zu | signal mean %9.3f var %10.1f MDR %6.3f", label,
              e.records.size(), sig.mean, sig.variance, sig.mdr);
  if (n.defined) std::printf(" | NRF %.4f +- %.4f", n.value, n.se);
  if (f.defined) std::printf(" | Fano %.3f +- %.3f", f.value, f.se);
  std::printf("\n");
}

}  // namespace

int main() {
  using namespace twinsim;
  const scenario::Scenario sc = scenario::builtin_scenario("fig2a").value();
  const auto vr = validate(sc.source, sc.channel);
  if (!vr.ok()) {
    std::fprintf(stderr, "invalid configuration\n");
    return 1;
  }
  const auto& cfg = *vr.config;
  std::printf("Source: %d matched + %d unmatched modes, n_mean %.2f per mode\n",
              cfg.source.matched_modes, cfg.source.unmatched_modes, cfg.source.n_mean_per_mode);
  std::printf("Chain: tap ratio %.2f, detector efficiencies %.2f/%.2f/%.2f\n\n",
              cfg.channel.tap_ratio, cfg.channel.eta_signal, cfg.channel.eta_idler,
              cfg.channel.eta_tap);

  const auto ensemble = mc::run_ensemble(cfg, 42, 20000, mc::SimOptions{});
  report("unconditioned", ensemble);

  for (double w : {2.0, 0.5}) {
    const auto cond = mc::apply_condition(ensemble, ConditionWindow{1.0, w});
    if (cond.status != mc::ConditionStatus::ok) {
      std::printf("window %.2f sigma: unusable\n", w);
      continue;
    }
    char label[32];
    std::snprintf(label, sizeof(label), "window %.2f sd", w);
    report(label, cond.ensemble);
    std::printf("%-14s acceptance %.4f, tap range [%.1f, %.1f]\n", "", cond.acceptance, cond.lo,
                cond.hi);
  }
  return 0;
}
