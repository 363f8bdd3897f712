// Cross-validation on a small instance: the same physical chain evaluated
// two independent ways — exact dense enumeration of the output pmf versus
// a sampled ensemble — with agreement quoted in standard errors.
#include <cmath>
#include <cstdio>

#include "twinsim/estimators.hpp"
#include "twinsim/montecarlo.hpp"
#include "twinsim/oracle.hpp"
#include "twinsim/scenario.hpp"

int main() {
  using namespace twinsim;
  const scenario::Scenario sc = scenario::builtin_scenario("oracle-small").value();
  const auto vr = validate(sc.source, sc.channel);
  if (!vr.ok()) {
    std::fprintf(stderr, "invalid configuration\n");
    return 1;
  }
  const auto& cfg = *vr.config;

  const auto pmf = oracle::exact_pipeline(cfg);
  if (!pmf.ok) {
    std::fprintf(stderr, "enumeration failed: %s\n", pmf.error.c_str());
    return 1;
  }
  std::printf("Exact table %dx%dx%d, retained mass %.15f (tail %.2e)\n", pmf.dmax_s + 1,
              pmf.dmax_i + 1, pmf.cmax + 1, pmf.total(), pmf.truncation_tail);

  const auto ex = oracle::exact_stats(pmf);
  const auto ensemble = mc::run_ensemble(cfg, 7, 100000, mc::SimOptions{});
  const auto ms = est::mean_stat(est::signal_values(ensemble));
  const auto vs = est::var_stat(est::signal_values(ensemble));
  const auto nr = est::nrf(ensemble);

  struct Row {
    const char* name;
    double sampled, se, exact;
  } rows[] = {
      {"mean d_s", ms.value, ms.se, ex.signal.mean},
      {"var d_s", vs.value, vs.se, ex.signal.variance},
      {"NRF", nr.value, nr.se, ex.nrf},
  };
  std::printf("\n%-10s %12s %12s %10s %8s\n", "stat", "sampled", "exact", "se", "z");
  for (const auto& r : rows) {
    const double z = r.se > 0.0 ? std::fabs(r.sampled - r.exact) / r.se : 0.0;
    std::printf("%-10s %12.6f %12.6f %10.6f %8.2f\n", r.name, r.sampled, r.exact, r.se, z);
  }

  // The same comparison inside a tap-count window, using the exact
  // conditional distribution on one side and the filtered sample on the
  // other.
  const ConditionWindow w{1.5, 1.0};
  const auto exc = oracle::exact_conditional_stats(pmf, w);
  const auto cond = mc::apply_condition(ensemble, w);
  if (exc.ok && cond.status == mc::ConditionStatus::ok) {
    const auto cms = est::mean_stat(est::signal_values(cond.ensemble));
    const double z = cms.se > 0.0 ? std::fabs(cms.value - exc.stats.signal.mean) / cms.se : 0.0;
    std::printf("\nwindow center 1.5x mean, full width 1 sd:\n");
    std::printf("  acceptance %.4f vs exact mass %.4f\n", cond.acceptance, exc.mass);
    std::printf("  conditioned mean d_s %.6f vs exact %.6f (z = %.2f)\n", cms.value,
                exc.stats.signal.mean, z);
  }
  return 0;
}
