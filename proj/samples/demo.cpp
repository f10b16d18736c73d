// Builds each preset, prints its overlap and master-equation figures of merit,
// then runs a small trajectory ensemble for the SUPER pulse.
#include <cstdio>

#include "qdsps/qdsps.hpp"

int main() {
  using namespace qdsps;
  std::printf("%-18s %8s %8s %8s %8s\n", "preset", "overlap", "eta", "g2", "I");
  for (auto p : kAllPresets) {
    const auto run = prepare(preset_config(p));
    const auto o = run_oracle(run);
    std::printf("%-18s %8.4f %8.4f %8.4f %8.4f\n", std::string(preset_name(p)).c_str(), preset_overlap(run),
                o.fom.eta.value, o.fom.g2->value, o.fom.indist->value);
  }

  auto cfg = preset_config(Preset::super_pulse);
  cfg.solver.n_traj = 500;
  const auto tr = run_trajectories(prepare(cfg), 1);
  std::printf("\nsuper, %zu trajectories: eta %.4f +- %.4f, g2 %.4f +- %.4f, I %.4f +- %.4f\n", cfg.solver.n_traj,
              tr.fom.eta.value, tr.fom.eta.se, tr.fom.g2->value, tr.fom.g2->se, tr.fom.indist->value,
              tr.fom.indist->se);
}
