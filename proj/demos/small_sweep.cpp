// A 3x3 L1-O sweep on Iris, printed as fitness CSV, plus the selected point.
#include <iostream>

#include "l1o/l1o.hpp"

int main() {
  auto cfg = l1o::preset("iris", L1O_DATA_DIR);
  cfg.grid = l1o::make_grid(l1o::GridKind::l1o, 3, 3);
  cfg.jobs = 2;

  const auto sweep = l1o::run_sweep(cfg);
  std::cout << l1o::fitness_csv(sweep.rows());

  const auto best = l1o::select_best(sweep.points, sweep.baseline_auc());
  std::cout << "\nselected lambda1=" << best.point.lambda1 << " lambda_orth=" << best.point.lambda_orth
            << (best.qualified ? "" : " (no point matched the baseline auc)") << "\n";
}
