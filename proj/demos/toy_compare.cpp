// Compare tree complexity with and without the L1-O penalty on the parabola toy.
#include <iostream>

#include "l1o/l1o.hpp"

int main() {
  const auto cfg = l1o::preset("parabola");
  const auto data = l1o::prepare(l1o::load_dataset(cfg.dataset), cfg.split);

  for (const auto& reg : {l1o::RegularizerSpec::none(), l1o::RegularizerSpec::l1o(0.001, 0.001)}) {
    const auto r = l1o::train_and_extract(data, cfg.arch, cfg.train, reg, cfg.extract);
    const auto m = l1o::evaluate(r, data);
    std::cout << "lambda1=" << reg.lambda1 << " lambda_orth=" << reg.lambda_orth << ": apl " << m.apl << ", nodes "
              << m.nodes << ", fidelity " << m.fidelity << "\n";
  }
}
