// Train a regularized MLP on Iris and print the extracted rules.
#include <iostream>

#include "l1o/l1o.hpp"

int main(int argc, char** argv) {
  const std::string data_dir = argc > 1 ? argv[1] : L1O_DATA_DIR;
  const auto cfg = l1o::preset("iris", data_dir);
  const auto data = l1o::prepare(l1o::load_dataset(cfg.dataset), cfg.split);

  const auto r = l1o::train_and_extract(data, cfg.arch, cfg.train, l1o::RegularizerSpec::l1o(0.01, 0.1), cfg.extract);
  const auto m = l1o::evaluate(r, data);

  std::cout << l1o::export_rules(r.tree, data.train.feature_names);
  std::cout << "apl " << m.apl << "  fidelity " << m.fidelity << "  mlp auc " << m.mlp_auc << "\n";
}
