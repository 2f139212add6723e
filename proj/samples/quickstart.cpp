// Synthetic end-to-end run: generate, search, validate.

#include <iostream>

#include "wrapids/cli.hpp"

int main() {
  using namespace wrapids;

  SyntheticSpec spec;
  spec.rows = 1500;
  spec.informative_numeric = 3;
  spec.noise_numeric = 5;
  spec.nominal_features = 1;
  Dataset all = generate_synthetic(spec, 7);
  std::vector<std::size_t> tr(1000), te(500);
  std::iota(tr.begin(), tr.end(), std::size_t{0});
  std::iota(te.begin(), te.end(), std::size_t{1000});
  Dataset train = all.take_rows(tr), test = all.take_rows(te);

  SearchConfig cfg;
  cfg.seed = 7;
  SearchResult sel = best_first_search(train, cfg);
  std::cout << "selected (" << percent(sel.merit) << "% CV):";
  for (const auto& n : sel.best.names()) std::cout << ' ' << n;
  std::cout << "\n";

  ForestParams fp;
  fp.n_trees = 50;
  fp.seed = 7;
  for (const auto& [tag, subset] : {std::pair{"full", FeatureSubset::all_of(train.schema())}, std::pair{"wrapper", sel.best}}) {
    EvalReport r = validate_selection(train, test, subset, ClassifierSpec{fp});
    std::cout << tag << ": width " << r.encoded_width << "  ACC " << percent(r.acc) << "  DR " << percent(r.dr)
              << "  FAR " << percent(r.far) << "\n";
  }
}
