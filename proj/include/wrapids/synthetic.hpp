#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wrapids/dataset.hpp"
#include "wrapids/error.hpp"
#include "wrapids/rng.hpp"

namespace wrapids {

struct SyntheticSpec {
  std::size_t rows = 1000;
  std::size_t informative_numeric = 4;
  std::size_t noise_numeric = 4;
  std::size_t nominal_features = 0;
  double class_balance = 0.5;  // fraction of attack rows
  double separation = 2.0;     // distance between class means of informative features, in stddevs
};

inline void validate(const SyntheticSpec& spec) {
  if (spec.rows < 1) throw ConfigError("synthetic rows must be >= 1");
  if (!(spec.class_balance > 0.0 && spec.class_balance < 1.0)) {
    throw ConfigError("synthetic class_balance must lie in (0, 1)");
  }
  if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation)) {
    throw ConfigError("synthetic separation must be a finite non-negative number");
  }
}

// Labeled dataset with known ground truth:
//   inf_i    ~ N(+-separation/2, 1) depending on the label,
//   noise_i  ~ N(0, 1) independent of the label,
//   nom_i    categories c0..c3 whose frequencies are reversed between classes.
// Exactly round(rows * class_balance) rows are attacks (at least one of each
// class when rows >= 2). Column order is a seeded permutation so that no
// feature family is favored by position-based tie-breaks.
inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(derive_seed(seed, 0x5157));

  std::size_t attacks = static_cast<std::size_t>(std::llround(static_cast<double>(spec.rows) * spec.class_balance));
  if (spec.rows >= 2) attacks = std::clamp<std::size_t>(attacks, 1, spec.rows - 1);
  attacks = std::min(attacks, spec.rows);
  std::vector<Label> labels(spec.rows, kNormal);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(attacks), kAttack);
  shuffle(labels, rng);

  struct Family {
    std::string name;
    ColumnKind kind;
    int type;  // 0 informative, 1 noise, 2 nominal
  };
  std::vector<Family> families;
  for (std::size_t i = 0; i < spec.informative_numeric; ++i) families.push_back({"inf_" + std::to_string(i), ColumnKind::numeric, 0});
  for (std::size_t i = 0; i < spec.noise_numeric; ++i) families.push_back({"noise_" + std::to_string(i), ColumnKind::numeric, 1});
  for (std::size_t i = 0; i < spec.nominal_features; ++i) families.push_back({"nom_" + std::to_string(i), ColumnKind::nominal, 2});
  shuffle(families, rng);

  static constexpr double kAttackFreq[] = {0.55, 0.25, 0.15, 0.05};
  std::vector<std::pair<std::string, ColumnKind>> names;
  std::vector<ColumnData> cols;
  for (const auto& f : families) {
    names.emplace_back(f.name, f.kind);
    if (f.type == 2) {
      std::vector<std::string> cells(spec.rows);
      for (std::size_t r = 0; r < spec.rows; ++r) {
        double u = uniform01(rng);
        std::size_t cat = 0;
        double acc = 0.0;
        for (std::size_t c = 0; c < 4; ++c) {
          acc += labels[r] == kAttack ? kAttackFreq[c] : kAttackFreq[3 - c];
          if (u < acc) {
            cat = c;
            break;
          }
          cat = c;
        }
        cells[r] = "c" + std::to_string(cat);
      }
      cols.emplace_back(NominalColumn::from_strings(cells));
    } else {
      NumericColumn col;
      col.values.resize(spec.rows);
      for (std::size_t r = 0; r < spec.rows; ++r) {
        double mean = 0.0;
        if (f.type == 0) mean = labels[r] == kAttack ? spec.separation / 2 : -spec.separation / 2;
        col.values[r] = normal(rng, mean, 1.0);
      }
      cols.emplace_back(std::move(col));
    }
  }
  names.emplace_back("label", ColumnKind::label);
  cols.emplace_back(NumericColumn{});
  return Dataset(Schema::from_columns(std::move(names)), std::move(cols), std::move(labels));
}

}  // namespace wrapids
