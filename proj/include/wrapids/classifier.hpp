#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "wrapids/classifiers/gnb.hpp"
#include "wrapids/classifiers/knn.hpp"
#include "wrapids/classifiers/linsvm.hpp"
#include "wrapids/classifiers/matrix.hpp"
#include "wrapids/classifiers/mlp.hpp"
#include "wrapids/dtree.hpp"
#include "wrapids/forest.hpp"

namespace wrapids {

enum class ClassifierKind { tree, forest, knn, gnb, mlp, linsvm };

inline std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::tree: return "tree";
    case ClassifierKind::forest: return "forest";
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::gnb: return "gnb";
    case ClassifierKind::mlp: return "mlp";
    case ClassifierKind::linsvm: return "linsvm";
  }
  return "?";
}

inline ClassifierKind classifier_kind_from_string(std::string_view s) {
  for (auto k : {ClassifierKind::tree, ClassifierKind::forest, ClassifierKind::knn, ClassifierKind::gnb,
                 ClassifierKind::mlp, ClassifierKind::linsvm}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown classifier kind '" + std::string(s) + "'");
}

// Hyperparameters; the alternative held determines the kind.
struct ClassifierSpec {
  std::variant<TreeParams, ForestParams, KnnParams, GnbParams, MlpParams, LinSvmParams> params;

  ClassifierKind kind() const { return static_cast<ClassifierKind>(params.index()); }

  static ClassifierSpec defaults(ClassifierKind k) {
    switch (k) {
      case ClassifierKind::tree: return {TreeParams{}};
      case ClassifierKind::forest: return {ForestParams{}};
      case ClassifierKind::knn: return {KnnParams{}};
      case ClassifierKind::gnb: return {GnbParams{}};
      case ClassifierKind::mlp: return {MlpParams{}};
      case ClassifierKind::linsvm: return {LinSvmParams{}};
    }
    throw ConfigError("unknown classifier kind");
  }

  bool numeric_only() const {
    auto k = kind();
    return k != ClassifierKind::tree && k != ClassifierKind::forest;
  }

  // Sets the worker count on kinds that use one.
  void set_threads(unsigned threads) {
    if (auto* f = std::get_if<ForestParams>(&params)) f->threads = threads;
    if (auto* k = std::get_if<KnnParams>(&params)) k->threads = threads;
  }

  // Human label; the linear SVM is flagged as a stand-in for the RBF-kernel SVM.
  std::string display_name() const {
    switch (kind()) {
      case ClassifierKind::tree: return "DT";
      case ClassifierKind::forest: return "RF";
      case ClassifierKind::knn: return "KNN";
      case ClassifierKind::gnb: return "NB";
      case ClassifierKind::mlp: return "ANN";
      case ClassifierKind::linsvm: return "SVM*";
    }
    return "?";
  }
};

struct AttributeSignature {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  friend bool operator==(const AttributeSignature&, const AttributeSignature&) = default;
};

inline std::vector<AttributeSignature> signature_of(const Dataset& d) {
  std::vector<AttributeSignature> sig;
  for (std::size_t p : d.schema().attributes()) sig.push_back({d.schema()[p].name, d.schema()[p].kind});
  return sig;
}

// A fitted classifier together with the attribute signature it was trained on.
struct TrainedModel {
  ClassifierSpec spec;
  std::vector<AttributeSignature> signature;
  std::variant<DecisionTree, Forest, Knn, GaussianNB, Mlp, LinearSvm> state;

  void check(const Dataset& d) const {
    if (signature_of(d) != signature) {
      throw SchemaMismatch("dataset attributes (" + std::to_string(d.attribute_count()) +
                           ") do not match the model's training attributes (" + std::to_string(signature.size()) + ")");
    }
  }
};

inline TrainedModel fit(const ClassifierSpec& spec, const Dataset& train) {
  if (train.rows() == 0) throw DataError("cannot fit a classifier on an empty dataset");
  TrainedModel m{spec, signature_of(train), DecisionTree{}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TreeParams>) {
          m.state = fit_tree(train, p);
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          m.state = fit_forest(train, p);
        } else {
          Matrix x = to_matrix(train);
          auto y = train.labels();
          if constexpr (std::is_same_v<P, KnnParams>) m.state = Knn(std::move(x), labels_of(train), p.k);
          else if constexpr (std::is_same_v<P, GnbParams>) m.state = GaussianNB::fit(x, y, p);
          else if constexpr (std::is_same_v<P, MlpParams>) m.state = fit_mlp(x, y, p);
          else m.state = LinearSvm::fit(x, y, p);
        }
      },
      spec.params);
  return m;
}

// Monotone attack score: leaf/vote/neighbor attack fraction for tree, forest
// and kNN; log-posterior difference for NB; logit for the MLP; signed margin
// for the SVM.
inline std::vector<double> decision_scores(const TrainedModel& m, const Dataset& d) {
  m.check(d);
  return std::visit(
      [&](const auto& s) -> std::vector<double> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, DecisionTree> || std::is_same_v<S, Forest>) {
          return s.scores(d);
        } else if constexpr (std::is_same_v<S, Knn>) {
          unsigned threads = std::get<KnnParams>(m.spec.params).threads;
          return s.scores(to_matrix(d), threads);
        } else {
          return s.scores(to_matrix(d));
        }
      },
      m.state);
}

// Score at or above which a row is predicted as attack.
inline double decision_threshold(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::tree:
    case ClassifierKind::forest:
    case ClassifierKind::knn: return 0.5;
    default: return 0.0;
  }
}

inline std::vector<Label> labels_from_scores(const std::vector<double>& scores, ClassifierKind k) {
  const double t = decision_threshold(k);
  std::vector<Label> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= t ? kAttack : kNormal;
  return out;
}

// One label per row; every tie resolves to attack.
inline std::vector<Label> predict(const TrainedModel& m, const Dataset& d) {
  return labels_from_scores(decision_scores(m, d), m.spec.kind());
}

// ---- serialization ---------------------------------------------------------

inline nlohmann::json to_json(const ClassifierSpec& spec) {
  nlohmann::json j = {{"kind", to_string(spec.kind())}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TreeParams>) {
          j["min_leaf"] = p.min_leaf;
          j["pruning_confidence"] = p.pruning_confidence;
          j["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
          j["prune"] = p.prune;
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          j["n_trees"] = p.n_trees;
          j["features_per_split"] = p.features_per_split ? nlohmann::json(*p.features_per_split) : nlohmann::json("sqrt");
          j["bootstrap"] = p.bootstrap;
          j["seed"] = p.seed;
          j["criterion"] = p.criterion == SplitCriterion::gini ? "gini" : "gain_ratio";
          j["min_leaf"] = p.min_leaf;
          j["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
          j["prune"] = p.prune;
          j["pruning_confidence"] = p.pruning_confidence;
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          j["k"] = p.k;
          j["distance"] = "euclidean";
        } else if constexpr (std::is_same_v<P, GnbParams>) {
          j["var_smoothing"] = p.var_smoothing;
        } else if constexpr (std::is_same_v<P, MlpParams>) {
          j["hidden"] = p.hidden;
          j["activation"] = "relu";
          j["max_epochs"] = p.max_epochs;
          j["batch"] = p.batch;
          j["learning_rate"] = p.learning_rate;
          j["l2"] = p.l2;
          j["tolerance"] = p.tolerance;
          j["patience"] = p.patience;
          j["solver"] = p.solver == MlpSolver::adam ? "adam" : "sgd";
          j["shuffle"] = p.shuffle;
          j["seed"] = p.seed;
        } else {
          j["c"] = p.c;
          j["epochs"] = p.epochs;
          j["seed"] = p.seed;
        }
      },
      spec.params);
  return j;
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = key == "kind";
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown classifier option '" + key + "' for kind " + j.value("kind", "?"));
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("classifier option '") + key + "' has the wrong type");
  }
}

inline void read_optional(const nlohmann::json& j, const char* key, std::optional<std::size_t>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) out.reset();
  else if (j.at(key).is_number_unsigned()) out = j.at(key).get<std::size_t>();
  else throw ConfigError(std::string("classifier option '") + key + "' must be a non-negative integer or null");
}

}  // namespace detail

// Parses {"kind": "...", <hyperparameters>}; absent keys keep the defaults.
// `default_seed` seeds stochastic kinds that do not name a seed.
inline ClassifierSpec classifier_spec_from_json(const nlohmann::json& j, std::uint64_t default_seed = 0) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("classifier entry needs a \"kind\"");
  ClassifierSpec spec = ClassifierSpec::defaults(classifier_kind_from_string(j.at("kind").get<std::string>()));
  using detail::read;
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TreeParams>) {
          detail::reject_unknown_keys(j, {"min_leaf", "pruning_confidence", "max_depth", "prune"});
          read(j, "min_leaf", p.min_leaf);
          read(j, "pruning_confidence", p.pruning_confidence);
          detail::read_optional(j, "max_depth", p.max_depth);
          read(j, "prune", p.prune);
          validate(p);
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          detail::reject_unknown_keys(j, {"n_trees", "features_per_split", "bootstrap", "seed", "criterion", "min_leaf",
                                          "max_depth", "prune", "pruning_confidence"});
          p.seed = default_seed;
          read(j, "n_trees", p.n_trees);
          if (j.contains("features_per_split")) {
            const auto& f = j.at("features_per_split");
            if (f.is_string() && f.get<std::string>() == "sqrt") p.features_per_split.reset();
            else if (f.is_number_unsigned()) p.features_per_split = f.get<std::size_t>();
            else throw ConfigError("features_per_split must be \"sqrt\" or a positive integer");
          }
          read(j, "bootstrap", p.bootstrap);
          read(j, "seed", p.seed);
          if (j.contains("criterion")) {
            auto c = j.at("criterion").get<std::string>();
            if (c == "gini") p.criterion = SplitCriterion::gini;
            else if (c == "gain_ratio") p.criterion = SplitCriterion::gain_ratio;
            else throw ConfigError("forest criterion must be \"gini\" or \"gain_ratio\"");
          }
          read(j, "min_leaf", p.min_leaf);
          detail::read_optional(j, "max_depth", p.max_depth);
          read(j, "prune", p.prune);
          read(j, "pruning_confidence", p.pruning_confidence);
          if (p.n_trees < 1) throw ConfigError("n_trees must be >= 1");
          if (p.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          detail::reject_unknown_keys(j, {"k", "distance"});
          read(j, "k", p.k);
          if (j.contains("distance") && j.at("distance") != "euclidean") throw ConfigError("kNN supports only euclidean distance");
          if (p.k < 1) throw ConfigError("kNN k must be >= 1");
        } else if constexpr (std::is_same_v<P, GnbParams>) {
          detail::reject_unknown_keys(j, {"var_smoothing"});
          read(j, "var_smoothing", p.var_smoothing);
        } else if constexpr (std::is_same_v<P, MlpParams>) {
          detail::reject_unknown_keys(j, {"hidden", "activation", "max_epochs", "batch", "learning_rate", "l2", "tolerance",
                                          "patience", "solver", "shuffle", "seed"});
          p.seed = default_seed;
          read(j, "hidden", p.hidden);
          if (j.contains("activation") && j.at("activation") != "relu") throw ConfigError("MLP supports only relu");
          read(j, "max_epochs", p.max_epochs);
          read(j, "batch", p.batch);
          read(j, "learning_rate", p.learning_rate);
          read(j, "l2", p.l2);
          read(j, "tolerance", p.tolerance);
          read(j, "patience", p.patience);
          if (j.contains("solver")) {
            auto s = j.at("solver").get<std::string>();
            if (s == "adam") p.solver = MlpSolver::adam;
            else if (s == "sgd") p.solver = MlpSolver::sgd;
            else throw ConfigError("MLP solver must be \"adam\" or \"sgd\"");
          }
          read(j, "shuffle", p.shuffle);
          read(j, "seed", p.seed);
          validate(p);
        } else {
          detail::reject_unknown_keys(j, {"c", "epochs", "seed"});
          p.seed = default_seed;
          read(j, "c", p.c);
          read(j, "epochs", p.epochs);
          read(j, "seed", p.seed);
          if (!(p.c > 0.0)) throw ConfigError("linsvm C must be > 0");
        }
      },
      spec.params);
  return spec;
}

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const TrainedModel& m) {
  nlohmann::json sig = nlohmann::json::array();
  for (const auto& a : m.signature) sig.push_back({{"name", a.name}, {"kind", to_string(a.kind)}});
  nlohmann::json state = std::visit(
      [](const auto& s) -> nlohmann::json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, DecisionTree> || std::is_same_v<S, Forest>) return wrapids::to_json(s);
        else if constexpr (std::is_same_v<S, Knn>) return {{"k", s.k()}, {"train", matrix_to_json(s.train())}, {"labels", s.labels()}};
        else return s.to_json();
      },
      m.state);
  return {{"format", "wrapids-model"},
          {"version", kModelFormatVersion},
          {"kind", to_string(m.spec.kind())},
          {"params", to_json(m.spec)},
          {"signature", sig},
          {"state", state}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "wrapids-model") throw ArtifactError("not a model artifact");
  if (j.value("version", -1) != kModelFormatVersion) {
    throw ArtifactError("unsupported model artifact version " + j.value("version", nlohmann::json()).dump() +
                        " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  TrainedModel m{classifier_spec_from_json(j.at("params")), {}, DecisionTree{}};
  if (to_string(m.spec.kind()) != j.at("kind").get<std::string>()) throw ArtifactError("model kind does not match its params");
  for (const auto& a : j.at("signature")) {
    m.signature.push_back({a.at("name").get<std::string>(), column_kind_from_string(a.at("kind").get<std::string>())});
  }
  const auto& s = j.at("state");
  switch (m.spec.kind()) {
    case ClassifierKind::tree: m.state = tree_from_json(s); break;
    case ClassifierKind::forest: m.state = forest_from_json(s); break;
    case ClassifierKind::knn:
      m.state = Knn(matrix_from_json(s.at("train")), s.at("labels").get<std::vector<Label>>(), s.at("k").get<std::size_t>());
      break;
    case ClassifierKind::gnb: m.state = GaussianNB::from_json(s); break;
    case ClassifierKind::mlp: m.state = Mlp::from_json(s); break;
    case ClassifierKind::linsvm: m.state = LinearSvm::from_json(s); break;
  }
  return m;
}

}  // namespace wrapids
