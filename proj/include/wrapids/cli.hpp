#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "wrapids/benchmark.hpp"
#include "wrapids/config.hpp"
#include "wrapids/hash.hpp"
#include "wrapids/metrics.hpp"
#include "wrapids/synthetic.hpp"
#include "wrapids/wrapper.hpp"

namespace wrapids::cli {

namespace fs = std::filesystem;

// Set from a signal handler; the search stops before its next expansion.
inline std::atomic<bool> interrupted{false};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  return kExitInternal;
}

inline constexpr int kPipelineFormatVersion = 1;

// <output>/<command>-<config hash>/, holding a copy of the effective config.
inline fs::path output_dir(const RunConfig& c, std::string_view command) {
  fs::path dir = c.output / (std::string(command) + "-" + c.hash());
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  nlohmann::json meta = {{"command", command}, {"config_hash", c.hash()}, {"version", kVersion}, {"config", c.effective}};
  std::ofstream(dir / "config.json") << meta.dump(2) << "\n";
  return dir;
}

// Writes through a temporary file so a crash never leaves a half-written output.
inline void write_file(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
    if (!out) throw ConfigError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline nlohmann::json read_json_file(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + ": " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

inline void print_dataset_summary(std::ostream& out, const fs::path& path, const Dataset& d) {
  auto dist = class_distribution(d);
  out << path.string() << "\n";
  out << "  fingerprint " << file_fingerprint(path) << "\n";
  out << "  rows " << d.rows() << ", attributes " << d.attribute_count() << " ("
      << d.schema().count(ColumnKind::numeric) << " numeric, " << d.schema().count(ColumnKind::nominal)
      << " nominal)\n";
  for (const auto& col : d.schema().columns()) {
    out << "    " << std::left << std::setw(20) << col.name << std::setw(8) << to_string(col.kind);
    if (col.kind == ColumnKind::nominal) out << d.nominal(col.position).categories.size() << " categories";
    out << "\n";
  }
  double n = static_cast<double>(std::max<std::size_t>(d.rows(), 1));
  out << "  normal " << dist.normal_count << " (" << percent(static_cast<double>(dist.normal_count) / n) << "%)\n";
  out << "  attack " << dist.attack_count << " (" << percent(dist.attack_fraction) << "%)\n";
}

inline int cmd_inspect(const RunConfig& c, std::ostream& out) {
  if (!c.train && !c.test) throw ConfigError("inspect needs a 'train' or 'test' file");
  for (const auto& [path, which] : {std::pair{c.train, "train"}, std::pair{c.test, "test"}}) {
    if (!path) continue;
    print_dataset_summary(out, *path, load_split(c, path, which));
  }
  return kExitOk;
}

inline int cmd_select(const RunConfig& c, std::ostream& out) {
  Dataset train = load_split(c, c.train, "train");
  fs::path dir = output_dir(c, "select");
  fs::path trace_path = dir / "trace.jsonl";

  SearchHooks hooks;
  hooks.stop = &interrupted;
  if (fs::exists(trace_path)) {
    hooks.preload = read_trace(trace_path).merits();
    out << "resuming: " << hooks.preload.size() << " merits from " << trace_path.string() << "\n";
  }
  std::ofstream trace(trace_path, std::ios::trunc);
  if (!trace) throw ConfigError("cannot write " + trace_path.string());
  const std::string hash = c.hash();
  const std::string fingerprint = file_fingerprint(*c.train);
  hooks.on_record = [&](const nlohmann::json& rec) {
    if (rec.value("type", "") == "config") {
      nlohmann::json h = rec;
      h["config_hash"] = hash;
      h["version"] = kVersion;
      h["train_fingerprint"] = fingerprint;
      trace << h.dump() << "\n";
    } else {
      trace << rec.dump() << "\n";
    }
    trace.flush();
  };
  SearchResult r = best_first_search(train, c.search, hooks);
  trace.close();

  if (r.trace.summary.value("stopped", "") == "interrupted") {
    out << "interrupted after " << r.trace.expansions.size() << " expansions; rerun the same command to resume\n";
    return 130;
  }
  nlohmann::json subset = {{"format", "wrapids-subset"},
                           {"version", kVersion},
                           {"config_hash", hash},
                           {"seed", c.search.seed},
                           {"train_fingerprint", fingerprint},
                           {"features", r.best.names()},
                           {"merit", r.merit}};
  write_file(dir / "subset.json", subset.dump(2) + "\n");
  out << "selected " << r.best.size() << " features, merit " << percent(r.merit) << "% (" << r.evaluations
      << " subsets, " << r.trace.expansions.size() << " expansions)\n";
  for (const auto& n : r.best.names()) out << "  " << n << "\n";
  out << "wrote " << (dir / "subset.json").string() << " and " << trace_path.string() << "\n";
  return kExitOk;
}

inline const ClassifierSpec& single_classifier(const RunConfig& c, const char* command) {
  if (c.classifiers.size() != 1) {
    throw ConfigError(std::string(command) + " needs exactly one entry in 'classifiers', found " +
                      std::to_string(c.classifiers.size()));
  }
  return c.classifiers.front();
}

inline void print_report(std::ostream& out, const EvalReport& r) {
  out << "classifier " << r.classifier << ", features " << r.feature_count << ", encoded width " << r.encoded_width
      << "\n";
  out << "  tp " << r.confusion.tp << "  fn " << r.confusion.fn << "  fp " << r.confusion.fp << "  tn "
      << r.confusion.tn << "\n";
  out << "  ACC " << percent(r.acc) << "  DR " << percent(r.dr) << "  FAR " << percent(r.far) << "\n";
  out << "  MBT " << format_double(r.mbt_seconds) << " s (preprocessing " << format_double(r.preprocess_seconds)
      << " s)\n";
  if (!r.note.empty()) out << "  note: " << r.note << "\n";
}

inline int cmd_train(const RunConfig& c, std::ostream& out) {
  const ClassifierSpec& spec = single_classifier(c, "train");
  Dataset train = load_split(c, c.train, "train");
  std::optional<Dataset> test;
  if (c.test) test = load_split(c, c.test, "test");
  auto sets = resolve_feature_sets(c, train.schema());
  if (sets.size() != 1) throw ConfigError("train needs a single feature set");
  PipelineOptions opts = c.pipeline;
  if (!test) opts.vocabulary = Vocabulary::train_only;
  Preprocessor pp = Preprocessor::fit(train, test ? *test : train, sets[0].subset, opts);
  Dataset tr = pp.apply(train);
  check_encoded_width(sets[0], tr.attribute_count());
  TrainedModel model = fit(spec, tr);

  fs::path dir = output_dir(c, "train");
  nlohmann::json artifact = {{"format", "wrapids-pipeline"},
                             {"version", kPipelineFormatVersion},
                             {"toolchain", kVersion},
                             {"config_hash", c.hash()},
                             {"feature_set", sets[0].tag},
                             {"note", sets[0].note},
                             {"train_fingerprint", file_fingerprint(*c.train)},
                             {"preprocess", to_json(pp)},
                             {"model", to_json(model)}};
  write_file(dir / "model.json", artifact.dump() + "\n");
  out << "trained " << to_string(spec.kind()) << " on " << tr.rows() << " rows, encoded width "
      << tr.attribute_count() << "\n";
  out << "wrote " << (dir / "model.json").string() << "\n";
  return kExitOk;
}

struct PipelineArtifact {
  Preprocessor preprocess;
  TrainedModel model;
  std::string feature_set;
  std::string note;
};

inline PipelineArtifact load_pipeline(const fs::path& path) {
  nlohmann::json j = read_json_file(path, "model artifact");
  if (j.value("format", "") != "wrapids-pipeline") throw ArtifactError(path.string() + ": not a model artifact");
  if (j.value("version", -1) != kPipelineFormatVersion) {
    throw ArtifactError(path.string() + ": unsupported artifact version " + j.value("version", nlohmann::json()).dump() +
                        " (expected " + std::to_string(kPipelineFormatVersion) + ")");
  }
  try {
    return {preprocessor_from_json(j.at("preprocess")), model_from_json(j.at("model")),
            j.value("feature_set", "custom"), j.value("note", "")};
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

inline int cmd_eval(const RunConfig& c, std::ostream& out) {
  if (!c.model) throw ConfigError("eval needs a model artifact ('model' or --model)");
  PipelineArtifact a = load_pipeline(*c.model);
  a.model.spec.set_threads(c.threads);
  Dataset test = load_split(c, c.test, "test");
  auto t0 = std::chrono::steady_clock::now();
  Dataset te = a.preprocess.apply(test);
  double prep = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  t0 = std::chrono::steady_clock::now();
  std::vector<Label> pred = predict(a.model, te);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EvalReport r = EvalReport::from_confusion(confusion(pred, te.labels()));
  r.classifier = std::string(to_string(a.model.spec.kind()));
  r.feature_set = a.feature_set;
  r.feature_count = a.preprocess.subset.size();
  r.encoded_width = te.attribute_count();
  r.mbt_seconds = secs;
  r.mbt_runs = {secs};
  r.preprocess_seconds = prep;
  r.note = a.model.spec.kind() == ClassifierKind::linsvm ? stand_in_note() : a.note;

  fs::path dir = output_dir(c, "eval");
  nlohmann::json j = to_json(r);
  j["config_hash"] = c.hash();
  j["version"] = kVersion;
  j["test_fingerprint"] = file_fingerprint(*c.test);
  j["model_fingerprint"] = file_fingerprint(*c.model);
  write_file(dir / "report.json", j.dump(2) + "\n");
  print_report(out, r);
  out << "wrote " << (dir / "report.json").string() << "\n";
  return kExitOk;
}

inline int cmd_bench(const RunConfig& c, std::ostream& out) {
  if (c.classifiers.empty()) throw ConfigError("bench needs at least one entry in 'classifiers'");
  Dataset train = load_split(c, c.train, "train");
  Dataset test = load_split(c, c.test, "test");
  BenchmarkConfig bc;
  bc.feature_sets = resolve_feature_sets(c, train.schema());
  bc.classifiers = c.classifiers;
  bc.pipeline = c.pipeline;
  bc.timing_runs = c.timing_runs;
  Provenance p;
  p.seed = c.seed;
  p.config_hash = c.hash();
  p.train_fingerprint = file_fingerprint(*c.train);
  p.test_fingerprint = file_fingerprint(*c.test);

  auto reports = run_benchmark(train, test, bc);
  fs::path dir = output_dir(c, "bench");
  std::string perf = render_performance_table(reports, p);
  std::string timing = render_timing_table(reports, p);
  write_file(dir / "performance.txt", perf);
  write_file(dir / "timing.txt", timing);
  write_file(dir / "report.csv", render_csv(reports, p));
  write_file(dir / "report.json", render_json(reports, p).dump(2) + "\n");
  out << perf << "\n" << timing;
  out << "wrote " << dir.string() << "/{performance.txt,timing.txt,report.csv,report.json}\n";
  return kExitOk;
}

inline int cmd_synth(const RunConfig& c, std::ostream& out) {
  SyntheticSpec spec = c.synthetic;
  spec.rows += c.synthetic_test_rows;
  Dataset all = generate_synthetic(spec, c.seed);
  fs::path dir = output_dir(c, "synth");
  // Both files carry the configured balance: train takes the leading
  // round(rows * balance) attacks and fills up with normals, test gets the rest.
  std::size_t want_attacks = static_cast<std::size_t>(
      std::llround(static_cast<double>(c.synthetic.rows) * c.synthetic.class_balance));
  std::vector<std::size_t> train_rows, test_rows;
  std::size_t attacks = 0, normals = 0;
  for (std::size_t r = 0; r < all.rows(); ++r) {
    bool attack = all.labels()[r] == kAttack;
    bool take = attack ? attacks < want_attacks : normals < c.synthetic.rows - want_attacks;
    (take ? train_rows : test_rows).push_back(r);
    (attack ? attacks : normals) += take;
  }
  Dataset train = c.synthetic_test_rows ? all.take_rows(train_rows) : all;
  std::ostringstream csv_text;
  write_csv(csv_text, train);
  write_file(dir / "train.csv", csv_text.str());
  out << "wrote " << (dir / "train.csv").string() << " (" << train.rows() << " rows)\n";
  if (c.synthetic_test_rows) {
    Dataset test = all.take_rows(test_rows);
    std::ostringstream t;
    write_csv(t, test);
    write_file(dir / "test.csv", t.str());
    out << "wrote " << (dir / "test.csv").string() << " (" << test.rows() << " rows)\n";
  }
  write_file(dir / "schema.json", to_json(all.schema()).dump(2) + "\n");
  out << "wrote " << (dir / "schema.json").string() << "\n";
  return kExitOk;
}

inline int run_command(std::string_view command, const RunConfig& c, std::ostream& out) {
  if (command == "inspect") return cmd_inspect(c, out);
  if (command == "select") return cmd_select(c, out);
  if (command == "train") return cmd_train(c, out);
  if (command == "eval") return cmd_eval(c, out);
  if (command == "bench") return cmd_bench(c, out);
  if (command == "synth") return cmd_synth(c, out);
  throw ConfigError("unknown command '" + std::string(command) + "'");
}

}  // namespace wrapids::cli
