#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgr/checkpoint.hpp"
#include "dgr/graph.hpp"
#include "dgr/lec_index.hpp"
#include "dgr/log.hpp"
#include "dgr/metrics.hpp"
#include "dgr/oversmooth.hpp"
#include "dgr/propagation.hpp"
#include "dgr/run_config.hpp"
#include "dgr/synthetic.hpp"
#include "dgr/trainer.hpp"

namespace fs = std::filesystem;
using namespace dgr;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  bool force = false;
  bool verbose = false;
  bool quiet = false;
};

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig config = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  for (const auto& o : g.overrides) apply_override(config, o);
  if (!g.out.empty()) config.out_dir = g.out;
  if (const int env = default_thread_count(); env > 1 && config.train.threads == 1) {
    config.train.threads = env;
  }
  config.train.threads = std::min(config.train.threads, std::max(1, default_thread_count()));
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out || !(out << text)) throw DataError("cannot write '" + path.string() + "'");
}

// Writes to a sibling temp file first so a crash never leaves a partial file.
template <typename Fn>
void write_atomic(const fs::path& path, Fn&& write) {
  const fs::path tmp = path.string() + ".tmp";
  write(tmp);
  fs::rename(tmp, path);
}

void refuse_existing(const std::vector<fs::path>& paths, bool force) {
  if (force) return;
  for (const auto& p : paths) {
    if (fs::exists(p)) {
      throw UsageError("'" + p.string() + "' exists; rerun with --force to overwrite");
    }
  }
}

struct Datasets {
  InteractionGraph train;
  InteractionGraph test;
  LoadReport report;
};

fs::path dataset_meta(const fs::path& out) { return out / "dataset.txt"; }

// Rebuilds a prepared split with the catalog sizes recorded by `prepare`, so
// trailing users or items without edges keep their indices.
InteractionGraph load_prepared(const fs::path& path, Index users, Index items) {
  const LoadResult loaded = load_interactions(path, InputFormat::kPairList);
  std::vector<std::pair<Index, Index>> edges;
  for (const auto& [u, i] : loaded.graph.edges()) {
    edges.emplace_back(loaded.user_ids[static_cast<std::size_t>(u)],
                       loaded.item_ids[static_cast<std::size_t>(i)]);
  }
  return InteractionGraph(users, items, std::move(edges));
}

// Maps a separately loaded test file onto the training index space. Ids never
// seen in training are dropped: they cannot be ranked.
InteractionGraph align_test(const LoadResult& train, const LoadResult& test) {
  std::map<Index, Index> users, items;
  for (std::size_t k = 0; k < train.user_ids.size(); ++k) users[train.user_ids[k]] = static_cast<Index>(k);
  for (std::size_t k = 0; k < train.item_ids.size(); ++k) items[train.item_ids[k]] = static_cast<Index>(k);
  std::vector<std::pair<Index, Index>> edges;
  Index dropped = 0;
  for (const auto& [u, i] : test.graph.edges()) {
    const auto uu = users.find(test.user_ids[static_cast<std::size_t>(u)]);
    const auto ii = items.find(test.item_ids[static_cast<std::size_t>(i)]);
    if (uu == users.end() || ii == items.end()) {
      ++dropped;
      continue;
    }
    edges.emplace_back(uu->second, ii->second);
  }
  if (dropped > 0) {
    log::warn("dropped " + std::to_string(dropped) + " test interaction(s) with ids unseen in training");
  }
  return InteractionGraph(train.graph.num_users(), train.graph.num_items(), std::move(edges));
}

Datasets load_datasets(const RunConfig& config) {
  const fs::path out = config.out_dir;
  if (fs::exists(dataset_meta(out))) {
    std::ifstream meta(dataset_meta(out));
    std::map<std::string, Index> fields;
    std::string line;
    while (std::getline(meta, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) fields[line.substr(0, eq)] = std::stoll(line.substr(eq + 1));
    }
    if (!fields.contains("users") || !fields.contains("items")) {
      throw DataError("malformed '" + dataset_meta(out).string() + "'");
    }
    Datasets d;
    d.train = load_prepared(out / "train.txt", fields["users"], fields["items"]);
    d.test = load_prepared(out / "test.txt", fields["users"], fields["items"]);
    d.report = make_load_report(d.train);
    return d;
  }
  const InputFormat format = parse_input_format(config.format);
  if (!config.train_file.empty() || !config.test_file.empty()) {
    if (config.train_file.empty() || config.test_file.empty()) {
      throw UsageError("train_file and test_file must be given together");
    }
    const LoadResult train = load_interactions(config.train_file, format);
    const LoadResult test = load_interactions(config.test_file, format);
    return {train.graph, align_test(train, test), train.report};
  }
  if (config.data_file.empty()) {
    throw UsageError("no data: set data_file, or train_file and test_file, or run prepare");
  }
  const LoadResult all = load_interactions(config.data_file, format);
  auto [train, test] = split_train_test(all.graph, config.split_ratio, config.split_seed);
  return {std::move(train), std::move(test), all.report};
}

LecParams lec_params(const TrainConfig& c) {
  return {c.lec_k1, c.lec_k2, c.lec_theta, c.lec_candidate_cap};
}

fs::path index_path(const RunConfig& config) {
  return fs::path(config.out_dir) / (config.binary_index ? "lec_index.bin" : "lec_index.txt");
}

// A prepared index is reused only when it was mined with the same settings.
std::optional<LecIndex> prepared_index(const RunConfig& config, const InteractionGraph& train) {
  for (const char* name : {"lec_index.bin", "lec_index.txt"}) {
    const fs::path path = fs::path(config.out_dir) / name;
    if (!fs::exists(path)) continue;
    LecIndex index = load_lec_index(path);
    if (index.params == lec_params(config.train) && index.num_items() == train.num_items()) {
      return index;
    }
  }
  return std::nullopt;
}

template <typename Fn>
void with_precision(Precision p, Fn&& fn) {
  if (p == Precision::kFloat64) {
    fn(double{});
  } else {
    fn(float{});
  }
}

// ---------------------------------------------------------------- prepare

void cmd_prepare(const RunConfig& config, bool force) {
  const fs::path out = config.out_dir;
  fs::create_directories(out);
  const fs::path idx = index_path(config);
  refuse_existing({dataset_meta(out), out / "train.txt", out / "test.txt", idx,
                   out / "load_report.txt"},
                  force);
  RunConfig source = config;
  // Never read back our own previous outputs.
  if (fs::exists(dataset_meta(out))) fs::remove(dataset_meta(out));
  const Datasets d = load_datasets(source);
  save_pair_list(d.train, out / "train.txt");
  save_pair_list(d.test, out / "test.txt");
  write_text(dataset_meta(out), "users=" + std::to_string(d.train.num_users()) +
                                    "\nitems=" + std::to_string(d.train.num_items()) + "\n");
  const LecIndex index = build_lec_index(d.train, lec_params(config.train));
  save_lec_index(index, idx, config.binary_index);
  std::ostringstream report;
  report << d.report.to_text() << "train_edges=" << d.train.num_edges()
         << "\ntest_edges=" << d.test.num_edges() << "\nlec_capped_items=" << index.capped_items
         << '\n';
  write_text(out / "load_report.txt", report.str());
  write_text(out / "config.txt", serialize_run_config(config));
  std::cout << report.str();
}

// ------------------------------------------------------------------ train

struct TrainFlags {
  bool no_gmp = false;
  bool no_lec = false;
  std::string resume;
  int stop_after = 0;  // simulated interruption after this epoch
};

struct Interrupted {
  int epoch;
};

template <typename Scalar>
FitResult<Scalar> run_training(const RunConfig& run, const Datasets& d, const fs::path& out,
                               const TrainFlags& flags) {
  const std::string& resume = flags.resume;
  Trainer<Scalar> trainer(run.train, d.train,
                          run.train.lec_enabled ? prepared_index(run, d.train) : std::nullopt);
  FitProgress progress;
  if (!resume.empty()) {
    const fs::path state = resume + ".state";
    if (fs::exists(state)) {
      progress = load_training_state(state, trainer);
    } else {
      log::warn("no optimizer state next to '" + resume +
                "'; continuing from its embeddings with a fresh optimizer");
      const Checkpoint ckpt = load_checkpoint(resume, d.train.num_nodes(), run.train.dim);
      trainer.embeddings() = ckpt.e0.cast<Scalar>();
    }
  }
  std::vector<HistoryRow> history = progress.history;
  const fs::path history_path = out / "history.csv";
  const fs::path model = out / "model.ckpt";
  FitHooks hooks;
  hooks.on_eval = [&](const HistoryRow& row, bool improved) {
    history.push_back(row);
    write_atomic(history_path, [&](const fs::path& p) {
      std::ofstream f(p, std::ios::trunc);
      write_history_csv(f, history);
    });
    if (improved) {
      write_atomic(out / "best.ckpt",
                   [&](const fs::path& p) { save_checkpoint(p, trainer.embeddings(), run.train); });
    }
    std::printf("epoch %d  recall@20 %.5f  ndcg@20 %.5f  loss_cf %.5f  loss_lec %.5f\n", row.epoch,
                row.recall, row.ndcg, row.loss_cf, row.loss_lec);
    std::fflush(stdout);
  };
  // Progress as it will look once the current epoch has completed.
  FitProgress live = progress;
  hooks.on_eval = [&, inner = hooks.on_eval](const HistoryRow& row, bool improved) {
    inner(row, improved);
    live.history.push_back(row);
    if (improved) {
      live.best_recall = row.recall;
      live.best_epoch = row.epoch;
      live.stale_evals = 0;
    } else {
      ++live.stale_evals;
    }
  };
  hooks.on_epoch_end = [&](int epoch) {
    live.next_epoch = epoch + 1;
    write_atomic(model, [&](const fs::path& p) { save_checkpoint(p, trainer.embeddings(), run.train); });
    write_atomic(fs::path(model.string() + ".state"),
                 [&](const fs::path& p) { save_training_state(p, trainer, live); });
    if (flags.stop_after > 0 && epoch == flags.stop_after && epoch < run.train.epochs) {
      throw Interrupted{epoch};
    }
  };
  FitResult<Scalar> result = fit(trainer, d.test, progress, hooks);
  if (result.history.empty()) {
    std::ofstream f(history_path, std::ios::trunc);
    write_history_csv(f, result.history);
  }
  if (!fs::exists(out / "best.ckpt")) save_checkpoint(out / "best.ckpt", result.final_e0, run.train);
  save_checkpoint(model, result.final_e0, run.train);
  return result;
}

void cmd_train(RunConfig run, const TrainFlags& flags, const GlobalOptions& g) {
  const bool force = g.force;
  if (!flags.resume.empty()) {
    // The checkpoint's settings win; explicit --set overrides still apply.
    run.train = load_checkpoint(flags.resume).config;
    for (const auto& o : g.overrides) apply_override(run, o);
  }
  if (flags.no_gmp) run.train.gmp_enabled = false;
  if (flags.no_lec) run.train.lec_enabled = false;
  run.train.validate();
  const fs::path out = run.out_dir;
  fs::create_directories(out);
  if (flags.resume.empty()) {
    refuse_existing({out / "history.csv", out / "model.ckpt"}, force);
    std::error_code ec;
    fs::remove(out / "best.ckpt", ec);
  }
  const Datasets d = load_datasets(run);
  write_text(out / "train_config.txt", serialize_run_config(run));
  with_precision(run.train.precision, [&](auto tag) {
    using Scalar = decltype(tag);
    FitResult<Scalar> result;
    try {
      result = run_training<Scalar>(run, d, out, flags);
    } catch (const Interrupted& stop) {
      std::printf("stopped after epoch %d; continue with --resume %s\n", stop.epoch,
                  (out / "model.ckpt").c_str());
      return;
    }
    std::printf("best recall@20 %.5f at epoch %d (%d epoch(s) run%s)\n", result.best_recall,
                result.best_epoch, result.epochs_run, result.early_stopped ? ", early stop" : "");
  });
}

// --------------------------------------------------------------- evaluate

void cmd_evaluate(const RunConfig& run, const std::string& checkpoint, Index dump_topk) {
  const fs::path out = run.out_dir;
  const fs::path path = checkpoint.empty() ? out / "best.ckpt" : fs::path(checkpoint);
  const Datasets d = load_datasets(run);
  const Checkpoint ckpt = load_checkpoint(path, d.train.num_nodes());
  const NormalizedAdjacency adj = build_normalized_adjacency(d.train);
  const auto options = propagation_options(ckpt.config);
  const EmbeddingState<float> state = forward(adj, ckpt.e0, options);
  MetricsReport report = evaluate(state.readout, d.train, d.test, run.train.eval_ks,
                                  std::max(1, run.train.threads));
  report.row_diff = row_diff_auto(state.readout).value;
  fs::create_directories(out);
  write_text(out / "metrics.json", report.to_json() + "\n");
  write_text(out / "metrics.csv", report.to_csv());
  std::cout << report.to_json() << '\n';
  if (dump_topk > 0) {
    std::ofstream f(out / "topk.csv", std::ios::trunc);
    dump_top_k(f, state.readout, d.train, dump_topk);
    if (!f) throw DataError("cannot write top-k export");
  }
}

// ---------------------------------------------------------------- analyze

struct AnalyzeFlags {
  std::string checkpoint;
  bool random = false;
  std::vector<Index> nodes;
  bool dump_layers = false;
  int max_k = 20;
};

void write_curve(const fs::path& path, const std::vector<double>& curve) {
  std::ostringstream os;
  os << "k,distance\n";
  for (std::size_t k = 0; k < curve.size(); ++k) os << k + 1 << ',' << format_double(curve[k]) << '\n';
  write_text(path, os.str());
}

void cmd_analyze(const RunConfig& run, const AnalyzeFlags& flags) {
  const fs::path out = run.out_dir;
  const Datasets d = load_datasets(run);
  TrainConfig config = run.train;
  Matrix<double> e0;
  if (flags.random) {
    Rng rng(config.seed);
    e0 = init_embeddings<double>(d.train.num_nodes(), config.dim, config.init_std, rng);
  } else {
    const fs::path path = flags.checkpoint.empty() ? out / "best.ckpt" : fs::path(flags.checkpoint);
    const Checkpoint ckpt = load_checkpoint(path, d.train.num_nodes());
    config = ckpt.config;
    e0 = ckpt.e0.cast<double>();
  }
  const NormalizedAdjacency adj = build_normalized_adjacency(d.train);
  const auto steady = compute_oversmoothing_state(d.train, e0);
  fs::create_directories(out);

  write_curve(out / "distance_plain.csv", distance_curve(adj, e0, steady, flags.max_k));
  // Layers beyond the configured depth reuse the last alpha.
  std::vector<double> gmp_curve;
  Matrix<double> current = e0;
  Matrix<double> next;
  for (int k = 1; k <= flags.max_k; ++k) {
    const double a = config.alpha[static_cast<std::size_t>(std::min<int>(k, config.layers) - 1)];
    gmp_step(adj, current, steady, a, next);
    current.swap(next);
    gmp_curve.push_back(mean_distance_to_steady_state(current, steady));
  }
  write_curve(out / "distance_gmp.csv", gmp_curve);

  PropagationOptions plain = propagation_options(config);
  plain.schedule.reset();
  plain.rule = LayerRule::kDesmoothing;
  PropagationOptions desmoothed = plain;
  desmoothed.schedule = GmpSchedule{config.alpha};
  const auto plain_state = forward(adj, e0, plain);
  const auto gmp_state = forward(adj, e0, desmoothed);
  const RowDiffResult rd_plain = row_diff_auto(plain_state.readout, config.seed);
  const RowDiffResult rd_gmp = row_diff_auto(gmp_state.readout, config.seed);
  std::ostringstream rows;
  rows << "forward,row_diff,std_error,sampled\n"
       << "plain," << format_double(rd_plain.value) << ',' << format_double(rd_plain.std_error)
       << ',' << (rd_plain.sampled ? 1 : 0) << '\n'
       << "gmp," << format_double(rd_gmp.value) << ',' << format_double(rd_gmp.std_error) << ','
       << (rd_gmp.sampled ? 1 : 0) << '\n';
  write_text(out / "row_diff.csv", rows.str());
  std::cout << rows.str();

  if (!flags.nodes.empty()) {
    std::ostringstream os;
    os << "node,forward,layer";
    for (int c = 0; c < config.dim; ++c) os << ",v" << c;
    os << '\n';
    for (const auto& [name, state] : {std::pair{"plain", &plain_state}, std::pair{"gmp", &gmp_state}}) {
      for (std::size_t l = 0; l < state->layers.size(); ++l) {
        for (Index node : flags.nodes) {
          if (node < 0 || node >= e0.rows()) throw UsageError("node " + std::to_string(node) + " out of range");
          os << node << ',' << name << ',' << l;
          for (int c = 0; c < config.dim; ++c) os << ',' << format_double(state->layers[l](node, c));
          os << '\n';
        }
      }
    }
    write_text(out / "node_layers.csv", os.str());
  }
  if (flags.dump_layers) {
    for (std::size_t l = 0; l < gmp_state.layers.size(); ++l) {
      save_checkpoint(out / ("layer_" + std::to_string(l) + ".ckpt"), gmp_state.layers[l], config);
    }
  }
}

// ------------------------------------------------------------------ sweep

struct SweepFlags {
  std::string param = "alpha";
  int layer = 0;  // 1-based; 0 sweeps every layer in turn
  std::vector<double> values;
};

struct SweepPoint {
  std::string name;
  TrainConfig config;
};

std::vector<SweepPoint> sweep_points(const TrainConfig& base, const SweepFlags& flags) {
  std::vector<SweepPoint> points;
  std::vector<double> values = flags.values;
  if (flags.param == "alpha") {
    if (values.empty()) {
      for (int v = 0; v <= 10; ++v) values.push_back(v / 10.0);
    }
    std::vector<int> layers;
    if (flags.layer > 0) {
      if (flags.layer > base.layers) throw UsageError("--layer exceeds the configured layer count");
      layers.push_back(flags.layer);
    } else {
      for (int l = 1; l <= base.layers; ++l) layers.push_back(l);
    }
    for (int l : layers) {
      for (double v : values) {
        SweepPoint p{"alpha" + std::to_string(l) + "=" + format_double(v), base};
        p.config.alpha[static_cast<std::size_t>(l - 1)] = v;
        p.config.gmp_enabled = true;
        points.push_back(p);
      }
    }
    return points;
  }
  const std::map<std::string, std::string> keys{
      {"lambda", "lambda"}, {"k1", "lec_k1"}, {"k2", "lec_k2"}, {"theta", "lec_theta"}};
  const auto key = keys.find(flags.param);
  if (key == keys.end()) throw UsageError("unknown sweep parameter '" + flags.param + "'");
  if (values.empty()) throw UsageError("--values is required for --param " + flags.param);
  for (double v : values) {
    const bool integral = flags.param != "lambda";
    const std::string text = integral ? std::to_string(std::llround(v)) : format_double(v);
    SweepPoint p{key->second + "=" + text, base};
    apply_key_value(p.config, key->second, text);
    points.push_back(p);
  }
  return points;
}

void cmd_sweep(const RunConfig& run, const SweepFlags& flags) {
  const fs::path dir = fs::path(run.out_dir) / "sweep";
  fs::create_directories(dir);
  const auto points = sweep_points(run.train, flags);
  const fs::path results = dir / "results.csv";
  std::map<std::string, std::string> done;
  if (std::ifstream in(results); in) {
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (!line.empty()) done[line.substr(0, line.find(','))] = line;
    }
  } else {
    write_text(results, "point,best_recall,best_ndcg,best_epoch\n");
  }
  const Datasets d = load_datasets(run);
  std::optional<LecIndex> index;
  for (const auto& point : points) {
    if (done.contains(point.name)) {
      std::printf("skip %s (done)\n", point.name.c_str());
      continue;
    }
    point.config.validate();
    if (point.config.lec_enabled &&
        (!index || !(index->params == lec_params(point.config)))) {
      index = build_lec_index(d.train, lec_params(point.config));
    }
    std::string line;
    with_precision(point.config.precision, [&](auto tag) {
      using Scalar = decltype(tag);
      const auto result = fit<Scalar>(point.config, d.train, d.test,
                                      point.config.lec_enabled ? index : std::nullopt);
      double ndcg = 0.0;
      for (const auto& row : result.history) {
        if (row.epoch == result.best_epoch) ndcg = row.ndcg;
      }
      const fs::path point_dir = dir / point.name;
      fs::create_directories(point_dir);
      std::ofstream h(point_dir / "history.csv", std::ios::trunc);
      write_history_csv(h, result.history);
      line = point.name + "," + format_double(result.best_recall) + "," + format_double(ndcg) +
             "," + std::to_string(result.best_epoch);
    });
    std::ofstream(results, std::ios::app) << line << '\n';
    done[point.name] = line;
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
  }
  std::string best;
  double best_recall = -1.0;
  for (const auto& point : points) {
    const std::string& line = done[point.name];
    const double recall = std::stod(line.substr(line.find(',') + 1));
    if (recall > best_recall) {
      best_recall = recall;
      best = point.name;
    }
  }
  std::printf("best %s recall@20 %.5f\n", best.c_str(), best_recall);
}

// ----------------------------------------------------------------- synth

void cmd_synth(const SyntheticSpec& spec, const std::string& output, bool force) {
  refuse_existing({output}, force);
  save_pair_list(generate_synthetic(spec), output);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desmoothing graph recommender: prepare, train, evaluate, analyze, sweep"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "Run configuration file (key = value lines)");
  app.add_option("--set", g.overrides, "Override one config key, key=value (repeatable)");
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");
  app.add_flag("-q,--quiet", g.quiet, "Suppress warnings");

  auto* prepare = app.add_subcommand("prepare", "Load and split data, build the LEC index");

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_flag("--no-gmp", train_flags.no_gmp, "Disable global desmoothing");
  train->add_flag("--no-lec", train_flags.no_lec, "Disable the LEC loss");
  train->add_option("--resume", train_flags.resume, "Continue from a checkpoint");
  train->add_option("--stop-after", train_flags.stop_after,
                    "Stop after this epoch as if interrupted (state is kept for --resume)");

  std::string eval_ckpt;
  Index dump_topk = 0;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Recall/NDCG of a checkpoint");
  evaluate_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint (default <out>/best.ckpt)");
  evaluate_cmd->add_option("--dump-topk", dump_topk, "Write top-K items per user to topk.csv");

  AnalyzeFlags analyze_flags;
  auto* analyze = app.add_subcommand("analyze", "Over-smoothing diagnostics");
  analyze->add_option("--checkpoint", analyze_flags.checkpoint, "Checkpoint (default <out>/best.ckpt)");
  analyze->add_flag("--random", analyze_flags.random, "Use a seeded random E0 instead of a checkpoint");
  analyze->add_option("--nodes", analyze_flags.nodes, "Node ids whose per-layer embeddings are written")
      ->delimiter(',');
  analyze->add_flag("--dump-layers", analyze_flags.dump_layers, "Write every layer as a checkpoint");
  analyze->add_option("--max-k", analyze_flags.max_k, "Curve length")->check(CLI::Range(1, 1000));

  SweepFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Grid search, one training run per point");
  sweep->add_option("--param", sweep_flags.param, "alpha, lambda, k1, k2 or theta")
      ->check(CLI::IsMember({"alpha", "lambda", "k1", "k2", "theta"}));
  sweep->add_option("--layer", sweep_flags.layer, "Alpha layer to sweep (1-based; default all)");
  sweep->add_option("--values", sweep_flags.values, "Grid values (alpha default 0,0.1,...,1)")
      ->delimiter(',');

  SyntheticSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic interaction file");
  synth->add_option("--users", spec.users);
  synth->add_option("--items", spec.items);
  synth->add_option("--interactions", spec.interactions);
  synth->add_option("--seed", spec.seed);
  synth->add_option("output", synth_out, "Pair-list output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (g.quiet) log::set_level(log::Level::kQuiet);
  if (g.verbose) log::set_level(log::Level::kInfo);
  try {
    if (*synth) {
      cmd_synth(spec, synth_out, g.force);
      return 0;
    }
    const RunConfig config = resolve_config(g);
    config.train.validate();
    if (*prepare) cmd_prepare(config, g.force);
    if (*train) cmd_train(config, train_flags, g);
    if (*evaluate_cmd) cmd_evaluate(config, eval_ckpt, dump_topk);
    if (*analyze) cmd_analyze(config, analyze_flags);
    if (*sweep) cmd_sweep(config, sweep_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
