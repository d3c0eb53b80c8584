#include "rhgcn/trainer.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rhgcn/error.hpp"

namespace rhgcn {

using nlohmann::json;

namespace {

constexpr std::uint64_t kNoiseStream = 0x9e3779b97f4a7c15ULL;

std::vector<ad::Var> flatten(const BoundParams& b) {
  std::vector<ad::Var> out = b.input_maps;
  for (const auto& layer : b.weights) out.insert(out.end(), layer.begin(), layer.end());
  out.push_back(b.classifier);
  out.push_back(b.bias);
  return out;
}

double mean_nll(const Matrix& log_probs, const std::vector<int>& labels, const std::vector<int>& idx) {
  if (idx.empty()) return 0.0;
  double total = 0.0;
  for (int i : idx) total -= log_probs(i, labels[static_cast<std::size_t>(i)]);
  return total / static_cast<double>(idx.size());
}

json config_json(const RunConfig& run) {
  json j = json::object();
  for (const auto& [k, v] : run.entries()) j[k] = v;
  return j;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " became non-finite");
}

}  // namespace

NodeDataset load_run_dataset(const RunConfig& run) {
  if (!run.dataset.empty()) return load_dataset(run.dataset);
  NodeDataset data = synth_graph(SynthSpec::parse(run.synth), run.data_seed);
  return data;
}

ModelConfig make_model_config(const RunConfig& run, const NodeDataset& data) {
  run.validate();
  ModelConfig cfg;
  cfg.product = build_product(parse_signature(run.signature), run.seed, run.origin_radius);
  cfg.layers = run.layers;
  cfg.alpha = run.alpha;
  cfg.beta_base = run.beta_base;
  cfg.noise.drop_rate = run.drop_rate;
  cfg.noise.granularity = parse_granularity(run.noise_granularity);
  cfg.noise.clamp_nonnegative = run.noise_clamp;
  cfg.activation = parse_activation(run.activation);
  cfg.input_dim = data.features.cols();
  cfg.num_classes = std::max(2, data.num_classes);
  cfg.validate();
  return cfg;
}

OptimizerConfig make_optimizer_config(const RunConfig& run) {
  OptimizerConfig o;
  o.name = run.optimizer;
  o.lr = run.lr;
  o.weight_decay = run.weight_decay;
  o.momentum = run.momentum;
  o.beta1 = run.adam_beta1;
  o.beta2 = run.adam_beta2;
  o.eps = run.adam_eps;
  return o;
}

std::string config_echo(const RunConfig& run) {
  std::ostringstream out;
  out << "# version=" << artifact_version() << '\n';
  for (const auto& [k, v] : run.entries()) {
    if (k != "out") out << "# " << k << '=' << v << '\n';
  }
  return out.str();
}

TrainOutcome train(const RunConfig& run, const NodeDataset& data,
                   const std::function<void(const EpochMetrics&)>& on_epoch) {
  data.validate();
  if (data.splits.train.empty()) throw UsageError("training split is empty");
  const ModelConfig cfg = make_model_config(run, data);
  ModelParams params = ModelParams::initialize(cfg, run.seed);
  auto optimizer = make_optimizer(make_optimizer_config(run));
  std::mt19937_64 noise_rng(run.seed ^ kNoiseStream);
  const std::vector<bool> decay = params.weight_decay_mask();

  TrainOutcome out;
  double best_val_loss = 0.0;
  // Epoch 0 has no training step; its train loss is the evaluation-mode loss.
  auto evaluate = [&](int epoch, std::optional<double> train_loss) {
    const Matrix lp = predict(cfg, params, data.features, data.graph);
    require_finite(lp, "evaluation output");
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = train_loss ? *train_loss : mean_nll(lp, data.labels, data.splits.train);
    m.val_loss = mean_nll(lp, data.labels, data.splits.val);
    m.val_acc = accuracy(lp, data.labels, data.splits.val);
    m.test_acc = accuracy(lp, data.labels, data.splits.test);
    out.history.push_back(m);
    if (on_epoch) on_epoch(m);
    return m;
  };

  {
    const EpochMetrics m = evaluate(0, std::nullopt);
    out.best = {run, cfg, params, 0};
    out.best_val_acc = m.val_acc;
    out.test_acc = m.test_acc;
    best_val_loss = m.val_loss;
  }

  int since_best = 0;
  for (int epoch = 1; epoch <= run.epochs; ++epoch) {
    double train_loss = 0.0;
    {
      ad::Tape tape;
      const BoundParams bound = bind_parameters(tape, params, true);
      ForwardOptions opts;
      opts.training = true;
      opts.rng = &noise_rng;
      const ForwardResult fr = forward(tape, cfg, params, bound, data.features, data.graph, opts);
      const ad::Var l = loss(fr.log_probs, data.labels, data.splits.train);
      train_loss = l.scalar();
      if (!std::isfinite(train_loss)) throw NumericError("training loss became non-finite at epoch " +
                                                         std::to_string(epoch));
      tape.backward(l);
      std::vector<Matrix> grads;
      for (const ad::Var& leaf : flatten(bound)) grads.push_back(tape.grad(leaf));
      for (const Matrix& g : grads) require_finite(g, "gradient");
      optimizer->step(params.trainable(), grads, decay);
    }
    out.epochs_run = epoch;
    const EpochMetrics m = evaluate(epoch, train_loss);
    if (m.val_acc > out.best_val_acc || (m.val_acc == out.best_val_acc && m.val_loss < best_val_loss)) {
      best_val_loss = m.val_loss;
      out.best_val_acc = m.val_acc;
      out.best_epoch = epoch;
      out.test_acc = m.test_acc;
      out.best = {run, cfg, params, epoch};
      since_best = 0;
    } else if (++since_best >= run.patience) {
      break;
    }
  }
  return out;
}

TrainOutcome run_training(const RunConfig& run, const std::filesystem::path& out_dir) {
  run.validate();
  const NodeDataset data = load_run_dataset(run);
  std::filesystem::create_directories(out_dir);
  auto metrics = open_output(out_dir / "metrics.csv");
  metrics << config_echo(run) << "epoch,train_loss,val_loss,val_acc,test_acc\n";
  auto write_row = [&metrics](const EpochMetrics& m) {
    metrics << m.epoch << ',' << format_double(m.train_loss) << ',' << format_double(m.val_loss) << ','
            << format_double(m.val_acc) << ',' << format_double(m.test_acc) << '\n';
  };
  TrainOutcome outcome = train(run, data, write_row);
  metrics.close();

  save_checkpoint(outcome.best, out_dir / "checkpoint.json");
  json results = {{"artifact", artifact_version()},
                  {"model", outcome.best.model.product.display_name()},
                  {"dataset", data.name},
                  {"seed", run.seed},
                  {"best_epoch", outcome.best_epoch},
                  {"best_val_acc", outcome.best_val_acc},
                  {"test_acc", outcome.test_acc},
                  {"epochs_run", outcome.epochs_run},
                  {"config", config_json(run)}};
  write_text(out_dir / "results.json", results.dump(2) + "\n");
  return outcome;
}

std::vector<SweepRow> run_sweep(const RunConfig& run, const std::filesystem::path& out_dir) {
  run.validate();
  const auto count = static_cast<std::size_t>(run.sweep_seeds);
  std::vector<SweepRow> rows(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      RunConfig r = run;
      r.seed = run.seed + i;
      r.sweep_seeds = 1;
      try {
        const TrainOutcome o = run_training(r, out_dir / ("seed_" + std::to_string(r.seed)));
        rows[i] = {r.seed, o.best_epoch, o.best_val_acc, o.test_acc};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(count, static_cast<std::size_t>(run.threads));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::filesystem::create_directories(out_dir);
  auto out = open_output(out_dir / "sweep.csv");
  out << config_echo(run) << "seed,best_epoch,best_val_acc,test_acc\n";
  double mean = 0.0;
  for (const auto& r : rows) {
    out << r.seed << ',' << r.best_epoch << ',' << format_double(r.best_val_acc) << ','
        << format_double(r.test_acc) << '\n';
    mean += r.test_acc;
  }
  out << "# mean_test_acc=" << format_double(mean / static_cast<double>(count)) << '\n';
  return rows;
}

EvalOutcome run_eval(const Checkpoint& ckpt, const NodeDataset& data) {
  data.validate();
  if (data.features.cols() != ckpt.model.input_dim) {
    throw ConfigError("checkpoint expects " + std::to_string(ckpt.model.input_dim) + " features, dataset has " +
                      std::to_string(data.features.cols()));
  }
  if (data.num_classes > ckpt.model.num_classes) throw ConfigError("dataset has more classes than the checkpoint");
  const Matrix lp = predict(ckpt.model, ckpt.params, data.features, data.graph);
  require_finite(lp, "evaluation output");
  EvalOutcome e;
  e.epoch = ckpt.epoch;
  e.train_acc = accuracy(lp, data.labels, data.splits.train);
  e.val_acc = accuracy(lp, data.labels, data.splits.val);
  e.test_acc = accuracy(lp, data.labels, data.splits.test);
  return e;
}

GradCheckOutcome run_gradcheck(const RunConfig& run) {
  run.validate();
  if (run.drop_rate > 0.0) throw UsageError("gradcheck needs a deterministic objective: set drop_rate = 0");
  const NodeDataset data = load_run_dataset(run);
  if (data.graph.num_nodes() > 50) throw UsageError("gradcheck is limited to graphs with at most 50 nodes");
  if (data.splits.train.empty()) throw UsageError("training split is empty");
  const ModelConfig cfg = make_model_config(run, data);
  const ModelParams params = ModelParams::initialize(cfg, run.seed);

  std::vector<Matrix> values;
  for (const Matrix* m : params.trainable()) values.push_back(*m);
  const ad::Objective objective = [&](ad::Tape& tape, std::span<const ad::Var> leaves) {
    const BoundParams bound = bind_leaves(params, leaves);
    const ForwardResult fr = forward(tape, cfg, params, bound, data.features, data.graph);
    return loss(fr.log_probs, data.labels, data.splits.train);
  };
  GradCheckOutcome out;
  out.report = ad::grad_check(objective, values);
  return out;
}

DiagnoseMode parse_diagnose_mode(const std::string& name) {
  if (name == "energy") return DiagnoseMode::energy;
  if (name == "bound") return DiagnoseMode::bound;
  if (name == "lemma1") return DiagnoseMode::lemma1;
  throw ConfigError("unknown diagnose mode '" + name + "' (expected energy, bound or lemma1)");
}

int run_diagnose(const RunConfig& run, const DiagnoseOptions& options, const std::filesystem::path& out_dir,
                 std::ostream& log) {
  run.validate();
  std::filesystem::create_directories(out_dir);

  if (options.mode == DiagnoseMode::lemma1) {
    std::vector<Lemma1Report> reports;
    bool ok = true;
    for (int n : options.lemma_sizes) {
      reports.push_back(lemma1_check(options.trials, n, run.seed + static_cast<std::uint64_t>(n)));
      const auto& r = reports.back();
      ok = ok && r.violations == 0 && std::abs(r.tightness_ratio - 1.0) <= 1e-9;
      log << "n=" << r.n << " trials=" << r.trials << " violations=" << r.violations
          << " max_ratio=" << format_double(r.max_ratio) << " tightness=" << format_double(r.tightness_ratio)
          << '\n';
    }
    json j = {{"artifact", artifact_version()},
              {"config", config_json(run)},
              {"passed", ok},
              {"reports", json::parse(lemma1_report_json(reports))}};
    write_text(out_dir / "lemma1_report.json", j.dump(2) + "\n");
    return ok ? kExitOk : kExitCheckFailed;
  }

  const NodeDataset data = load_run_dataset(run);
  const ModelConfig cfg = make_model_config(run, data);

  if (options.mode == DiagnoseMode::bound) {
    if (run.alpha != 0.0) throw UsageError("bound mode requires alpha = 0 (the bound excludes the residual)");
    if (data.graph.num_nodes() > SpectralOptions{}.dense_limit) {
      throw CapabilityError("bound mode: graph exceeds the dense eigensolve cap");
    }
    const ModelParams params = ModelParams::initialize(cfg, run.seed);
    BoundOptions bo;
    bo.allow_relu = cfg.activation == Activation::relu;
    const BoundReport report = decay_bound_check(cfg, params, data.features, data.graph, bo);
    json j = {{"artifact", artifact_version()},
              {"config", config_json(run)},
              {"report", json::parse(bound_report_json(report))}};
    write_text(out_dir / "bound_report.json", j.dump(2) + "\n");
    log << "lambda=" << format_double(report.lambda) << " layers=" << report.layers.size()
        << " violations=" << report.violations() << " skipped=" << report.skipped() << '\n';
    return report.passed() ? kExitOk : kExitCheckFailed;
  }

  const std::vector<double> alphas = options.alphas.empty() ? std::vector<double>{run.alpha} : options.alphas;
  const OversmoothingReport report = oversmoothing_report(data, cfg, alphas, {run.layers}, run.seed);
  std::string header = "version=" + std::string(artifact_version()) + "\n";
  for (const auto& [k, v] : run.entries()) header += k + "=" + v + "\n";
  for (std::size_t i = 0; i < report.traces.size(); ++i) {
    const std::string alpha = format_double(report.rows[i].alpha);
    const std::string name = i == 0 ? "energy_trace.csv" : "energy_trace_alpha_" + alpha + ".csv";
    write_energy_csv(report.traces[i], out_dir / name, header + "trace_alpha=" + alpha);
  }
  write_summary_csv(report, out_dir / "energy_summary.csv", header);
  for (const auto& r : report.rows) {
    log << "alpha=" << format_double(r.alpha) << " layers=" << r.layers << " E0=" << format_double(r.initial)
        << " E_final=" << format_double(r.final) << " ratio=" << format_double(r.ratio()) << '\n';
  }
  return kExitOk;
}

}  // namespace rhgcn
