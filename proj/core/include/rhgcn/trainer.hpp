#pragma once

// Library side of the command-line tool: every command is a function that
// throws rhgcn::Error subclasses; the executable maps them to exit codes.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rhgcn/checkpoint.hpp"
#include "rhgcn/diagnostics.hpp"
#include "rhgcn/grad_check.hpp"
#include "rhgcn/optimizer.hpp"

namespace rhgcn {

/// Exit codes shared by all commands.
enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitNumeric = 3 };

/// Dataset directory when set, otherwise the synthetic spec with data_seed.
NodeDataset load_run_dataset(const RunConfig& run);

/// Model configuration for a dataset; component origins are sampled from run.seed.
ModelConfig make_model_config(const RunConfig& run, const NodeDataset& data);
OptimizerConfig make_optimizer_config(const RunConfig& run);

/// "# key=value" lines: artifact version and every config key except the output directory.
std::string config_echo(const RunConfig& run);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

struct TrainOutcome {
  std::vector<EpochMetrics> history;  // epoch 0 is the untrained model
  Checkpoint best;
  int best_epoch = 0;
  double best_val_acc = 0.0;
  double test_acc = 0.0;
  int epochs_run = 0;
};

/// Full-batch training with early stopping on validation accuracy. Epoch 0 evaluates the
/// initial parameters; the best checkpoint has the highest validation accuracy, ties
/// broken by lower validation loss. Throws NumericError when the loss becomes non-finite.
TrainOutcome train(const RunConfig& run, const NodeDataset& data,
                   const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// train() plus metrics.csv, checkpoint.json and results.json under out_dir.
TrainOutcome run_training(const RunConfig& run, const std::filesystem::path& out_dir);

struct SweepRow {
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double best_val_acc = 0.0;
  double test_acc = 0.0;
};

/// run.sweep_seeds independent runs with seeds run.seed, run.seed + 1, ...; each writes to
/// out_dir/seed_<s>. Up to run.threads sessions run concurrently. Writes sweep.csv.
std::vector<SweepRow> run_sweep(const RunConfig& run, const std::filesystem::path& out_dir);

struct EvalOutcome {
  double test_acc = 0.0;
  double val_acc = 0.0;
  double train_acc = 0.0;
  int epoch = 0;
};

/// Evaluates a checkpoint on the dataset named by its run config, or on data when given.
EvalOutcome run_eval(const Checkpoint& ckpt, const NodeDataset& data);

struct GradCheckOutcome {
  ad::GradCheckReport report;
  double threshold = 1e-4;
  bool passed() const { return report.max_rel_error < threshold; }
};

/// Finite-difference check of all parameters of the configured model on its dataset
/// (n <= 50). Throws UsageError when drop_rate > 0 or the graph is too large.
GradCheckOutcome run_gradcheck(const RunConfig& run);

enum class DiagnoseMode { energy, bound, lemma1 };
DiagnoseMode parse_diagnose_mode(const std::string& name);

struct DiagnoseOptions {
  DiagnoseMode mode = DiagnoseMode::energy;
  std::size_t trials = 10000;
  std::vector<int> lemma_sizes{4, 16, 64};
  std::vector<double> alphas;  // energy mode: empty means {run.alpha}
};

/// Writes energy_trace.csv (+ energy_summary.csv), bound_report.json or lemma1_report.json.
/// Returns kExitOk, or kExitCheckFailed when a bound or lemma check reports violations.
int run_diagnose(const RunConfig& run, const DiagnoseOptions& options, const std::filesystem::path& out_dir,
                 std::ostream& log);

}  // namespace rhgcn
