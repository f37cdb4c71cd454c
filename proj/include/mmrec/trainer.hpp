#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mmrec/dataset.hpp"
#include "mmrec/evaluation.hpp"
#include "mmrec/model.hpp"
#include "mmrec/rng.hpp"

namespace mmrec {

enum class OptimizerKind { adam, sgd };
std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view name);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 2048;
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  std::size_t eval_interval = 1;
  MetricKey stop_metric{Metric::recall, 20};
  std::vector<std::size_t> eval_cutoffs{5, 10, 20, 50};
  OptimizerKind optimizer = OptimizerKind::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 42;

  void validate() const;
};

struct OptimizerState {
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
  std::uint64_t t = 0;
};

struct EvalRecord {
  std::size_t epoch = 0;
  MetricReport report;
};

enum class StopReason { early_stop, max_epochs };
std::string_view to_string(StopReason r);

struct TrainLog {
  std::vector<double> epoch_loss;  // mean over the epoch's triples
  std::vector<EvalRecord> evals;
  long best_epoch = -1;            // -1: nothing trained
  StopReason stop_reason = StopReason::max_epochs;
};

/// Uniform over items outside the user's train row, by rejection.
/// Throws NoNegativeAvailable when the row covers every item.
Index sample_negative(const Csr& train, Index user, Rng& rng);

/// One epoch of triples: every train pair once as a positive, in an order
/// shuffled from (seed, epoch), each with one sampled negative. The last
/// batch may be short.
std::vector<TripleBatch> make_batches(const Csr& train, std::size_t batch_size, std::size_t epoch,
                                      std::uint64_t seed);

/// Bias-corrected Adam. Tensors with no entry in `grads` are not touched.
/// Throws NonFiniteGradient before mutating anything.
void adam_step(ModelState& state, const GradientSet& grads, OptimizerState& opt, const TrainConfig& cfg);

/// theta <- theta - lr * g
void sgd_step(ModelState& state, const GradientSet& grads, const TrainConfig& cfg);

struct FitResult {
  ModelState best;
  TrainLog log;
};

/// Mini-batch BPR training with periodic validation and early stopping.
/// Returns the parameters from the best validation evaluation (or the last
/// epoch when no evaluation ran).
FitResult fit(ModelKind kind, const Dataset& dataset, const Matrix* fused_features, const TrainConfig& cfg,
              const ModelDims& dims);

/// Lines `<epoch>\t<mean_loss>` and `eval\t<epoch>\t<metric@k>\t<value>`.
std::string format_train_log(const TrainLog& log);
void write_train_log(const TrainLog& log, const std::string& path);

}  // namespace mmrec
