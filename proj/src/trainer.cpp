#include "mmrec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mmrec/error.hpp"
#include "mmrec/text.hpp"

namespace mmrec {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw InvalidArgument("unknown optimizer: " + std::string(name));
}

std::string_view to_string(StopReason r) { return r == StopReason::early_stop ? "early_stop" : "max_epochs"; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (patience == 0) throw InvalidArgument("patience must be positive");
  if (eval_interval == 0) throw InvalidArgument("eval_interval must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw InvalidArgument("adam_beta1 must be in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw InvalidArgument("adam_beta2 must be in (0, 1)");
  if (!(adam_eps > 0.0)) throw InvalidArgument("adam_eps must be positive");
  if (eval_cutoffs.empty()) throw InvalidArgument("eval_cutoffs must be non-empty");
}

Index sample_negative(const Csr& train, Index user, Rng& rng) {
  const auto row = train.row(user);
  if (row.size() >= train.n_cols)
    throw NoNegativeAvailable("user " + std::to_string(user) + " interacted with every item");
  for (;;) {
    const auto item = static_cast<Index>(rng.uniform_index(train.n_cols));
    if (!std::binary_search(row.begin(), row.end(), item)) return item;
  }
}

std::vector<TripleBatch> make_batches(const Csr& train, std::size_t batch_size, std::size_t epoch,
                                      std::uint64_t seed) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  auto positives = train.pairs();
  Rng order(seed, "batch.order", epoch);
  order.shuffle(std::span(positives));
  Rng negatives(seed, "batch.negative", epoch);
  std::vector<TripleBatch> batches;
  batches.reserve((positives.size() + batch_size - 1) / batch_size);
  for (std::size_t begin = 0; begin < positives.size(); begin += batch_size) {
    TripleBatch batch;
    const std::size_t end = std::min(positives.size(), begin + batch_size);
    batch.triples.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      const auto [u, i] = positives[k];
      batch.triples.push_back({u, i, sample_negative(train, u, negatives)});
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

namespace {

void check_grads(const ModelState& state, const GradientSet& grads) {
  for (const auto& [name, g] : grads.tensors) {
    const Matrix& p = state.tensor(name);
    if (p.rows() != g.rows() || p.cols() != g.cols()) throw DimMismatch("gradient shape mismatch for " + name);
    if (!g.allFinite()) throw NonFiniteGradient("non-finite gradient in " + name);
  }
}

}  // namespace

void adam_step(ModelState& state, const GradientSet& grads, OptimizerState& opt, const TrainConfig& cfg) {
  check_grads(state, grads);
  ++opt.t;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.t));
  for (const auto& [name, g] : grads.tensors) {
    Matrix& theta = state.tensor(name);
    auto [mit, m_new] = opt.m.try_emplace(name, Matrix::Zero(g.rows(), g.cols()));
    auto [vit, v_new] = opt.v.try_emplace(name, Matrix::Zero(g.rows(), g.cols()));
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    theta.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
  }
}

void sgd_step(ModelState& state, const GradientSet& grads, const TrainConfig& cfg) {
  check_grads(state, grads);
  for (const auto& [name, g] : grads.tensors) state.tensor(name) -= cfg.learning_rate * g;
}

FitResult fit(ModelKind kind, const Dataset& dataset, const Matrix* fused_features, const TrainConfig& cfg,
              const ModelDims& dims) {
  cfg.validate();
  if (dataset.train.nnz() == 0) throw EmptyDataset("train split is empty");
  if (is_multimodal(kind) && fused_features == nullptr)
    throw MissingFeatures(std::string(to_string(kind)) + " needs fused item features");
  const std::size_t d_fused = fused_features ? static_cast<std::size_t>(fused_features->cols()) : 0;

  FitResult result;
  ModelState state = init_params(kind, dims, dataset.n_users, dataset.n_items, d_fused, cfg.seed);
  result.best = state;
  const auto model = make_recommender(kind);
  const ModelContext ctx(dataset.train, is_multimodal(kind) ? fused_features : nullptr);
  const bool can_validate = dataset.valid.nnz() > 0;

  std::vector<std::size_t> cutoffs = cfg.eval_cutoffs;
  if (std::find(cutoffs.begin(), cutoffs.end(), cfg.stop_metric.k) == cutoffs.end())
    cutoffs.push_back(cfg.stop_metric.k);

  OptimizerState opt;
  double best_value = -1.0;
  std::size_t stale = 0;
  bool have_best = false;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto batches = make_batches(dataset.train, cfg.batch_size, epoch, cfg.seed);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& batch : batches) {
      auto step = model->calculate_loss(state, batch, ctx);
      total += step.loss * static_cast<double>(batch.triples.size());
      count += batch.triples.size();
      if (cfg.optimizer == OptimizerKind::adam)
        adam_step(state, step.grads, opt, cfg);
      else
        sgd_step(state, step.grads, cfg);
    }
    result.log.epoch_loss.push_back(total / static_cast<double>(count));

    if (!can_validate || (epoch + 1) % cfg.eval_interval != 0) continue;
    auto report = evaluate(state, ctx, dataset, SplitPart::valid, cutoffs);
    const double value = report.at(cfg.stop_metric);
    result.log.evals.push_back({epoch, std::move(report)});
    if (!have_best || value > best_value) {
      have_best = true;
      best_value = value;
      stale = 0;
      result.best = state;
      result.log.best_epoch = static_cast<long>(epoch);
    } else if (++stale >= cfg.patience) {
      result.log.stop_reason = StopReason::early_stop;
      return result;
    }
  }
  if (!have_best && cfg.max_epochs > 0) {
    result.best = state;
    result.log.best_epoch = static_cast<long>(cfg.max_epochs) - 1;
  }
  result.log.stop_reason = StopReason::max_epochs;
  return result;
}

std::string format_train_log(const TrainLog& log) {
  std::ostringstream out;
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) out << e << '\t' << format_fixed(log.epoch_loss[e], 8) << '\n';
  for (const auto& rec : log.evals)
    for (const auto& [key, value] : rec.report.values)
      out << "eval\t" << rec.epoch << '\t' << key.str() << '\t' << format_fixed(value, 6) << '\n';
  out << "best_epoch\t" << log.best_epoch << '\n' << "stop_reason\t" << to_string(log.stop_reason) << '\n';
  return out.str();
}

void write_train_log(const TrainLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << format_train_log(log);
}

}  // namespace mmrec
