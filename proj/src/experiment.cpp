#include "mmrec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mmrec/error.hpp"
#include "mmrec/matrix_io.hpp"
#include "mmrec/text.hpp"

namespace mmrec {

PreparedData prepare_data(const ExperimentConfig& cfg) {
  if (cfg.interactions.empty()) throw InvalidArgument("config has no interactions path");
  PreparedData data;
  data.dataset = preprocess(read_interactions_file(cfg.resolve(cfg.interactions).string()), cfg.filter, cfg.split);
  for (const auto& [kind, source] : cfg.features) {
    const auto fm = load_feature_matrix(cfg.resolve(source.matrix), cfg.resolve(source.ids));
    auto table = align_features(fm, kind, data.dataset.item_map, cfg.imputation);
    if (cfg.standardize) standardize_columns(table);
    data.tables.push_back(std::move(table));
  }
  return data;
}

std::optional<Matrix> fused_features_for(const ExperimentConfig& cfg, const PreparedData& data) {
  if (!is_multimodal(cfg.model)) return std::nullopt;
  if (data.tables.empty())
    throw MissingFeatures(std::string(to_string(cfg.model)) + " needs at least one features.<modality> entry");
  return fuse(data.tables, cfg.fusion);
}

namespace {

std::vector<std::size_t> report_cutoffs(const ExperimentConfig& cfg) {
  auto cutoffs = cfg.topk;
  cutoffs.push_back(cfg.selection_metric.k);
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  return cutoffs;
}

std::string one_line(std::string text) {
  std::replace_if(text.begin(), text.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return text;
}

}  // namespace

RunResult run_combo(const GridCombo& combo, const PreparedData& data,
                    const std::optional<std::filesystem::path>& artifact_dir, FitResult* fit_out) {
  const auto& cfg = combo.config;
  const auto started = std::chrono::steady_clock::now();
  RunResult result;
  result.combo = combo.assignment;

  const auto fused = fused_features_for(cfg, data);
  const Matrix* features = fused ? &*fused : nullptr;
  TrainConfig train = cfg.train;
  train.eval_cutoffs = report_cutoffs(cfg);
  auto fitted = fit(cfg.model, data.dataset, features, train, cfg.dims);

  const ModelContext ctx(data.dataset.train, features);
  const auto cutoffs = report_cutoffs(cfg);
  result.valid = evaluate(fitted.best, ctx, data.dataset, SplitPart::valid, cutoffs);
  result.test = evaluate(fitted.best, ctx, data.dataset, SplitPart::test, cutoffs);
  result.best_epoch = fitted.log.best_epoch;
  result.stop_reason = fitted.log.stop_reason;

  if (artifact_dir) {
    std::filesystem::create_directories(*artifact_dir);
    write_train_log(fitted.log, (*artifact_dir / "train_log.tsv").string());
    const auto ckpt = *artifact_dir / "checkpoint";
    save_checkpoint(fitted.best, ckpt);
    if (features) write_matrix_file(ckpt / "fused_features.mmf8", *features, MatrixPrecision::f64);
    write_metric_report(*result.valid, (*artifact_dir / "valid_report.tsv").string());
    write_metric_report(*result.test, (*artifact_dir / "test_report.tsv").string());
  }
  if (fit_out) *fit_out = std::move(fitted);
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::optional<std::size_t> select_best(const std::vector<RunResult>& runs, const MetricKey& metric) {
  std::optional<std::size_t> best;
  double best_value = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!runs[i].ok() || !runs[i].valid) continue;
    // compare at report precision so the written column reproduces the choice
    const double v = std::stod(format_fixed(runs[i].valid->at(metric), 6));
    if (!best || v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

SummaryReport run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& options) {
  const PreparedData data = prepare_data(cfg);
  const auto combos = expand_grid(cfg);
  const bool write = !options.out_dir.empty();
  if (write) save_dataset(data.dataset, options.out_dir / "dataset");

  SummaryReport report;
  for (const auto& [key, values] : cfg.grid) report.grid_keys.push_back(key);
  report.cutoffs = report_cutoffs(cfg);
  report.selection_metric = cfg.selection_metric;
  report.report_wall_time = cfg.report_wall_time;
  report.runs.resize(combos.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= combos.size() || abort) return;
      std::optional<std::filesystem::path> dir;
      if (write) {
        char name[32];
        std::snprintf(name, sizeof name, "combo_%03zu", i);
        dir = options.out_dir / name;
      }
      try {
        report.runs[i] = run_combo(combos[i], data, dir);
      } catch (const std::exception& e) {
        if (cfg.fail_fast) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          abort = true;
          return;
        }
        RunResult failed;
        failed.combo = combos[i].assignment;
        const auto* err = dynamic_cast<const Error*>(&e);
        failed.error = one_line(err ? err->code() + ": " + e.what() : std::string(e.what()));
        report.runs[i] = std::move(failed);
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, combos.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  report.best_index = select_best(report.runs, report.selection_metric);
  if (write) {
    write_report(report, options.out_dir / "summary.tsv");
    std::ofstream timing(options.out_dir / "timing.tsv", std::ios::binary);
    timing << "combo\twall_time\n";
    for (std::size_t i = 0; i < report.runs.size(); ++i)
      timing << i << '\t' << format_fixed(report.runs[i].wall_time, 3) << '\n';
  }
  return report;
}

std::string format_report(const SummaryReport& report) {
  std::ostringstream out;
  bool first = true;
  auto cell = [&](const std::string& text) {
    if (!first) out << '\t';
    out << text;
    first = false;
  };
  for (const auto& key : report.grid_keys) cell(key);
  for (const char* split : {"valid", "test"})
    for (auto m : kAllMetrics)
      for (auto k : report.cutoffs) cell(std::string(split) + "_" + MetricKey{m, k}.str());
  cell("best_epoch");
  cell("wall_time");
  cell("status");
  out << '\n';

  for (const auto& run : report.runs) {
    first = true;
    for (const auto& [key, value] : run.combo) cell(value);
    for (const auto* metrics : {&run.valid, &run.test})
      for (auto m : kAllMetrics)
        for (auto k : report.cutoffs) cell(run.ok() && *metrics ? format_fixed((*metrics)->at({m, k}), 6) : "NA");
    cell(run.ok() ? std::to_string(run.best_epoch) : "NA");
    cell(report.report_wall_time && run.ok() ? format_fixed(run.wall_time, 6) : "NA");
    cell(run.ok() ? "ok" : "error: " + run.error);
    out << '\n';
  }
  out << "# best: " << (report.best_index ? std::to_string(*report.best_index) : std::string("none")) << '\n';
  return out.str();
}

void write_report(const SummaryReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_report(report);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace mmrec
