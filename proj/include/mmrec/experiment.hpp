#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmrec/config.hpp"
#include "mmrec/dataset.hpp"
#include "mmrec/evaluation.hpp"
#include "mmrec/features.hpp"
#include "mmrec/trainer.hpp"

namespace mmrec {

/// Raw inputs turned into the frozen split plus aligned modality tables.
struct PreparedData {
  Dataset dataset;
  std::vector<ModalityTable> tables;  // canonical modality order
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Fused features for a model kind, or nullopt for unimodal models.
/// Throws MissingFeatures when a multimodal model has no modality configured.
std::optional<Matrix> fused_features_for(const ExperimentConfig& cfg, const PreparedData& data);

struct RunResult {
  std::vector<std::pair<std::string, std::string>> combo;
  std::optional<MetricReport> valid;
  std::optional<MetricReport> test;
  long best_epoch = -1;
  StopReason stop_reason = StopReason::max_epochs;
  double wall_time = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct SummaryReport {
  std::vector<std::string> grid_keys;
  std::vector<std::size_t> cutoffs;
  MetricKey selection_metric;
  bool report_wall_time = false;
  std::vector<RunResult> runs;
  std::optional<std::size_t> best_index;
};

/// Trains one concrete config on prepared data and evaluates the best
/// checkpoint on valid and test. With `artifact_dir`, writes train_log.tsv and
/// checkpoint/ there.
RunResult run_combo(const GridCombo& combo, const PreparedData& data,
                    const std::optional<std::filesystem::path>& artifact_dir, FitResult* fit_out = nullptr);

struct ExperimentOptions {
  std::filesystem::path out_dir;  // empty: no artifacts written
  std::size_t jobs = 1;
};

/// Preprocesses once, then runs every grid combo on the same frozen split
/// with a freshly seeded state. Failed combos are recorded unless fail_fast.
SummaryReport run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& options);

/// Earliest successful run with the highest validation selection metric.
std::optional<std::size_t> select_best(const std::vector<RunResult>& runs, const MetricKey& metric);

std::string format_report(const SummaryReport& report);
void write_report(const SummaryReport& report, const std::filesystem::path& path);

}  // namespace mmrec
