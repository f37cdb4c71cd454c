#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmrec/dataset.hpp"
#include "mmrec/evaluation.hpp"
#include "mmrec/features.hpp"
#include "mmrec/model.hpp"
#include "mmrec/trainer.hpp"

namespace mmrec {

struct FeatureSource {
  std::filesystem::path matrix;
  std::filesystem::path ids;
};

/// All settings of one experiment. `grid` maps a hyperparameter key to the
/// literal values listed for it; every other field holds the scalar value
/// (or its default).
struct ExperimentConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::filesystem::path interactions;
  FilterParams filter;
  SplitSpec split;

  std::map<ModalityKind, FeatureSource> features;
  FusionMethod fusion = FusionMethod::concat;
  ImputePolicy imputation = ImputePolicy::zeros;
  bool standardize = false;

  ModelKind model = ModelKind::mf_bpr;
  ModelDims dims;
  TrainConfig train;
  std::vector<std::size_t> topk{5, 10, 20, 50};
  MetricKey selection_metric{Metric::recall, 20};
  bool fail_fast = false;
  bool report_wall_time = false;

  std::map<std::string, std::vector<std::string>> grid;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Keys that may carry a list of values (one grid axis each).
const std::vector<std::string>& grid_keys();
bool is_grid_key(std::string_view key);

/// Assigns one literal value to `key`. Throws UnknownKey or TypeMismatch.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Grammar: one `key: value` per line; blank lines and lines starting with
/// `#` are skipped. Values are numbers, "quoted strings", bare tokens, or
/// `[a, b, c]` lists. A list on a grid key declares an axis. MMREC_SEED, when
/// set, overrides `seed`. Throws ParseError(line), UnknownKey, TypeMismatch.
ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig parse_config(const std::filesystem::path& path);

struct GridCombo {
  std::vector<std::pair<std::string, std::string>> assignment;  // grid key order
  ExperimentConfig config;                                      // scalar, no axes
};

/// Cartesian product; axes in key order, values in file order, last axis
/// fastest. No axes gives the scalar config alone.
std::vector<GridCombo> expand_grid(const ExperimentConfig& cfg);

}  // namespace mmrec
