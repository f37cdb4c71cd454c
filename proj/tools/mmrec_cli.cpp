// mmrec command-line entry point: preprocess, train, grid, eval.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mmrec/mmrec.hpp"
#include "mmrec/text.hpp"

namespace fs = std::filesystem;
using namespace mmrec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;

std::vector<double> parse_ratio_list(const std::string& text) {
  std::vector<double> out;
  for (auto part : split_view(text, ',')) {
    const auto v = parse_double(part);
    if (!v) throw TypeMismatch("--ratios expects three comma-separated numbers");
    out.push_back(*v);
  }
  if (out.size() != 3) throw TypeMismatch("--ratios expects three comma-separated numbers");
  return out;
}

std::vector<std::size_t> parse_cutoffs(const std::string& text) {
  std::vector<std::size_t> out;
  for (auto part : split_view(text, ',')) {
    const auto v = parse_uint64(part);
    if (!v || *v == 0) throw TypeMismatch("--topk expects positive integers");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

ExperimentConfig load_or_default(const std::string& config_path) {
  if (config_path.empty()) return ExperimentConfig{};
  return parse_config(config_path);
}

int cmd_preprocess(const std::string& config_path, const std::optional<std::string>& interactions,
                   const std::optional<std::uint32_t>& k, const std::optional<std::string>& strategy,
                   const std::optional<std::string>& ratios, const std::optional<std::uint64_t>& seed,
                   const std::string& out) {
  auto cfg = load_or_default(config_path);
  if (interactions) cfg.interactions = fs::absolute(*interactions);
  if (k) {
    if (*k == 0) throw TypeMismatch("--k must be >= 1");
    cfg.filter.k = *k;
  }
  if (strategy) cfg.split.strategy = split_strategy_from_string(*strategy);
  if (ratios) {
    const auto r = parse_ratio_list(*ratios);
    cfg.split.ratios = {r[0], r[1], r[2]};
  }
  if (seed) cfg.split.seed = *seed;
  try {
    cfg.split.validate();
  } catch (const InvalidArgument& e) {
    throw TypeMismatch(e.what());
  }
  if (cfg.interactions.empty()) throw TypeMismatch("preprocess needs --interactions or a config with interactions");
  const auto ds = preprocess(read_interactions_file(cfg.resolve(cfg.interactions).string()), cfg.filter, cfg.split);
  save_dataset(ds, out);
  std::printf("users=%zu items=%zu train=%zu valid=%zu test=%zu\n", ds.n_users, ds.n_items, ds.train.nnz(),
              ds.valid.nnz(), ds.test.nnz());
  return kExitOk;
}

int cmd_train(const std::string& config_path, const fs::path& out) {
  const auto cfg = parse_config(config_path);
  const auto combos = expand_grid(cfg);
  if (combos.size() != 1) throw TypeMismatch("train runs a single combination; use `grid` for list-valued keys");
  const auto data = prepare_data(cfg);
  save_dataset(data.dataset, out / "dataset");
  const auto result = run_combo(combos.front(), data, out);
  std::cout << "valid\n" << format_report(*result.valid) << "test\n" << format_report(*result.test);
  return kExitOk;
}

int cmd_grid(const std::string& config_path, const fs::path& out, std::size_t jobs) {
  const auto cfg = parse_config(config_path);
  const auto report = run_experiment(cfg, {out, jobs});
  std::cout << format_report(report);
  std::size_t failed = 0;
  for (const auto& run : report.runs) failed += run.ok() ? 0 : 1;
  if (failed > 0) std::fprintf(stderr, "%zu of %zu combinations failed\n", failed, report.runs.size());
  return report.best_index ? kExitOk : kExitError;
}

int cmd_eval(const std::string& config_path, const fs::path& checkpoint, const fs::path& data_dir,
             const std::string& split_name, const std::string& topk, const std::string& out) {
  const auto target = split_part_from_string(split_name);
  const auto cutoffs = parse_cutoffs(topk);
  const auto dataset = load_dataset(data_dir);
  const auto state = load_checkpoint(checkpoint);
  if (state.n_users != dataset.n_users || state.n_items != dataset.n_items)
    throw DimMismatch("checkpoint does not match the dataset's user/item counts");
  std::optional<Matrix> fused;
  if (is_multimodal(state.kind)) {
    if (fs::exists(checkpoint / "fused_features.mmf8")) {
      fused = read_matrix_file(checkpoint / "fused_features.mmf8");
    } else if (!config_path.empty()) {
      const auto cfg = parse_config(config_path);
      PreparedData data{dataset, {}};
      for (const auto& [kind, source] : cfg.features) {
        auto table = align_features(load_feature_matrix(cfg.resolve(source.matrix), cfg.resolve(source.ids)), kind,
                                    dataset.item_map, cfg.imputation);
        if (cfg.standardize) standardize_columns(table);
        data.tables.push_back(std::move(table));
      }
      fused = fused_features_for(cfg, data);
    } else {
      throw MissingFeatures("multimodal checkpoint without fused_features.mmf8; pass --config");
    }
  }
  const ModelContext ctx(dataset.train, fused ? &*fused : nullptr);
  const auto report = evaluate(state, ctx, dataset, target, cutoffs);
  if (!out.empty()) write_metric_report(report, out);
  std::cout << format_report(report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmrec: multimodal recommendation training and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;

  auto* pre = app.add_subcommand("preprocess", "dedupe, k-core filter and split raw interactions");
  std::optional<std::string> interactions, strategy, ratios;
  std::optional<std::uint32_t> k;
  std::optional<std::uint64_t> seed;
  pre->add_option("--config", config_path, "config file");
  pre->add_option("--interactions", interactions, "interaction TSV");
  pre->add_option("--k", k, "k-core threshold");
  pre->add_option("--split", strategy, "per_user_random | global_random | temporal_leave_last");
  pre->add_option("--ratios", ratios, "train,valid,test ratios");
  pre->add_option("--seed", seed, "split seed");
  pre->add_option("--out", out, "output dataset directory")->required();

  auto* train = app.add_subcommand("train", "train and evaluate a single configuration");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--out", out, "artifact directory")->required();

  auto* grid = app.add_subcommand("grid", "run every hyperparameter combination");
  std::size_t jobs = 1;
  grid->add_option("--config", config_path, "config file")->required();
  grid->add_option("--out", out, "artifact directory")->required();
  grid->add_option("--jobs", jobs, "parallel combinations (1 = reproducibility reference)")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a saved dataset");
  std::string checkpoint, data_dir, split_name = "test", topk = "5,10,20,50";
  eval->add_option("--config", config_path, "config file (for feature paths)");
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--split", split_name, "valid | test");
  eval->add_option("--topk", topk, "comma-separated cutoffs");
  eval->add_option("--out", out, "report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*pre) return cmd_preprocess(config_path, interactions, k, strategy, ratios, seed, out);
    if (*train) return cmd_train(config_path, out);
    if (*grid) return cmd_grid(config_path, out, jobs);
    if (*eval) return cmd_eval(config_path, checkpoint, data_dir, split_name, topk, out);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const UnknownKey& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const TypeMismatch& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
