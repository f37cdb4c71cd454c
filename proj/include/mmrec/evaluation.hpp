#pragma once

#include <array>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmrec/dataset.hpp"
#include "mmrec/model.hpp"
#include "mmrec/types.hpp"

namespace mmrec {

inline constexpr double kMasked = -std::numeric_limits<double>::infinity();

enum class Metric { recall, precision, ndcg, map };
inline constexpr std::array<Metric, 4> kAllMetrics{Metric::recall, Metric::precision, Metric::ndcg, Metric::map};

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view name);

/// A metric at a cutoff, written "recall@20".
struct MetricKey {
  Metric metric = Metric::recall;
  std::size_t k = 20;

  std::string str() const;
  static MetricKey parse(std::string_view text);
  friend auto operator<=>(const MetricKey&, const MetricKey&) = default;
};

struct MetricReport {
  std::vector<std::size_t> cutoffs;
  std::map<MetricKey, double> values;
  std::size_t n_evaluated = 0;

  double at(const MetricKey& key) const;
};

struct TopKList {
  Index user = 0;
  std::vector<Index> items;
};

/// Train items -> kMasked; other entries untouched.
void mask_trained(std::span<double> scores, std::span<const Index> train_row);

/// Highest K unmasked items, descending score, ties by ascending index.
std::vector<Index> top_k(std::span<const double> scores, std::size_t k);

// Binary-relevance metrics over a ranked list. `ground_truth` must be sorted.
// All throw EmptyGroundTruth on an empty ground truth.
double recall_at_k(std::span<const Index> topk, std::span<const Index> ground_truth, std::size_t k);
double precision_at_k(std::span<const Index> topk, std::span<const Index> ground_truth, std::size_t k);
double ndcg_at_k(std::span<const Index> topk, std::span<const Index> ground_truth, std::size_t k);
/// Average precision truncated at K, normalised by min(|GT|, K).
double map_at_k(std::span<const Index> topk, std::span<const Index> ground_truth, std::size_t k);

/// Ranked lists (length max cutoff) for every user with ground truth in
/// `target`, masking only train items.
std::vector<TopKList> rank_users(const ModelState& state, const ModelContext& ctx, const Dataset& dataset,
                                 SplitPart target, std::size_t max_k);

/// Full-sort evaluation. Means are accumulated in user-index order.
/// Throws EmptySplit when no user has ground truth in `target`.
MetricReport evaluate(const ModelState& state, const ModelContext& ctx, const Dataset& dataset,
                      SplitPart target, std::vector<std::size_t> cutoffs);

/// Same metrics from precomputed lists.
MetricReport report_from_lists(std::span<const TopKList> lists, const Csr& target,
                               std::vector<std::size_t> cutoffs);

/// TSV `metric\tk\tvalue` with 6 decimals, then `n_evaluated\t<n>`.
std::string format_report(const MetricReport& report);
void write_metric_report(const MetricReport& report, const std::string& path);

}  // namespace mmrec
