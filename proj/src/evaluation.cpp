#include "mmrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mmrec/error.hpp"
#include "mmrec/text.hpp"

namespace mmrec {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::recall: return "recall";
    case Metric::precision: return "precision";
    case Metric::ndcg: return "ndcg";
    case Metric::map: return "map";
  }
  return "?";
}

Metric metric_from_string(std::string_view name) {
  for (auto m : kAllMetrics)
    if (to_string(m) == name) return m;
  throw InvalidArgument("unknown metric: " + std::string(name));
}

std::string MetricKey::str() const { return std::string(to_string(metric)) + "@" + std::to_string(k); }

MetricKey MetricKey::parse(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) throw InvalidArgument("metric must look like recall@20");
  const auto k = parse_uint64(text.substr(at + 1));
  if (!k || *k == 0) throw InvalidArgument("bad metric cutoff in " + std::string(text));
  return {metric_from_string(text.substr(0, at)), static_cast<std::size_t>(*k)};
}

double MetricReport::at(const MetricKey& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw InvalidArgument("report has no " + key.str());
  return it->second;
}

void mask_trained(std::span<double> scores, std::span<const Index> train_row) {
  for (Index i : train_row) scores[i] = kMasked;
}

std::vector<Index> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] != kMasked) candidates.push_back(static_cast<Index>(i));
  const auto better = [&](Index a, Index b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                    better);
  candidates.resize(take);
  return candidates;
}

namespace {

void require_truth(std::span<const Index> gt) {
  if (gt.empty()) throw EmptyGroundTruth("metric needs a non-empty ground truth set");
}

bool is_hit(std::span<const Index> gt, Index item) { return std::binary_search(gt.begin(), gt.end(), item); }

std::size_t hits(std::span<const Index> topk, std::span<const Index> gt, std::size_t k) {
  std::size_t n = 0;
  for (std::size_t p = 0; p < std::min(k, topk.size()); ++p) n += is_hit(gt, topk[p]) ? 1 : 0;
  return n;
}

}  // namespace

double recall_at_k(std::span<const Index> topk, std::span<const Index> gt, std::size_t k) {
  require_truth(gt);
  return static_cast<double>(hits(topk, gt, k)) / static_cast<double>(gt.size());
}

double precision_at_k(std::span<const Index> topk, std::span<const Index> gt, std::size_t k) {
  require_truth(gt);
  return static_cast<double>(hits(topk, gt, k)) / static_cast<double>(k);
}

double ndcg_at_k(std::span<const Index> topk, std::span<const Index> gt, std::size_t k) {
  require_truth(gt);
  double dcg = 0.0;
  for (std::size_t p = 0; p < std::min(k, topk.size()); ++p)
    if (is_hit(gt, topk[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  double idcg = 0.0;
  for (std::size_t p = 0; p < std::min(k, gt.size()); ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

double map_at_k(std::span<const Index> topk, std::span<const Index> gt, std::size_t k) {
  require_truth(gt);
  double sum = 0.0;
  std::size_t found = 0;
  for (std::size_t p = 0; p < std::min(k, topk.size()); ++p)
    if (is_hit(gt, topk[p])) {
      ++found;
      sum += static_cast<double>(found) / static_cast<double>(p + 1);
    }
  return sum / static_cast<double>(std::min(k, gt.size()));
}

std::vector<TopKList> rank_users(const ModelState& state, const ModelContext& ctx, const Dataset& dataset,
                                 SplitPart target, std::size_t max_k) {
  const Csr& truth = dataset.part(target);
  std::vector<Index> users;
  for (std::size_t u = 0; u < dataset.n_users; ++u)
    if (truth.row_size(u) > 0) users.push_back(static_cast<Index>(u));

  const auto reps = make_recommender(state.kind)->represent(state, ctx);
  std::vector<TopKList> lists;
  lists.reserve(users.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < users.size(); begin += kChunk) {
    const std::size_t end = std::min(users.size(), begin + kChunk);
    Matrix picked(static_cast<Eigen::Index>(end - begin), reps.users.cols());
    for (std::size_t k = begin; k < end; ++k) picked.row(static_cast<Eigen::Index>(k - begin)) = reps.users.row(users[k]);
    Matrix scores = picked * reps.items.transpose();
    for (std::size_t k = begin; k < end; ++k) {
      auto row = std::span<double>(scores.row(static_cast<Eigen::Index>(k - begin)).data(),
                                   static_cast<std::size_t>(scores.cols()));
      mask_trained(row, dataset.train.row(users[k]));
      lists.push_back({users[k], top_k(row, max_k)});
    }
  }
  return lists;
}

MetricReport report_from_lists(std::span<const TopKList> lists, const Csr& target, std::vector<std::size_t> cutoffs) {
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  if (cutoffs.empty() || cutoffs.front() == 0) throw InvalidArgument("cutoffs must be positive and non-empty");
  MetricReport report;
  report.cutoffs = cutoffs;
  for (auto m : kAllMetrics)
    for (auto k : cutoffs) report.values[{m, k}] = 0.0;
  for (const auto& list : lists) {
    const auto gt = target.row(list.user);
    if (gt.empty()) continue;
    ++report.n_evaluated;
    for (auto k : cutoffs) {
      report.values[{Metric::recall, k}] += recall_at_k(list.items, gt, k);
      report.values[{Metric::precision, k}] += precision_at_k(list.items, gt, k);
      report.values[{Metric::ndcg, k}] += ndcg_at_k(list.items, gt, k);
      report.values[{Metric::map, k}] += map_at_k(list.items, gt, k);
    }
  }
  if (report.n_evaluated == 0) throw EmptySplit("no user has ground truth in the target split");
  for (auto& [key, value] : report.values) value /= static_cast<double>(report.n_evaluated);
  return report;
}

MetricReport evaluate(const ModelState& state, const ModelContext& ctx, const Dataset& dataset, SplitPart target,
                      std::vector<std::size_t> cutoffs) {
  if (cutoffs.empty()) throw InvalidArgument("cutoffs must be non-empty");
  const std::size_t max_k = *std::max_element(cutoffs.begin(), cutoffs.end());
  if (dataset.part(target).nnz() == 0) throw EmptySplit("target split is empty");
  const auto lists = rank_users(state, ctx, dataset, target, max_k);
  return report_from_lists(lists, dataset.part(target), std::move(cutoffs));
}

std::string format_report(const MetricReport& report) {
  std::ostringstream out;
  out << "metric\tk\tvalue\n";
  for (auto m : kAllMetrics)
    for (auto k : report.cutoffs) out << to_string(m) << '\t' << k << '\t' << format_fixed(report.at({m, k}), 6) << '\n';
  out << "n_evaluated\t" << report.n_evaluated << '\n';
  return out.str();
}

void write_metric_report(const MetricReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << format_report(report);
}

}  // namespace mmrec
