#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"

using namespace mmrec;

namespace {

std::vector<double> random_row(std::mt19937_64& gen, std::size_t n, bool with_ties) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> row(n);
  for (auto& v : row) v = with_ties ? std::floor(unif(gen) * 10.0) : unif(gen);
  return row;
}

// Random dataset with a random mf state whose scores are those of `scores`.
struct EvalInstance {
  Dataset ds;
  ModelState state;
};

EvalInstance random_eval_instance(std::uint64_t seed, std::size_t nu, std::size_t ni) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<Index, Index>> tr, te;
  for (Index u = 0; u < nu; ++u)
    for (Index i = 0; i < ni; ++i) {
      const double x = unif(gen);
      if (x < 0.05) tr.emplace_back(u, i);
      else if (x < 0.08) te.emplace_back(u, i);
    }
  EvalInstance inst;
  inst.ds.n_users = nu;
  inst.ds.n_items = ni;
  inst.ds.train = Csr::from_pairs(nu, ni, tr);
  inst.ds.valid = Csr(nu, ni);
  inst.ds.test = Csr::from_pairs(nu, ni, te);
  ModelDims dims;
  dims.d = 3;
  inst.state = init_params(ModelKind::mf_bpr, dims, nu, ni, 0, seed);
  return inst;
}

}  // namespace

TEST_CASE("mask_trained") {
  std::vector<double> s{0.3, 0.9, 0.5};
  const std::vector<Index> train{1};
  mask_trained(s, train);
  CHECK(s[0] == 0.3);
  CHECK(s[1] == kMasked);
  CHECK(s[2] == 0.5);

  std::vector<double> untouched{0.3, 0.9, 0.5};
  mask_trained(untouched, std::vector<Index>{});
  CHECK(untouched == std::vector<double>{0.3, 0.9, 0.5});

  std::vector<double> all{1, 2};
  mask_trained(all, std::vector<Index>{0, 1});
  CHECK(all[0] == kMasked);
  CHECK(all[1] == kMasked);
  CHECK(top_k(all, 5).empty());
}

TEST_CASE("top_k tie rule and truncation") {
  const std::vector<double> s{0.5, 0.9, 0.5};
  CHECK(top_k(s, 2) == std::vector<Index>{1, 0});
  CHECK(top_k(s, 10) == std::vector<Index>{1, 0, 2});
  std::vector<double> masked{0.5, kMasked, 0.7};
  CHECK(top_k(masked, 3) == std::vector<Index>{2, 0});
}

TEST_CASE("top_k equals the argsort oracle on random rows") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 1000; ++trial) {
    auto row = random_row(gen, 200, trial % 2 == 0);
    std::set<Index> masked;
    for (int m = 0; m < trial % 30; ++m) masked.insert(static_cast<Index>(gen() % 200));
    for (Index i : masked) row[i] = kMasked;
    const std::size_t k = 1 + gen() % 60;
    CHECK(top_k(row, k) == oracle::sort_truncate(row, masked, k));
  }
}

TEST_CASE("top_k is invariant under strictly increasing transforms") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto row = random_row(gen, 80, trial % 2 == 1);
    auto transformed = row;
    for (auto& v : transformed) v = std::exp(3.0 * v) + 7.0;
    CHECK(top_k(row, 25) == top_k(transformed, 25));
    auto scaled = row;
    for (auto& v : scaled) v *= 4.5;
    CHECK(top_k(row, 25) == top_k(scaled, 25));
  }
}

TEST_CASE("recall and precision") {
  const std::vector<Index> gt_a{5};
  CHECK(recall_at_k(std::vector<Index>{1, 5, 7}, gt_a, 3) == 1.0);
  // GT {a,b,c} = {1,2,3}; hits {1,3} in a K=10 list
  const std::vector<Index> gt{1, 2, 3};
  const std::vector<Index> top{1, 9, 3, 10, 11};
  CHECK(recall_at_k(top, gt, 10) == doctest::Approx(2.0 / 3.0));
  CHECK(precision_at_k(top, gt, 10) == doctest::Approx(0.2));
  const std::vector<Index> miss{7, 8};
  CHECK(recall_at_k(miss, gt, 2) == 0.0);
  CHECK(precision_at_k(miss, gt, 2) == 0.0);
  CHECK_THROWS_AS(recall_at_k(top, std::vector<Index>{}, 3), EmptyGroundTruth);
  CHECK_THROWS_AS(precision_at_k(top, std::vector<Index>{}, 3), EmptyGroundTruth);
}

TEST_CASE("ndcg") {
  const std::vector<Index> gt{5};
  CHECK(ndcg_at_k(std::vector<Index>{2, 5, 9}, gt, 3) == doctest::Approx(1.0 / std::log2(3.0)));
  CHECK(ndcg_at_k(std::vector<Index>{2, 5, 9}, gt, 3) == doctest::Approx(0.630930).epsilon(1e-6));
  const std::vector<Index> gt3{1, 2, 3};
  CHECK(ndcg_at_k(std::vector<Index>{3, 1, 2, 8}, gt3, 4) == doctest::Approx(1.0));
  CHECK(ndcg_at_k(std::vector<Index>{7, 8}, gt3, 2) == 0.0);
  CHECK_THROWS_AS(ndcg_at_k(gt3, std::vector<Index>{}, 2), EmptyGroundTruth);
}

TEST_CASE("map") {
  // GT {a,b} = {1,2}; list [a, x, b, y]
  const std::vector<Index> gt{1, 2};
  CHECK(map_at_k(std::vector<Index>{1, 8, 2, 9}, gt, 4) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(map_at_k(std::vector<Index>{1, 8, 2, 9}, gt, 4) == doctest::Approx(0.833333).epsilon(1e-6));
  CHECK(map_at_k(std::vector<Index>{4}, std::vector<Index>{4}, 1) == 1.0);
  CHECK(map_at_k(std::vector<Index>{7, 8}, gt, 2) == 0.0);
  CHECK_THROWS_AS(map_at_k(gt, std::vector<Index>{}, 2), EmptyGroundTruth);
}

TEST_CASE("metric identities and monotonicity in K") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::set<Index> truth_set;
    const int n_truth = 1 + static_cast<int>(gen() % 8);
    while (static_cast<int>(truth_set.size()) < n_truth) truth_set.insert(static_cast<Index>(gen() % 40));
    const std::vector<Index> truth(truth_set.begin(), truth_set.end());
    const auto row = random_row(gen, 40, false);
    const auto ranked = top_k(row, 40);
    double prev_recall = 0.0, prev_ndcg = 0.0;
    for (std::size_t k = 1; k <= 40; ++k) {
      const double r = recall_at_k(ranked, truth, k);
      const double p = precision_at_k(ranked, truth, k);
      const double n = ndcg_at_k(ranked, truth, k);
      const double m = map_at_k(ranked, truth, k);
      for (double v : {r, p, n, m}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
      }
      std::size_t hits = 0;
      for (std::size_t q = 0; q < k; ++q) hits += truth_set.count(ranked[q]);
      CHECK(p * static_cast<double>(k) == doctest::Approx(static_cast<double>(hits)));
      CHECK(r * static_cast<double>(truth.size()) == doctest::Approx(static_cast<double>(hits)));
      CHECK(r >= prev_recall);
      // IDCG grows with K until K reaches |GT|, so NDCG is only monotone past that point.
      if (k > truth.size()) CHECK(n >= prev_ndcg - 1e-15);
      prev_recall = r;
      prev_ndcg = n;
    }
  }
}

TEST_CASE("ndcg can drop while K < |GT|") {
  const std::vector<Index> gt{1, 2};
  const std::vector<Index> list{1, 9};
  CHECK(ndcg_at_k(list, gt, 1) == 1.0);
  CHECK(ndcg_at_k(list, gt, 2) == doctest::Approx(1.0 / (1.0 + 1.0 / std::log2(3.0))));
}

TEST_CASE("evaluate matches a brute-force per-user evaluation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_eval_instance(seed, 10 + seed * 2, 60 + seed * 7);
    const ModelContext ctx(inst.ds.train, nullptr);
    const std::vector<std::size_t> cutoffs{5, 10, 20};
    const auto report = evaluate(inst.state, ctx, inst.ds, SplitPart::test, cutoffs);
    const Matrix scores = oracle::naive_scores(inst.state, nullptr, inst.ds.train);
    std::map<std::pair<int, std::size_t>, double> sums;
    std::size_t users = 0;
    for (std::size_t u = 0; u < inst.ds.n_users; ++u) {
      const auto gt_row = inst.ds.test.row(u);
      if (gt_row.empty()) continue;
      ++users;
      const std::set<Index> truth(gt_row.begin(), gt_row.end());
      const auto tr = inst.ds.train.row(u);
      const std::set<Index> masked(tr.begin(), tr.end());
      std::vector<double> row(scores.row(static_cast<Eigen::Index>(u)).data(),
                              scores.row(static_cast<Eigen::Index>(u)).data() + scores.cols());
      for (auto k : cutoffs) {
        const auto m = oracle::naive_metrics(oracle::sort_truncate(row, masked, k), truth, k);
        sums[{0, k}] += m.recall;
        sums[{1, k}] += m.precision;
        sums[{2, k}] += m.ndcg;
        sums[{3, k}] += m.map;
      }
    }
    CHECK(report.n_evaluated == users);
    for (auto k : cutoffs) {
      CHECK(std::abs(report.at({Metric::recall, k}) - sums[{0, k}] / users) < 1e-9);
      CHECK(std::abs(report.at({Metric::precision, k}) - sums[{1, k}] / users) < 1e-9);
      CHECK(std::abs(report.at({Metric::ndcg, k}) - sums[{2, k}] / users) < 1e-9);
      CHECK(std::abs(report.at({Metric::map, k}) - sums[{3, k}] / users) < 1e-9);
    }
  }
}

TEST_CASE("evaluate: oracle ranking scores 1, uniform scores follow the index tie rule") {
  const std::size_t nu = 30, ni = 100;
  std::vector<std::pair<Index, Index>> tr, te;
  std::mt19937_64 gen(1);
  for (Index u = 0; u < nu; ++u) {
    const Index target = static_cast<Index>(gen() % ni);
    te.emplace_back(u, target);
    tr.emplace_back(u, static_cast<Index>((target + 50) % ni));
  }
  Dataset ds;
  ds.n_users = nu;
  ds.n_items = ni;
  ds.train = Csr::from_pairs(nu, ni, tr);
  ds.valid = Csr(nu, ni);
  ds.test = Csr::from_pairs(nu, ni, te);

  // Scores: item embedding 1 only for the user's test item via one-hot dims.
  ModelState oracle_state;
  oracle_state.kind = ModelKind::mf_bpr;
  oracle_state.n_users = nu;
  oracle_state.n_items = ni;
  oracle_state.tensors["user_emb"] = Matrix::Zero(nu, ni);
  oracle_state.tensors["item_emb"] = Matrix::Identity(ni, ni);
  for (const auto& [u, i] : te) oracle_state.tensors["user_emb"](u, i) = 1.0;
  const ModelContext ctx(ds.train, nullptr);
  const auto perfect = evaluate(oracle_state, ctx, ds, SplitPart::test, {5, 10, 20});
  for (const auto& [key, value] : perfect.values) {
    if (key.metric == Metric::precision) continue;  // one relevant item, K slots
    CHECK(value == doctest::Approx(1.0));
  }

  ModelState flat = oracle_state;
  flat.tensors["user_emb"].setZero();
  const auto uniform = evaluate(flat, ctx, ds, SplitPart::test, {20});
  double expected = 0.0;
  for (const auto& [u, i] : te) {
    // masked train item shifts the window by one when it lies below the target
    const Index train_item = ds.train.row(u)[0];
    const std::size_t rank = i - (train_item < i ? 1 : 0);
    expected += rank < 20 ? 1.0 : 0.0;
  }
  CHECK(uniform.at({Metric::recall, 20}) == doctest::Approx(expected / nu));

  CHECK_THROWS_AS(evaluate(flat, ctx, ds, SplitPart::valid, {20}), EmptySplit);
}

TEST_CASE("rank_users never returns train items") {
  const auto inst = random_eval_instance(42, 40, 150);
  const ModelContext ctx(inst.ds.train, nullptr);
  for (const auto& list : rank_users(inst.state, ctx, inst.ds, SplitPart::test, 50)) {
    for (Index i : list.items) CHECK_FALSE(inst.ds.train.contains(list.user, i));
    std::set<Index> uniq(list.items.begin(), list.items.end());
    CHECK(uniq.size() == list.items.size());
  }
}

TEST_CASE("metric key parsing and report format") {
  CHECK(MetricKey::parse("recall@20") == MetricKey{Metric::recall, 20});
  CHECK(MetricKey::parse("ndcg@5").str() == "ndcg@5");
  CHECK_THROWS_AS(MetricKey::parse("recall"), InvalidArgument);
  CHECK_THROWS_AS(MetricKey::parse("auc@5"), InvalidArgument);
  MetricReport r;
  r.cutoffs = {5};
  for (auto m : kAllMetrics) r.values[{m, 5}] = 0.5;
  r.n_evaluated = 3;
  CHECK(format_report(r) ==
        "metric\tk\tvalue\nrecall\t5\t0.500000\nprecision\t5\t0.500000\nndcg\t5\t0.500000\nmap\t5\t0.500000\n"
        "n_evaluated\t3\n");
}
