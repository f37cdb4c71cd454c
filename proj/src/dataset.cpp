#include "mmrec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "mmrec/error.hpp"
#include "mmrec/rng.hpp"
#include "mmrec/text.hpp"

namespace mmrec {

IdMap::IdMap(std::vector<std::string> sorted_ids) : ids_(std::move(sorted_ids)) {
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (i > 0 && !(ids_[i - 1] < ids_[i]))
      throw InvalidArgument("IdMap ids must be strictly increasing");
    index_.emplace(ids_[i], static_cast<Index>(i));
  }
}

std::optional<Index> IdMap::find(std::string_view raw) const {
  const auto it = index_.find(std::string(raw));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index IdMap::at(std::string_view raw) const {
  const auto found = find(raw);
  if (!found) throw IndexOutOfRange("unknown raw id: " + std::string(raw));
  return *found;
}

std::string_view to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::per_user_random: return "per_user_random";
    case SplitStrategy::global_random: return "global_random";
    case SplitStrategy::temporal_leave_last: return "temporal_leave_last";
  }
  return "?";
}

SplitStrategy split_strategy_from_string(std::string_view name) {
  if (name == "per_user_random") return SplitStrategy::per_user_random;
  if (name == "global_random") return SplitStrategy::global_random;
  if (name == "temporal_leave_last") return SplitStrategy::temporal_leave_last;
  throw InvalidArgument("unknown split strategy: " + std::string(name));
}

std::string_view to_string(SplitPart part) {
  switch (part) {
    case SplitPart::train: return "train";
    case SplitPart::valid: return "valid";
    case SplitPart::test: return "test";
  }
  return "?";
}

SplitPart split_part_from_string(std::string_view name) {
  if (name == "train") return SplitPart::train;
  if (name == "valid") return SplitPart::valid;
  if (name == "test") return SplitPart::test;
  throw InvalidArgument("unknown split: " + std::string(name));
}

void SplitSpec::validate() const {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
  if (!(ratios[0] > 0.0)) throw InvalidArgument("train ratio must be positive");
}

const Csr& Dataset::part(SplitPart p) const {
  switch (p) {
    case SplitPart::train: return train;
    case SplitPart::valid: return valid;
    case SplitPart::test: return test;
  }
  return train;
}

IdMaps build_id_maps(const std::vector<InteractionRecord>& records) {
  if (records.empty()) throw EmptyDataset("no interactions survive filtering");
  std::set<std::string> users, items;
  for (const auto& rec : records) {
    users.insert(rec.raw_user_id);
    items.insert(rec.raw_item_id);
  }
  return {IdMap({users.begin(), users.end()}), IdMap({items.begin(), items.end()})};
}

HoldoutCounts holdout_counts(std::size_t n, const std::array<double, 3>& ratios) {
  auto take = [n](double ratio) {
    auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
    if (n >= 3 && ratio > 0.0 && count == 0) count = 1;
    return count;
  };
  if (n < 3) return {n, 0, 0};
  HoldoutCounts c;
  c.valid = take(ratios[1]);
  c.test = take(ratios[2]);
  while (c.valid + c.test >= n) {
    if (c.test >= c.valid && c.test > 0)
      --c.test;
    else
      --c.valid;
  }
  c.train = n - c.valid - c.test;
  return c;
}

namespace {

struct Edge {
  Index user;
  Index item;
  std::optional<std::int64_t> timestamp;
};

using PairList = std::vector<std::pair<Index, Index>>;

}  // namespace

Dataset split(const std::vector<InteractionRecord>& records, const IdMaps& maps,
              const SplitSpec& spec) {
  spec.validate();
  const std::size_t n_users = maps.users.size();
  const std::size_t n_items = maps.items.size();

  std::vector<Edge> edges;
  edges.reserve(records.size());
  for (const auto& rec : records)
    edges.push_back({maps.users.at(rec.raw_user_id), maps.items.at(rec.raw_item_id), rec.timestamp});
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.user, a.item) < std::tie(b.user, b.item);
  });

  PairList train, valid, test;
  switch (spec.strategy) {
    case SplitStrategy::per_user_random:
    case SplitStrategy::temporal_leave_last: {
      const bool temporal = spec.strategy == SplitStrategy::temporal_leave_last;
      if (temporal)
        for (const auto& e : edges)
          if (!e.timestamp) throw MissingTimestamps("temporal split needs a timestamp on every record");
      std::size_t begin = 0;
      while (begin < edges.size()) {
        std::size_t end = begin;
        while (end < edges.size() && edges[end].user == edges[begin].user) ++end;
        std::vector<Edge> mine(edges.begin() + static_cast<std::ptrdiff_t>(begin),
                               edges.begin() + static_cast<std::ptrdiff_t>(end));
        const auto counts = holdout_counts(mine.size(), spec.ratios);
        if (temporal) {
          std::sort(mine.begin(), mine.end(), [](const Edge& a, const Edge& b) {
            return std::tie(*a.timestamp, a.item) < std::tie(*b.timestamp, b.item);
          });
          // Oldest first: train, then valid, then the most recent into test.
          for (std::size_t k = 0; k < mine.size(); ++k) {
            auto& dst = k < counts.train ? train : (k < counts.train + counts.valid ? valid : test);
            dst.emplace_back(mine[k].user, mine[k].item);
          }
        } else {
          Rng rng(spec.seed, "split.per_user", mine.front().user);
          rng.shuffle(std::span<Edge>(mine));
          for (std::size_t k = 0; k < mine.size(); ++k) {
            auto& dst = k < counts.test ? test : (k < counts.test + counts.valid ? valid : train);
            dst.emplace_back(mine[k].user, mine[k].item);
          }
        }
        begin = end;
      }
      break;
    }
    case SplitStrategy::global_random: {
      Rng rng(spec.seed, "split.global");
      rng.shuffle(std::span<Edge>(edges));
      const auto n = static_cast<double>(edges.size());
      const auto n_valid = static_cast<std::size_t>(std::floor(spec.ratios[1] * n));
      const auto n_test = static_cast<std::size_t>(std::floor(spec.ratios[2] * n));
      const std::size_t n_train = edges.size() - n_valid - n_test;
      std::vector<int> part(edges.size());
      std::vector<std::size_t> train_count(n_users, 0);
      for (std::size_t k = 0; k < edges.size(); ++k) {
        part[k] = k < n_train ? 0 : (k < n_train + n_valid ? 1 : 2);
        if (part[k] == 0) ++train_count[edges[k].user];
      }
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const int p = train_count[edges[k].user] == 0 ? 0 : part[k];
        (p == 0 ? train : p == 1 ? valid : test).emplace_back(edges[k].user, edges[k].item);
      }
      break;
    }
  }

  Dataset ds;
  ds.n_users = n_users;
  ds.n_items = n_items;
  ds.user_map = maps.users;
  ds.item_map = maps.items;
  ds.train = Csr::from_pairs(n_users, n_items, std::move(train));
  ds.valid = Csr::from_pairs(n_users, n_items, std::move(valid));
  ds.test = Csr::from_pairs(n_users, n_items, std::move(test));
  ds.spec = spec;
  return ds;
}

Dataset preprocess(std::vector<InteractionRecord> records, FilterParams filter,
                   const SplitSpec& spec) {
  auto deduped = dedupe_interactions(std::move(records));
  auto filtered = k_core_filter(deduped, filter);
  const auto maps = build_id_maps(filtered);
  return split(filtered, maps, spec);
}

namespace {

void write_map(const IdMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < map.size(); ++i) out << map.raw(static_cast<Index>(i)) << '\t' << i << '\n';
}

void write_pairs(const Csr& csr, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [u, i] : csr.pairs()) out << u << '\t' << i << '\n';
}

IdMap read_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_view(line, '\t');
    const auto idx = fields.size() == 2 ? parse_uint64(fields[1]) : std::nullopt;
    if (!idx || *idx != ids.size()) throw IoError("bad id map line in " + path.string());
    ids.emplace_back(fields[0]);
  }
  return IdMap(std::move(ids));
}

Csr read_pairs(const std::filesystem::path& path, std::size_t n_users, std::size_t n_items) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  PairList pairs;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_view(line, '\t');
    const auto u = fields.size() == 2 ? parse_uint64(fields[0]) : std::nullopt;
    const auto i = fields.size() == 2 ? parse_uint64(fields[1]) : std::nullopt;
    if (!u || !i || *u >= n_users || *i >= n_items)
      throw IoError("bad interaction line in " + path.string());
    pairs.emplace_back(static_cast<Index>(*u), static_cast<Index>(*i));
  }
  return Csr::from_pairs(n_users, n_items, std::move(pairs));
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream meta(dir / "meta", std::ios::binary);
    if (!meta) throw IoError("cannot write " + (dir / "meta").string());
    meta << "n_users=" << ds.n_users << '\n'
         << "n_items=" << ds.n_items << '\n'
         << "n_train=" << ds.train.nnz() << '\n'
         << "n_valid=" << ds.valid.nnz() << '\n'
         << "n_test=" << ds.test.nnz() << '\n'
         << "split=" << to_string(ds.spec.strategy) << '\n'
         << "ratios=" << format_fixed(ds.spec.ratios[0], 9) << ',' << format_fixed(ds.spec.ratios[1], 9)
         << ',' << format_fixed(ds.spec.ratios[2], 9) << '\n'
         << "seed=" << ds.spec.seed << '\n';
  }
  write_map(ds.user_map, dir / "umap.tsv");
  write_map(ds.item_map, dir / "imap.tsv");
  write_pairs(ds.train, dir / "train.tsv");
  write_pairs(ds.valid, dir / "valid.tsv");
  write_pairs(ds.test, dir / "test.tsv");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream meta(dir / "meta");
  if (!meta) throw IoError("cannot read " + (dir / "meta").string());
  std::map<std::string, std::string, std::less<>> kv;
  std::string line;
  while (std::getline(meta, line)) {
    strip_cr(line);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError(std::string("dataset meta lacks ") + key);
    return it->second;
  };

  Dataset ds;
  ds.spec.strategy = split_strategy_from_string(get("split"));
  const auto ratios = split_view(get("ratios"), ',');
  if (ratios.size() != 3) throw IoError("dataset meta: bad ratios");
  for (std::size_t k = 0; k < 3; ++k) {
    const auto r = parse_double(ratios[k]);
    if (!r) throw IoError("dataset meta: bad ratios");
    ds.spec.ratios[k] = *r;
  }
  const auto seed = parse_uint64(get("seed"));
  if (!seed) throw IoError("dataset meta: bad seed");
  ds.spec.seed = *seed;
  ds.user_map = read_map(dir / "umap.tsv");
  ds.item_map = read_map(dir / "imap.tsv");
  ds.n_users = ds.user_map.size();
  ds.n_items = ds.item_map.size();
  if (parse_uint64(get("n_users")) != ds.n_users || parse_uint64(get("n_items")) != ds.n_items)
    throw IoError("dataset meta counts disagree with id maps");
  ds.train = read_pairs(dir / "train.tsv", ds.n_users, ds.n_items);
  ds.valid = read_pairs(dir / "valid.tsv", ds.n_users, ds.n_items);
  ds.test = read_pairs(dir / "test.tsv", ds.n_users, ds.n_items);
  return ds;
}

}  // namespace mmrec
