#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmrec/interactions.hpp"
#include "mmrec/types.hpp"

namespace mmrec {

/// Raw id <-> dense index map. Dense indices follow lexicographic order of
/// the raw id strings, so `ids()` is sorted.
class IdMap {
 public:
  IdMap() = default;
  /// `sorted_ids` must be strictly increasing.
  explicit IdMap(std::vector<std::string> sorted_ids);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& raw(Index dense) const { return ids_.at(dense); }
  std::optional<Index> find(std::string_view raw) const;
  Index at(std::string_view raw) const;

  friend bool operator==(const IdMap& a, const IdMap& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, Index> index_;
};

enum class SplitStrategy { per_user_random, global_random, temporal_leave_last };

std::string_view to_string(SplitStrategy s);
SplitStrategy split_strategy_from_string(std::string_view name);

struct SplitSpec {
  SplitStrategy strategy = SplitStrategy::per_user_random;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};  // train, valid, test
  std::uint64_t seed = 42;

  /// Throws InvalidArgument when ratios are negative, do not sum to 1, or
  /// leave train empty.
  void validate() const;
};

enum class SplitPart { train, valid, test };
std::string_view to_string(SplitPart part);
SplitPart split_part_from_string(std::string_view name);

struct Dataset {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  IdMap user_map;
  IdMap item_map;
  Csr train;
  Csr valid;
  Csr test;
  SplitSpec spec;

  const Csr& part(SplitPart p) const;
};

struct IdMaps {
  IdMap users;
  IdMap items;
};

/// Throws EmptyDataset when `records` is empty.
IdMaps build_id_maps(const std::vector<InteractionRecord>& records);

/// Number of held-out interactions for one user with `n` interactions:
/// floor(ratio * n), raised to 1 when n >= 3 and ratio > 0. If valid + test
/// would consume every interaction, test and then valid are reduced so that
/// train keeps at least one.
struct HoldoutCounts {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};
HoldoutCounts holdout_counts(std::size_t n, const std::array<double, 3>& ratios);

Dataset split(const std::vector<InteractionRecord>& records, const IdMaps& maps,
              const SplitSpec& spec);

/// parse-free convenience: dedupe -> k-core -> maps -> split.
Dataset preprocess(std::vector<InteractionRecord> records, FilterParams filter,
                   const SplitSpec& spec);

/// Directory layout: meta, umap.tsv, imap.tsv, train.tsv, valid.tsv, test.tsv.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace mmrec
