#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace mmrec {

struct InteractionRecord {
  std::string raw_user_id;
  std::string raw_item_id;
  std::optional<double> rating;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

/// Reads a tab-separated interaction log. The header must name `userID` and
/// `itemID`; `rating` and `timestamp` are optional, other columns are ignored.
/// Line numbers in MalformedLine count the header as line 1. Blank lines are
/// skipped.
std::vector<InteractionRecord> parse_interactions(std::istream& source);
std::vector<InteractionRecord> read_interactions_file(const std::string& path);

/// One record per (user, item): the greatest timestamp wins, a present
/// timestamp beats an absent one, and remaining ties go to the later record.
/// Output is sorted by (raw_user_id, raw_item_id).
std::vector<InteractionRecord> dedupe_interactions(std::vector<InteractionRecord> records);

struct FilterParams {
  std::uint32_t k = 5;
};

/// Maximal subset in which every user and every item has at least k records.
/// Degree-queue peeling; records must already be deduplicated. Input order is
/// preserved among survivors.
std::vector<InteractionRecord> k_core_filter(const std::vector<InteractionRecord>& records,
                                             FilterParams params);

}  // namespace mmrec
