#include "mmrec/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <string_view>
#include <unordered_map>

#include "mmrec/error.hpp"
#include "mmrec/text.hpp"

namespace mmrec {

namespace {

std::optional<std::size_t> find_column(const std::vector<std::string_view>& header,
                                       std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

}  // namespace

std::vector<InteractionRecord> parse_interactions(std::istream& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(source, line)) throw MalformedHeader("missing header line");
  ++line_no;
  strip_cr(line);
  const auto header = split_view(line, '\t');
  const auto user_col = find_column(header, "userID");
  const auto item_col = find_column(header, "itemID");
  if (!user_col || !item_col)
    throw MalformedHeader("header must name userID and itemID columns");
  const auto rating_col = find_column(header, "rating");
  const auto time_col = find_column(header, "timestamp");
  const std::size_t n_fields = header.size();

  std::vector<InteractionRecord> out;
  while (std::getline(source, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_view(line, '\t');
    if (fields.size() != n_fields)
      throw MalformedLine(line_no, "expected " + std::to_string(n_fields) +
                                       " fields, got " + std::to_string(fields.size()));
    InteractionRecord rec;
    rec.raw_user_id = std::string(fields[*user_col]);
    rec.raw_item_id = std::string(fields[*item_col]);
    if (rec.raw_user_id.empty() || rec.raw_item_id.empty())
      throw MalformedLine(line_no, "empty user or item id");
    if (rating_col && !fields[*rating_col].empty()) {
      const auto value = parse_double(fields[*rating_col]);
      if (!value || !std::isfinite(*value)) throw MalformedLine(line_no, "non-numeric rating");
      rec.rating = *value;
    }
    if (time_col && !fields[*time_col].empty()) {
      const auto value = parse_int64(fields[*time_col]);
      if (!value) throw MalformedLine(line_no, "non-integer timestamp");
      rec.timestamp = *value;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<InteractionRecord> read_interactions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open interaction file: " + path);
  return parse_interactions(in);
}

std::vector<InteractionRecord> dedupe_interactions(std::vector<InteractionRecord> records) {
  std::map<std::pair<std::string, std::string>, std::size_t> keep;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto key = std::make_pair(records[i].raw_user_id, records[i].raw_item_id);
    auto [it, inserted] = keep.try_emplace(std::move(key), i);
    if (inserted) continue;
    const auto& incumbent = records[it->second].timestamp;
    const auto& candidate = records[i].timestamp;
    // Absent timestamps order below every present one; equal keys go to the later record.
    if (!incumbent || (candidate && *candidate >= *incumbent)) it->second = i;
  }
  std::vector<InteractionRecord> out;
  out.reserve(keep.size());
  for (const auto& [key, idx] : keep) out.push_back(std::move(records[idx]));
  return out;
}

std::vector<InteractionRecord> k_core_filter(const std::vector<InteractionRecord>& records,
                                             FilterParams params) {
  if (params.k < 1) throw InvalidArgument("k must be >= 1");
  // Nodes: users [0, n_users), items [n_users, n_users + n_items).
  std::unordered_map<std::string_view, std::uint32_t> user_ids, item_ids;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(records.size());
  for (const auto& rec : records) {
    auto u = user_ids.try_emplace(rec.raw_user_id, static_cast<std::uint32_t>(user_ids.size()));
    auto i = item_ids.try_emplace(rec.raw_item_id, static_cast<std::uint32_t>(item_ids.size()));
    edges.emplace_back(u.first->second, i.first->second);
  }
  const std::size_t n_users = user_ids.size();
  const std::size_t n_nodes = n_users + item_ids.size();

  std::vector<std::vector<std::uint32_t>> incident(n_nodes);
  for (std::uint32_t e = 0; e < edges.size(); ++e) {
    incident[edges[e].first].push_back(e);
    incident[n_users + edges[e].second].push_back(e);
  }
  std::vector<std::size_t> degree(n_nodes);
  std::vector<char> removed(n_nodes, 0), edge_dead(edges.size(), 0);
  std::deque<std::uint32_t> queue;
  for (std::uint32_t v = 0; v < n_nodes; ++v) {
    degree[v] = incident[v].size();
    if (degree[v] < params.k) {
      removed[v] = 1;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (auto e : incident[v]) {
      if (edge_dead[e]) continue;
      edge_dead[e] = 1;
      const std::uint32_t other = v < n_users ? static_cast<std::uint32_t>(n_users + edges[e].second)
                                              : edges[e].first;
      if (!removed[other] && --degree[other] < params.k) {
        removed[other] = 1;
        queue.push_back(other);
      }
    }
  }

  std::vector<InteractionRecord> out;
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (!edge_dead[e]) out.push_back(records[e]);
  return out;
}

}  // namespace mmrec
