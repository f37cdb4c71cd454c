#include "mmrec/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mmrec/error.hpp"
#include "mmrec/text.hpp"

namespace mmrec {

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
  return p.is_relative() ? base_dir / p : p;
}

const std::vector<std::string>& grid_keys() {
  static const std::vector<std::string> keys{"batch_size", "embedding_dim", "fusion", "learning_rate",
                                             "modal_dim",  "n_layers",      "reg"};
  return keys;
}

bool is_grid_key(std::string_view key) {
  const auto& keys = grid_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

namespace {

std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
  return std::string(v);
}

[[noreturn]] void mismatch(std::string_view key, std::string_view value) {
  throw TypeMismatch("bad value for " + std::string(key) + ": " + std::string(value));
}

std::size_t as_count(std::string_view key, std::string_view value, bool allow_zero = false) {
  const auto v = parse_uint64(value);
  if (!v || (!allow_zero && *v == 0)) mismatch(key, value);
  return static_cast<std::size_t>(*v);
}

double as_real(std::string_view key, std::string_view value) {
  const auto v = parse_double(value);
  if (!v) mismatch(key, value);
  return *v;
}

bool as_bool(std::string_view key, std::string_view value) {
  if (value == "true") return true;
  if (value == "false") return false;
  mismatch(key, value);
}

std::vector<std::string> split_list(std::string_view inner) {
  std::vector<std::string> out;
  if (trim(inner).empty()) return out;
  for (auto part : split_view(inner, ',')) out.push_back(unquote(part));
  return out;
}

template <typename Fn>
auto enum_value(std::string_view key, std::string_view value, Fn&& parse) {
  try {
    return parse(value);
  } catch (const InvalidArgument&) {
    mismatch(key, value);
  }
}

void apply_list(ExperimentConfig& cfg, std::string_view key, const std::vector<std::string>& items) {
  if (key == "ratios") {
    if (items.size() != 3) mismatch(key, "expected three ratios");
    for (std::size_t i = 0; i < 3; ++i) cfg.split.ratios[i] = as_real(key, items[i]);
  } else if (key == "topk") {
    if (items.empty()) mismatch(key, "empty cutoff list");
    cfg.topk.clear();
    for (const auto& item : items) cfg.topk.push_back(as_count(key, item));
  } else {
    mismatch(key, "list not allowed here");
  }
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string value = unquote(raw);
  const std::string_view v = value;
  if (key == "interactions") {
    cfg.interactions = value;
  } else if (key == "k") {
    cfg.filter.k = static_cast<std::uint32_t>(as_count(key, v));
  } else if (key == "split") {
    cfg.split.strategy = enum_value(key, v, split_strategy_from_string);
  } else if (key == "ratios" || key == "topk") {
    const auto t = trim(v);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') mismatch(key, v);
    apply_list(cfg, key, split_list(t.substr(1, t.size() - 2)));
  } else if (key == "seed") {
    const auto s = parse_uint64(v);
    if (!s) mismatch(key, v);
    cfg.split.seed = *s;
    cfg.train.seed = *s;
  } else if (key.starts_with("features.")) {
    const auto kind = [&] {
      try {
        return modality_from_string(key.substr(9));
      } catch (const InvalidArgument&) {
        throw UnknownKey("unknown key: " + std::string(key));
      }
    }();
    const auto parts = split_view(v, ',');
    if (parts.size() != 2 || trim(parts[0]).empty() || trim(parts[1]).empty()) mismatch(key, v);
    cfg.features[kind] = {std::string(trim(parts[0])), std::string(trim(parts[1]))};
  } else if (key == "fusion") {
    cfg.fusion = enum_value(key, v, fusion_method_from_string);
  } else if (key == "imputation") {
    cfg.imputation = enum_value(key, v, impute_policy_from_string);
  } else if (key == "standardize") {
    cfg.standardize = as_bool(key, v);
  } else if (key == "model") {
    cfg.model = enum_value(key, v, model_kind_from_string);
  } else if (key == "embedding_dim") {
    cfg.dims.d = as_count(key, v);
  } else if (key == "modal_dim") {
    cfg.dims.d_p = as_count(key, v);
  } else if (key == "n_layers") {
    cfg.dims.n_layers = as_count(key, v, true);
  } else if (key == "reg") {
    cfg.dims.lambda_reg = as_real(key, v);
    if (cfg.dims.lambda_reg < 0.0) mismatch(key, v);
  } else if (key == "learning_rate") {
    cfg.train.learning_rate = as_real(key, v);
    if (!(cfg.train.learning_rate > 0.0)) mismatch(key, v);
  } else if (key == "batch_size") {
    cfg.train.batch_size = as_count(key, v);
  } else if (key == "max_epochs") {
    cfg.train.max_epochs = as_count(key, v, true);
  } else if (key == "patience") {
    cfg.train.patience = as_count(key, v);
  } else if (key == "eval_interval") {
    cfg.train.eval_interval = as_count(key, v);
  } else if (key == "stop_metric") {
    cfg.train.stop_metric = enum_value(key, v, MetricKey::parse);
  } else if (key == "selection_metric") {
    cfg.selection_metric = enum_value(key, v, MetricKey::parse);
  } else if (key == "optimizer") {
    cfg.train.optimizer = enum_value(key, v, optimizer_from_string);
  } else if (key == "adam_beta1") {
    cfg.train.adam_beta1 = as_real(key, v);
  } else if (key == "adam_beta2") {
    cfg.train.adam_beta2 = as_real(key, v);
  } else if (key == "adam_eps") {
    cfg.train.adam_eps = as_real(key, v);
  } else if (key == "fail_fast") {
    cfg.fail_fast = as_bool(key, v);
  } else if (key == "report_wall_time") {
    cfg.report_wall_time = as_bool(key, v);
  } else {
    throw UnknownKey("unknown key: " + std::string(key));
  }
}

ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  std::map<std::string, std::size_t> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) throw ParseError(line_no, "expected `key: value`");
    const std::string key(trim(body.substr(0, colon)));
    const auto value = trim(body.substr(colon + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (value.empty()) throw ParseError(line_no, "missing value for " + key);
    if (!seen.emplace(key, line_no).second) throw ParseError(line_no, "duplicate key " + key);

    const bool is_list = value.front() == '[';
    if (is_list && value.back() != ']') throw ParseError(line_no, "unterminated list");
    if (!is_list && value.front() == '"' && (value.size() < 2 || value.back() != '"'))
      throw ParseError(line_no, "unterminated string");

    if (is_list && is_grid_key(key)) {
      auto items = split_list(value.substr(1, value.size() - 2));
      if (items.empty()) throw ParseError(line_no, "grid axis " + key + " has no values");
      ExperimentConfig scratch;
      for (const auto& item : items) apply_setting(scratch, key, item);
      cfg.grid[key] = std::move(items);
    } else {
      apply_setting(cfg, key, value);
    }
  }
  if (const char* env = std::getenv("MMREC_SEED"); env != nullptr && *env != '\0') {
    const auto s = parse_uint64(env);
    if (!s) throw TypeMismatch("MMREC_SEED must be a non-negative integer");
    cfg.split.seed = *s;
    cfg.train.seed = *s;
  }
  try {
    cfg.split.validate();
  } catch (const InvalidArgument& e) {
    throw TypeMismatch(std::string("ratios: ") + e.what());
  }
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.parent_path());
}

std::vector<GridCombo> expand_grid(const ExperimentConfig& cfg) {
  ExperimentConfig base = cfg;
  base.grid.clear();
  std::vector<GridCombo> combos{{{}, base}};
  for (const auto& [key, values] : cfg.grid) {
    std::vector<GridCombo> next;
    next.reserve(combos.size() * values.size());
    for (const auto& combo : combos)
      for (const auto& value : values) {
        GridCombo c = combo;
        c.assignment.emplace_back(key, value);
        apply_setting(c.config, key, value);
        next.push_back(std::move(c));
      }
    combos = std::move(next);
  }
  return combos;
}

}  // namespace mmrec
