#include "mmrec/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mmrec/error.hpp"
#include "mmrec/matrix_io.hpp"
#include "mmrec/text.hpp"

namespace mmrec {

std::string_view to_string(ModalityKind kind) {
  switch (kind) {
    case ModalityKind::text: return "text";
    case ModalityKind::image: return "image";
    case ModalityKind::audio: return "audio";
    case ModalityKind::video: return "video";
  }
  return "?";
}

ModalityKind modality_from_string(std::string_view name) {
  for (auto kind : kAllModalities)
    if (to_string(kind) == name) return kind;
  throw InvalidArgument("unknown modality: " + std::string(name));
}

std::string_view to_string(ImputePolicy p) { return p == ImputePolicy::zeros ? "zeros" : "mean"; }

ImputePolicy impute_policy_from_string(std::string_view name) {
  if (name == "zeros") return ImputePolicy::zeros;
  if (name == "mean") return ImputePolicy::mean;
  throw InvalidArgument("unknown imputation policy: " + std::string(name));
}

std::string_view to_string(FusionMethod m) {
  switch (m) {
    case FusionMethod::concat: return "concat";
    case FusionMethod::sum: return "sum";
    case FusionMethod::mean: return "mean";
  }
  return "?";
}

FusionMethod fusion_method_from_string(std::string_view name) {
  if (name == "concat") return FusionMethod::concat;
  if (name == "sum") return FusionMethod::sum;
  if (name == "mean") return FusionMethod::mean;
  throw InvalidArgument("unknown fusion method: " + std::string(name));
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& matrix_path,
                                  const std::filesystem::path& ids_path) {
  MatrixPrecision precision{};
  FeatureMatrix fm;
  fm.values = read_matrix_file(matrix_path, &precision);
  if (precision != MatrixPrecision::f32) throw BadMagic("feature files must be MMF1: " + matrix_path.string());

  std::ifstream in(ids_path);
  if (!in) throw IoError("cannot read " + ids_path.string());
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    fm.row_ids.push_back(line);
  }
  // A trailing newline yields no extra entry with getline; a final blank
  // line does, and is not an id.
  while (!fm.row_ids.empty() && fm.row_ids.back().empty() && fm.row_ids.size() > fm.rows())
    fm.row_ids.pop_back();
  if (fm.row_ids.size() != fm.rows())
    throw DimensionMismatch(std::to_string(fm.row_ids.size()) + " ids for " + std::to_string(fm.rows()) +
                            " matrix rows");
  for (std::size_t r = 0; r < fm.rows(); ++r)
    for (std::size_t c = 0; c < fm.dim(); ++c)
      if (!std::isfinite(fm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))))
        throw NonFiniteValue(r, c);
  auto sorted = fm.row_ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("duplicate item id in " + ids_path.string());
  return fm;
}

void save_feature_matrix(const FeatureMatrix& fm, const std::filesystem::path& matrix_path,
                         const std::filesystem::path& ids_path) {
  if (fm.row_ids.size() != fm.rows()) throw DimensionMismatch("row id count differs from rows");
  write_matrix_file(matrix_path, fm.values, MatrixPrecision::f32);
  std::ofstream out(ids_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + ids_path.string());
  for (const auto& id : fm.row_ids) out << id << '\n';
}

ModalityTable align_features(const FeatureMatrix& fm, ModalityKind kind, const IdMap& item_map,
                             ImputePolicy policy) {
  const auto n_items = static_cast<Eigen::Index>(item_map.size());
  const auto dim = static_cast<Eigen::Index>(fm.dim());
  ModalityTable table;
  table.kind = kind;
  table.features = Matrix::Zero(n_items, dim);
  table.present_mask.assign(item_map.size(), false);
  std::size_t present = 0;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    const auto dense = item_map.find(fm.row_ids[r]);
    if (!dense) continue;
    table.features.row(*dense) = fm.values.row(static_cast<Eigen::Index>(r));
    if (!table.present_mask[*dense]) ++present;
    table.present_mask[*dense] = true;
  }
  if (present == 0) throw AllMissing(std::string(to_string(kind)) + " features cover no retained item");

  if (policy == ImputePolicy::mean && present < item_map.size()) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < n_items; ++i)
      if (table.present_mask[static_cast<std::size_t>(i)]) mean += table.features.row(i);
    mean /= static_cast<double>(present);
    for (Eigen::Index i = 0; i < n_items; ++i)
      if (!table.present_mask[static_cast<std::size_t>(i)]) table.features.row(i) = mean;
  }
  return table;
}

FeatureMatrix to_feature_matrix(const ModalityTable& table, const IdMap& item_map) {
  FeatureMatrix fm;
  fm.values = table.features;
  fm.row_ids = item_map.ids();
  return fm;
}

void standardize_columns(ModalityTable& table) {
  const auto n = table.features.rows();
  std::size_t present = 0;
  for (bool p : table.present_mask) present += p ? 1 : 0;
  if (present == 0) return;
  for (Eigen::Index c = 0; c < table.features.cols(); ++c) {
    double mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (table.present_mask[static_cast<std::size_t>(i)]) mean += table.features(i, c);
    mean /= static_cast<double>(present);
    double var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (table.present_mask[static_cast<std::size_t>(i)]) {
        const double d = table.features(i, c) - mean;
        var += d * d;
      }
    var /= static_cast<double>(present);
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (Eigen::Index i = 0; i < n; ++i) table.features(i, c) = (table.features(i, c) - mean) * scale;
  }
}

Matrix fuse(std::vector<ModalityTable> tables, FusionMethod method) {
  if (tables.empty()) throw EmptyList("fuse needs at least one modality table");
  std::stable_sort(tables.begin(), tables.end(),
                   [](const ModalityTable& a, const ModalityTable& b) { return a.kind < b.kind; });
  for (std::size_t k = 1; k < tables.size(); ++k)
    if (tables[k].kind == tables[k - 1].kind) throw InvalidArgument("duplicate modality in fuse");
  const auto n_items = tables.front().features.rows();
  for (const auto& t : tables)
    if (t.features.rows() != n_items) throw DimMismatch("modality tables disagree on item count");

  if (method == FusionMethod::concat) {
    Eigen::Index total = 0;
    for (const auto& t : tables) total += t.features.cols();
    Matrix out(n_items, total);
    Eigen::Index offset = 0;
    for (const auto& t : tables) {
      out.middleCols(offset, t.features.cols()) = t.features;
      offset += t.features.cols();
    }
    return out;
  }

  const auto dim = tables.front().features.cols();
  for (const auto& t : tables)
    if (t.features.cols() != dim) throw DimMismatch("sum/mean fusion needs equal dimensions");
  Matrix out = tables.front().features;
  for (std::size_t k = 1; k < tables.size(); ++k) out += tables[k].features;
  if (method == FusionMethod::mean) out /= static_cast<double>(tables.size());
  return out;
}

}  // namespace mmrec
