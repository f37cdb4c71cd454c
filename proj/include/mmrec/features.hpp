#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mmrec/dataset.hpp"
#include "mmrec/types.hpp"

namespace mmrec {

/// Canonical order: text < image < audio < video.
enum class ModalityKind { text = 0, image = 1, audio = 2, video = 3 };

inline constexpr std::array<ModalityKind, 4> kAllModalities{
    ModalityKind::text, ModalityKind::image, ModalityKind::audio, ModalityKind::video};

std::string_view to_string(ModalityKind kind);
ModalityKind modality_from_string(std::string_view name);

/// Precomputed item features as read from disk, keyed by raw item id.
struct FeatureMatrix {
  Matrix values;  // rows x dim
  std::vector<std::string> row_ids;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
};

/// Features for one modality aligned to dense item indices.
struct ModalityTable {
  ModalityKind kind = ModalityKind::text;
  Matrix features;  // n_items x dim
  std::vector<bool> present_mask;

  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
};

enum class ImputePolicy { zeros, mean };
enum class FusionMethod { concat, sum, mean };

std::string_view to_string(ImputePolicy p);
ImputePolicy impute_policy_from_string(std::string_view name);
std::string_view to_string(FusionMethod m);
FusionMethod fusion_method_from_string(std::string_view name);

/// Reads an MMF1 matrix plus its id list (one raw item id per line).
/// Throws BadMagic, DimensionMismatch, NonFiniteValue(row, col).
FeatureMatrix load_feature_matrix(const std::filesystem::path& matrix_path,
                                  const std::filesystem::path& ids_path);
void save_feature_matrix(const FeatureMatrix& fm, const std::filesystem::path& matrix_path,
                         const std::filesystem::path& ids_path);

/// Copies rows of known items into dense order; rows of unknown raw ids are
/// dropped; items without a row are imputed. Throws AllMissing.
ModalityTable align_features(const FeatureMatrix& fm, ModalityKind kind, const IdMap& item_map,
                             ImputePolicy policy = ImputePolicy::zeros);

/// Inverse view of an aligned table (ids in dense order), used to re-align.
FeatureMatrix to_feature_matrix(const ModalityTable& table, const IdMap& item_map);

/// Zero mean / unit variance per column, statistics over present rows.
/// Constant columns are only centred. Imputed rows are transformed with the
/// same statistics.
void standardize_columns(ModalityTable& table);

/// Sorts tables into canonical modality order, then concatenates columns or
/// reduces element-wise. Throws EmptyList, DimMismatch.
Matrix fuse(std::vector<ModalityTable> tables, FusionMethod method);

}  // namespace mmrec
