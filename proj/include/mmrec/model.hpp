#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmrec/types.hpp"

namespace mmrec {

enum class ModelKind { mf_bpr, vbpr_mm, graph_mm };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);
bool is_multimodal(ModelKind kind);

struct ModelDims {
  std::size_t d = 64;         // id embedding size
  std::size_t d_p = 64;       // visual/modal factor size (vbpr_mm)
  std::size_t n_layers = 2;   // propagation depth (graph_mm)
  double lambda_reg = 1e-4;   // L2 on the rows a batch touches
};

/// Parameter tensors of one model instance, by name:
///   all kinds: user_emb (n_users x d), item_emb (n_items x d)
///   vbpr_mm:   user_mod_emb (n_users x d_p), proj (d_fused x d_p)
///   graph_mm:  mod_proj (d_fused x d)
struct ModelState {
  ModelKind kind = ModelKind::mf_bpr;
  ModelDims dims;
  std::uint64_t seed = 0;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t d_fused = 0;
  std::map<std::string, Matrix> tensors;

  const Matrix& tensor(const std::string& name) const;
  Matrix& tensor(const std::string& name);
};

/// Gradient per tensor name; a name that is absent means "no gradient".
struct GradientSet {
  std::map<std::string, Matrix> tensors;
};

struct Triple {
  Index user;
  Index pos_item;
  Index neg_item;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct TripleBatch {
  std::vector<Triple> triples;
};

struct LossResult {
  double loss = 0.0;
  GradientSet grads;
};

/// Symmetrically normalised user-item adjacency D^-1/2 A D^-1/2 of the train
/// graph. Zero-degree nodes get a zero normalisation factor.
class NormalizedAdjacency {
 public:
  NormalizedAdjacency() = default;
  explicit NormalizedAdjacency(const Csr& train);

  std::size_t n_users() const { return by_user_.n_rows; }
  std::size_t n_items() const { return by_user_.n_cols; }

  /// One propagation step over stacked [users; items] rows.
  Matrix apply(const Matrix& stacked) const;

  /// Mean of layers 0..n_layers of repeated propagation.
  Matrix layer_mean(const Matrix& stacked, std::size_t n_layers) const;

  /// Dense (n_users + n_items)^2 form, for checks.
  Matrix dense() const;

 private:
  Csr by_user_;
  Csr by_item_;
  std::vector<double> user_weights_;  // aligned with by_user_.cols
  std::vector<double> item_weights_;  // aligned with by_item_.cols
};

/// Everything a model reads besides its own parameters.
class ModelContext {
 public:
  ModelContext(const Csr& train, const Matrix* fused_features);

  const Csr& train() const { return *train_; }
  const Matrix* fused_features() const { return fused_; }
  const NormalizedAdjacency& adjacency() const { return adjacency_; }

 private:
  const Csr* train_;
  const Matrix* fused_;
  NormalizedAdjacency adjacency_;
};

/// Final user and item representations; score(u, i) = users.row(u) . items.row(i).
struct Representations {
  Matrix users;
  Matrix items;
};

/// The two-operation contract every model implements.
class Recommender {
 public:
  virtual ~Recommender() = default;
  virtual ModelKind kind() const = 0;

  /// Mean BPR loss over the batch plus L2 on touched rows, with exact
  /// gradients for every tensor in the state.
  virtual LossResult calculate_loss(const ModelState& state, const TripleBatch& batch,
                                    const ModelContext& ctx) const = 0;

  virtual Representations represent(const ModelState& state, const ModelContext& ctx) const = 0;

  /// Scores of every item for each listed user. Pure.
  Matrix full_sort_predict(const ModelState& state, std::span<const Index> users,
                           const ModelContext& ctx) const;
};

std::unique_ptr<Recommender> make_recommender(ModelKind kind);

/// Normal(0, 0.1^2) embeddings and Xavier-uniform projections, each tensor
/// drawn from its own stream keyed by (seed, tensor name).
ModelState init_params(ModelKind kind, const ModelDims& dims, std::size_t n_users,
                       std::size_t n_items, std::size_t d_fused, std::uint64_t seed);

Matrix score_all(const ModelState& state, const ModelContext& ctx);
LossResult calculate_loss(const ModelState& state, const TripleBatch& batch, const ModelContext& ctx);
Matrix full_sort_predict(const ModelState& state, std::span<const Index> users, const ModelContext& ctx);

/// -ln sigma(x), evaluated without overflow.
double bpr_pair_loss(double score_gap);

/// Checkpoint directory: one MMF8 file per tensor plus a `meta` file.
void save_checkpoint(const ModelState& state, const std::filesystem::path& dir);
ModelState load_checkpoint(const std::filesystem::path& dir);

}  // namespace mmrec
