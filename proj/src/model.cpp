#include "mmrec/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mmrec/error.hpp"
#include "mmrec/matrix_io.hpp"
#include "mmrec/rng.hpp"
#include "mmrec/text.hpp"

namespace mmrec {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::mf_bpr: return "mf_bpr";
    case ModelKind::vbpr_mm: return "vbpr_mm";
    case ModelKind::graph_mm: return "graph_mm";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "mf_bpr") return ModelKind::mf_bpr;
  if (name == "vbpr_mm") return ModelKind::vbpr_mm;
  if (name == "graph_mm") return ModelKind::graph_mm;
  throw InvalidArgument("unknown model kind: " + std::string(name));
}

bool is_multimodal(ModelKind kind) { return kind != ModelKind::mf_bpr; }

const Matrix& ModelState::tensor(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw InvalidArgument("model has no tensor " + name);
  return it->second;
}

Matrix& ModelState::tensor(const std::string& name) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw InvalidArgument("model has no tensor " + name);
  return it->second;
}

// ---------------------------------------------------------------------------
// Graph normalisation

NormalizedAdjacency::NormalizedAdjacency(const Csr& train)
    : by_user_(train), by_item_(train.transposed()) {
  auto inv_sqrt = [](std::size_t deg) { return deg == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(deg)); };
  user_weights_.resize(by_user_.nnz());
  for (std::size_t u = 0; u < by_user_.n_rows; ++u) {
    const double du = inv_sqrt(by_user_.row_size(u));
    for (std::size_t k = by_user_.offsets[u]; k < by_user_.offsets[u + 1]; ++k)
      user_weights_[k] = du * inv_sqrt(by_item_.row_size(by_user_.cols[k]));
  }
  item_weights_.resize(by_item_.nnz());
  for (std::size_t i = 0; i < by_item_.n_rows; ++i) {
    const double di = inv_sqrt(by_item_.row_size(i));
    for (std::size_t k = by_item_.offsets[i]; k < by_item_.offsets[i + 1]; ++k)
      item_weights_[k] = di * inv_sqrt(by_user_.row_size(by_item_.cols[k]));
  }
}

Matrix NormalizedAdjacency::apply(const Matrix& stacked) const {
  const auto nu = static_cast<Eigen::Index>(n_users());
  const auto ni = static_cast<Eigen::Index>(n_items());
  if (stacked.rows() != nu + ni) throw DimMismatch("propagation input has wrong row count");
  Matrix out = Matrix::Zero(stacked.rows(), stacked.cols());
  for (Eigen::Index u = 0; u < nu; ++u)
    for (std::size_t k = by_user_.offsets[u]; k < by_user_.offsets[u + 1]; ++k)
      out.row(u) += user_weights_[k] * stacked.row(nu + by_user_.cols[k]);
  for (Eigen::Index i = 0; i < ni; ++i)
    for (std::size_t k = by_item_.offsets[i]; k < by_item_.offsets[i + 1]; ++k)
      out.row(nu + i) += item_weights_[k] * stacked.row(by_item_.cols[k]);
  return out;
}

Matrix NormalizedAdjacency::layer_mean(const Matrix& stacked, std::size_t n_layers) const {
  Matrix sum = stacked;
  Matrix layer = stacked;
  for (std::size_t l = 0; l < n_layers; ++l) {
    layer = apply(layer);
    sum += layer;
  }
  return sum / static_cast<double>(n_layers + 1);
}

Matrix NormalizedAdjacency::dense() const {
  const auto nu = static_cast<Eigen::Index>(n_users());
  const auto n = nu + static_cast<Eigen::Index>(n_items());
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index u = 0; u < nu; ++u)
    for (std::size_t k = by_user_.offsets[u]; k < by_user_.offsets[u + 1]; ++k)
      a(u, nu + by_user_.cols[k]) = user_weights_[k];
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n_items()); ++i)
    for (std::size_t k = by_item_.offsets[i]; k < by_item_.offsets[i + 1]; ++k)
      a(nu + i, by_item_.cols[k]) = item_weights_[k];
  return a;
}

ModelContext::ModelContext(const Csr& train, const Matrix* fused_features)
    : train_(&train), fused_(fused_features), adjacency_(train) {}

// ---------------------------------------------------------------------------
// Shared pieces

double bpr_pair_loss(double gap) {
  // softplus(-gap)
  return gap > 0.0 ? std::log1p(std::exp(-gap)) : -gap + std::log1p(std::exp(gap));
}

namespace {

// d/dgap of -ln sigma(gap) = -sigma(-gap)
double bpr_pair_slope(double gap) {
  return gap > 0.0 ? -std::exp(-gap) / (1.0 + std::exp(-gap)) : -1.0 / (1.0 + std::exp(gap));
}

const Matrix& require_features(const ModelState& state, const ModelContext& ctx) {
  const Matrix* f = ctx.fused_features();
  if (f == nullptr) throw MissingFeatures(std::string(to_string(state.kind)) + " needs fused item features");
  if (static_cast<std::size_t>(f->rows()) != state.n_items ||
      static_cast<std::size_t>(f->cols()) != state.d_fused)
    throw DimMismatch("fused features do not match the model's item count or d_fused");
  return *f;
}

void check_batch(const ModelState& state, const TripleBatch& batch) {
  if (batch.triples.empty()) throw EmptyBatch("calculate_loss called with an empty batch");
  for (const auto& t : batch.triples)
    if (t.user >= state.n_users || t.pos_item >= state.n_items || t.neg_item >= state.n_items)
      throw IndexOutOfRange("triple index out of range");
}

GradientSet zero_grads(const ModelState& state) {
  GradientSet g;
  for (const auto& [name, t] : state.tensors) g.tensors.emplace(name, Matrix::Zero(t.rows(), t.cols()));
  return g;
}

class MfBpr final : public Recommender {
 public:
  ModelKind kind() const override { return ModelKind::mf_bpr; }

  LossResult calculate_loss(const ModelState& state, const TripleBatch& batch,
                            const ModelContext&) const override {
    check_batch(state, batch);
    const Matrix& P = state.tensor("user_emb");
    const Matrix& Q = state.tensor("item_emb");
    LossResult out{0.0, zero_grads(state)};
    Matrix& dP = out.grads.tensors.at("user_emb");
    Matrix& dQ = out.grads.tensors.at("item_emb");
    const double inv_b = 1.0 / static_cast<double>(batch.triples.size());
    const double lambda = state.dims.lambda_reg;
    for (const auto& t : batch.triples) {
      const auto pu = P.row(t.user);
      const auto qi = Q.row(t.pos_item);
      const auto qj = Q.row(t.neg_item);
      const double gap = pu.dot(qi) - pu.dot(qj);
      out.loss += inv_b * (bpr_pair_loss(gap) + lambda * (pu.squaredNorm() + qi.squaredNorm() + qj.squaredNorm()));
      const double g = inv_b * bpr_pair_slope(gap);
      dP.row(t.user) += g * (qi - qj) + 2.0 * lambda * inv_b * pu;
      dQ.row(t.pos_item) += g * pu + 2.0 * lambda * inv_b * qi;
      dQ.row(t.neg_item) += -g * pu + 2.0 * lambda * inv_b * qj;
    }
    return out;
  }

  Representations represent(const ModelState& state, const ModelContext&) const override {
    return {state.tensor("user_emb"), state.tensor("item_emb")};
  }
};

class VbprMm final : public Recommender {
 public:
  ModelKind kind() const override { return ModelKind::vbpr_mm; }

  LossResult calculate_loss(const ModelState& state, const TripleBatch& batch,
                            const ModelContext& ctx) const override {
    check_batch(state, batch);
    const Matrix& X = require_features(state, ctx);
    const Matrix& P = state.tensor("user_emb");
    const Matrix& Q = state.tensor("item_emb");
    const Matrix& T = state.tensor("user_mod_emb");
    const Matrix& W = state.tensor("proj");
    LossResult out{0.0, zero_grads(state)};
    Matrix& dP = out.grads.tensors.at("user_emb");
    Matrix& dQ = out.grads.tensors.at("item_emb");
    Matrix& dT = out.grads.tensors.at("user_mod_emb");
    Matrix& dW = out.grads.tensors.at("proj");
    const double inv_b = 1.0 / static_cast<double>(batch.triples.size());
    const double lambda = state.dims.lambda_reg;
    for (const auto& t : batch.triples) {
      const auto pu = P.row(t.user);
      const auto tu = T.row(t.user);
      const auto qi = Q.row(t.pos_item);
      const auto qj = Q.row(t.neg_item);
      const Eigen::RowVectorXd fdiff = X.row(t.pos_item) - X.row(t.neg_item);
      const Eigen::RowVectorXd vdiff = fdiff * W;
      const double gap = pu.dot(qi - qj) + tu.dot(vdiff);
      out.loss += inv_b * (bpr_pair_loss(gap) + lambda * (pu.squaredNorm() + tu.squaredNorm() +
                                                          qi.squaredNorm() + qj.squaredNorm()));
      const double g = inv_b * bpr_pair_slope(gap);
      const double r = 2.0 * lambda * inv_b;
      dP.row(t.user) += g * (qi - qj) + r * pu;
      dT.row(t.user) += g * vdiff + r * tu;
      dQ.row(t.pos_item) += g * pu + r * qi;
      dQ.row(t.neg_item) += -g * pu + r * qj;
      dW.noalias() += g * fdiff.transpose() * tu;
    }
    return out;
  }

  Representations represent(const ModelState& state, const ModelContext& ctx) const override {
    const Matrix& X = require_features(state, ctx);
    const Matrix& P = state.tensor("user_emb");
    const Matrix& T = state.tensor("user_mod_emb");
    const Matrix& Q = state.tensor("item_emb");
    Representations r;
    r.users.resize(P.rows(), P.cols() + T.cols());
    r.users << P, T;
    r.items.resize(Q.rows(), Q.cols() + T.cols());
    r.items << Q, X * state.tensor("proj");
    return r;
  }
};

class GraphMm final : public Recommender {
 public:
  ModelKind kind() const override { return ModelKind::graph_mm; }

  LossResult calculate_loss(const ModelState& state, const TripleBatch& batch,
                            const ModelContext& ctx) const override {
    check_batch(state, batch);
    const Matrix& X = require_features(state, ctx);
    const Matrix& P = state.tensor("user_emb");
    const Matrix& Q = state.tensor("item_emb");
    const auto nu = static_cast<Eigen::Index>(state.n_users);
    const auto ni = static_cast<Eigen::Index>(state.n_items);
    const Matrix final_emb = ctx.adjacency().layer_mean(ego(state, X), state.dims.n_layers);

    LossResult out{0.0, zero_grads(state)};
    Matrix d_final = Matrix::Zero(final_emb.rows(), final_emb.cols());
    const double inv_b = 1.0 / static_cast<double>(batch.triples.size());
    const double lambda = state.dims.lambda_reg;
    const double r = 2.0 * lambda * inv_b;
    Matrix& dP = out.grads.tensors.at("user_emb");
    Matrix& dQ = out.grads.tensors.at("item_emb");
    for (const auto& t : batch.triples) {
      const auto fu = final_emb.row(t.user);
      const auto fi = final_emb.row(nu + t.pos_item);
      const auto fj = final_emb.row(nu + t.neg_item);
      const double gap = fu.dot(fi) - fu.dot(fj);
      out.loss += inv_b * (bpr_pair_loss(gap) + lambda * (P.row(t.user).squaredNorm() +
                                                          Q.row(t.pos_item).squaredNorm() +
                                                          Q.row(t.neg_item).squaredNorm()));
      const double g = inv_b * bpr_pair_slope(gap);
      d_final.row(t.user) += g * (fi - fj);
      d_final.row(nu + t.pos_item) += g * fu;
      d_final.row(nu + t.neg_item) -= g * fu;
      dP.row(t.user) += r * P.row(t.user);
      dQ.row(t.pos_item) += r * Q.row(t.pos_item);
      dQ.row(t.neg_item) += r * Q.row(t.neg_item);
    }
    // The layer-mean operator is a polynomial in a symmetric matrix, hence
    // self-adjoint: the backward pass is the same propagation.
    const Matrix d_ego = ctx.adjacency().layer_mean(d_final, state.dims.n_layers);
    dP += d_ego.topRows(nu);
    dQ += d_ego.bottomRows(ni);
    out.grads.tensors.at("mod_proj").noalias() += X.transpose() * d_ego.bottomRows(ni);
    return out;
  }

  Representations represent(const ModelState& state, const ModelContext& ctx) const override {
    const Matrix& X = require_features(state, ctx);
    const Matrix final_emb = ctx.adjacency().layer_mean(ego(state, X), state.dims.n_layers);
    const auto nu = static_cast<Eigen::Index>(state.n_users);
    return {final_emb.topRows(nu), final_emb.bottomRows(final_emb.rows() - nu)};
  }

 private:
  static Matrix ego(const ModelState& state, const Matrix& X) {
    const Matrix& P = state.tensor("user_emb");
    const Matrix& Q = state.tensor("item_emb");
    Matrix e(P.rows() + Q.rows(), P.cols());
    e.topRows(P.rows()) = P;
    e.bottomRows(Q.rows()) = Q + X * state.tensor("mod_proj");
    return e;
  }
};

}  // namespace

Matrix Recommender::full_sort_predict(const ModelState& state, std::span<const Index> users,
                                      const ModelContext& ctx) const {
  for (Index u : users)
    if (u >= state.n_users) throw IndexOutOfRange("user index " + std::to_string(u) + " out of range");
  if (users.empty()) return Matrix(0, static_cast<Eigen::Index>(state.n_items));
  const auto reps = represent(state, ctx);
  Matrix picked(static_cast<Eigen::Index>(users.size()), reps.users.cols());
  for (std::size_t k = 0; k < users.size(); ++k) picked.row(static_cast<Eigen::Index>(k)) = reps.users.row(users[k]);
  return picked * reps.items.transpose();
}

std::unique_ptr<Recommender> make_recommender(ModelKind kind) {
  switch (kind) {
    case ModelKind::mf_bpr: return std::make_unique<MfBpr>();
    case ModelKind::vbpr_mm: return std::make_unique<VbprMm>();
    case ModelKind::graph_mm: return std::make_unique<GraphMm>();
  }
  throw InvalidArgument("unknown model kind");
}

namespace {

Matrix normal_tensor(std::uint64_t seed, const std::string& name, std::size_t rows, std::size_t cols) {
  Rng rng(seed, "init." + name);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = 0.1 * rng.normal();
  return m;
}

Matrix xavier_tensor(std::uint64_t seed, const std::string& name, std::size_t fan_in, std::size_t fan_out) {
  Rng rng(seed, "init." + name);
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = (2.0 * rng.uniform01() - 1.0) * bound;
  return m;
}

}  // namespace

ModelState init_params(ModelKind kind, const ModelDims& dims, std::size_t n_users, std::size_t n_items,
                       std::size_t d_fused, std::uint64_t seed) {
  if (dims.d == 0) throw InvalidArgument("embedding dimension must be positive");
  if (!(dims.lambda_reg >= 0.0)) throw InvalidArgument("lambda_reg must be >= 0");
  ModelState s;
  s.kind = kind;
  s.dims = dims;
  s.seed = seed;
  s.n_users = n_users;
  s.n_items = n_items;
  s.d_fused = is_multimodal(kind) ? d_fused : 0;
  if (is_multimodal(kind) && d_fused == 0) throw MissingFeatures("multimodal model needs d_fused > 0");
  s.tensors["user_emb"] = normal_tensor(seed, "user_emb", n_users, dims.d);
  s.tensors["item_emb"] = normal_tensor(seed, "item_emb", n_items, dims.d);
  if (kind == ModelKind::vbpr_mm) {
    if (dims.d_p == 0) throw InvalidArgument("d_p must be positive");
    s.tensors["user_mod_emb"] = normal_tensor(seed, "user_mod_emb", n_users, dims.d_p);
    s.tensors["proj"] = xavier_tensor(seed, "proj", d_fused, dims.d_p);
  } else if (kind == ModelKind::graph_mm) {
    s.tensors["mod_proj"] = xavier_tensor(seed, "mod_proj", d_fused, dims.d);
  }
  if (kind != ModelKind::vbpr_mm) s.dims.d_p = 0;
  if (kind != ModelKind::graph_mm) s.dims.n_layers = 0;
  return s;
}

Matrix score_all(const ModelState& state, const ModelContext& ctx) {
  const auto reps = make_recommender(state.kind)->represent(state, ctx);
  return reps.users * reps.items.transpose();
}

LossResult calculate_loss(const ModelState& state, const TripleBatch& batch, const ModelContext& ctx) {
  return make_recommender(state.kind)->calculate_loss(state, batch, ctx);
}

Matrix full_sort_predict(const ModelState& state, std::span<const Index> users, const ModelContext& ctx) {
  return make_recommender(state.kind)->full_sort_predict(state, users, ctx);
}

void save_checkpoint(const ModelState& state, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream meta(dir / "meta", std::ios::binary);
  if (!meta) throw IoError("cannot write " + (dir / "meta").string());
  char lambda[64];
  std::snprintf(lambda, sizeof lambda, "%.17g", state.dims.lambda_reg);
  meta << "kind=" << to_string(state.kind) << '\n'
       << "d=" << state.dims.d << '\n'
       << "d_p=" << state.dims.d_p << '\n'
       << "n_layers=" << state.dims.n_layers << '\n'
       << "lambda_reg=" << lambda << '\n'
       << "seed=" << state.seed << '\n'
       << "n_users=" << state.n_users << '\n'
       << "n_items=" << state.n_items << '\n'
       << "d_fused=" << state.d_fused << '\n';
  for (const auto& [name, t] : state.tensors) write_matrix_file(dir / (name + ".mmf8"), t, MatrixPrecision::f64);
}

ModelState load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream meta(dir / "meta");
  if (!meta) throw IoError("cannot read " + (dir / "meta").string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    strip_cr(line);
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError("checkpoint meta lacks " + key);
    return it->second;
  };
  auto get_u = [&](const std::string& key) {
    const auto v = parse_uint64(get(key));
    if (!v) throw IoError("checkpoint meta: bad " + key);
    return *v;
  };
  ModelState s;
  s.kind = model_kind_from_string(get("kind"));
  s.dims.d = get_u("d");
  s.dims.d_p = get_u("d_p");
  s.dims.n_layers = get_u("n_layers");
  const auto lambda = parse_double(get("lambda_reg"));
  if (!lambda) throw IoError("checkpoint meta: bad lambda_reg");
  s.dims.lambda_reg = *lambda;
  s.seed = get_u("seed");
  s.n_users = get_u("n_users");
  s.n_items = get_u("n_items");
  s.d_fused = get_u("d_fused");
  std::vector<std::string> names{"user_emb", "item_emb"};
  if (s.kind == ModelKind::vbpr_mm) names.insert(names.end(), {"user_mod_emb", "proj"});
  if (s.kind == ModelKind::graph_mm) names.emplace_back("mod_proj");
  for (const auto& name : names) s.tensors[name] = read_matrix_file(dir / (name + ".mmf8"));
  return s;
}

}  // namespace mmrec
