#include "milrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "milrec/error.hpp"
#include "milrec/regularization.hpp"

namespace milrec {

const char* to_string(ModelKind k) { return k == ModelKind::dae ? "dae" : "mf"; }

std::optional<ModelKind> model_kind_from_string(std::string_view s) {
  if (s == "dae") return ModelKind::dae;
  if (s == "mf") return ModelKind::mf;
  return std::nullopt;
}

void ModelParams::validate() const {
  if (W.rows == 0 || W.cols == 0 || Wp.rows == 0 || Wp.cols == 0)
    throw InvalidArgument("model: empty weight matrix");
  if (W.rows != Wp.cols) throw InvalidArgument("model: encoder/decoder latent dim mismatch");
  if (b.size() != W.rows) throw InvalidArgument("model: encoder bias length mismatch");
  if (bp.size() != Wp.rows) throw InvalidArgument("model: decoder bias length mismatch");
  if (kind == ModelKind::dae && W.cols != Wp.rows)
    throw InvalidArgument("model: dae input and output catalogues differ");
}

void encode_sparse(const ModelParams& params, const SparseVec& input, Vector& hidden_pre,
                   Vector& hidden) {
  const std::size_t dim = params.latent_dim();
  hidden_pre.assign(params.b.begin(), params.b.end());
  for (std::size_t k = 0; k < input.idx.size(); ++k) {
    std::uint32_t col = input.idx[k];
    if (col >= params.W.cols) throw InvalidArgument("forward: input index out of range");
    double w = input.val[k];
    const double* wcol = params.W.data.data() + col;
    for (std::size_t d = 0; d < dim; ++d) hidden_pre[d] += w * wcol[d * params.W.cols];
  }
  hidden.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) hidden[d] = activate(params.enc_act, hidden_pre[d]);
}

double decode_pre_at(const ModelParams& params, const Vector& hidden, std::uint32_t item) {
  const std::size_t dim = params.latent_dim();
  const double* wrow = params.Wp.data.data() + item * dim;
  double acc = params.bp[item];
  for (std::size_t d = 0; d < dim; ++d) acc += wrow[d] * hidden[d];
  return acc;
}

void forward_sparse(const ModelParams& params, const SparseVec& input, Vector& p_hat,
                    ForwardCache& cache) {
  const std::size_t n_out = params.n_items();
  cache.input = input;
  encode_sparse(params, input, cache.hidden_pre, cache.hidden);
  cache.output_pre.resize(n_out);
  p_hat.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    double acc = decode_pre_at(params, cache.hidden, static_cast<std::uint32_t>(i));
    cache.output_pre[i] = acc;
    p_hat[i] = activate(params.dec_act, acc);
  }
}

void normalize_unit(SparseVec& v) {
  double sq = 0.0;
  for (double x : v.val) sq += x * x;
  if (sq > 0.0) {
    double inv = 1.0 / std::sqrt(sq);
    for (double& x : v.val) x *= inv;
  }
}

void forward_dae(const ModelParams& params, const SparseVec& v_u, double noise_q, Rng& rng,
                 Vector& p_hat, ForwardCache& cache, bool normalize, bool normalize_first,
                 bool inverted_dropout) {
  if (params.kind != ModelKind::dae) throw InvalidArgument("forward_dae: model is not a dae");
  SparseVec x = v_u;
  if (normalize && normalize_first) normalize_unit(x);
  dropout_corrupt(x, noise_q, rng, inverted_dropout);
  if (normalize && !normalize_first) normalize_unit(x);
  forward_sparse(params, x, p_hat, cache);
}

void forward_mf(const ModelParams& params, std::size_t u, Vector& p_hat, ForwardCache& cache) {
  if (params.kind != ModelKind::mf) throw InvalidArgument("forward_mf: model is not a mf");
  if (u >= params.W.cols) throw InvalidArgument("forward_mf: user index out of range");
  SparseVec onehot;
  onehot.idx.push_back(static_cast<std::uint32_t>(u));
  onehot.val.push_back(1.0);
  forward_sparse(params, onehot, p_hat, cache);
}

void GradBuffers::init_like(const ModelParams& params) {
  W = Matrix(params.W.rows, params.W.cols);
  b.assign(params.b.size(), 0.0);
  Wp = Matrix(params.Wp.rows, params.Wp.cols);
  bp.assign(params.bp.size(), 0.0);
}

void GradBuffers::zero() {
  W.fill(0.0);
  b.assign(b.size(), 0.0);
  Wp.fill(0.0);
  bp.assign(bp.size(), 0.0);
}

UserGradContrib backward_contrib_at(const ModelParams& params, const SparseVec& input,
                                    const Vector& hidden_pre, const Vector& hidden,
                                    const SparseGrad& output_grad,
                                    std::span<const double> out_pre) {
  const std::size_t dim = params.latent_dim();
  UserGradContrib c;
  c.out_idx = output_grad.idx;
  c.delta_out.resize(output_grad.idx.size());
  c.hidden = hidden;
  c.input = input;

  Vector grad_hidden(dim, 0.0);
  for (std::size_t k = 0; k < output_grad.idx.size(); ++k) {
    std::uint32_t row = output_grad.idx[k];
    if (row >= params.Wp.rows) throw InvalidArgument("backward: target index out of range");
    double delta = output_grad.val[k] * activate_grad(params.dec_act, out_pre[k]);
    c.delta_out[k] = delta;
    const double* wrow = params.Wp.data.data() + row * dim;
    for (std::size_t d = 0; d < dim; ++d) grad_hidden[d] += delta * wrow[d];
  }
  c.delta_hidden.resize(dim);
  for (std::size_t d = 0; d < dim; ++d)
    c.delta_hidden[d] = grad_hidden[d] * activate_grad(params.enc_act, hidden_pre[d]);
  return c;
}

UserGradContrib backward_contrib(const ModelParams& params, const ForwardCache& cache,
                                 const SparseGrad& output_grad) {
  Vector out_pre(output_grad.idx.size());
  for (std::size_t k = 0; k < output_grad.idx.size(); ++k) {
    std::uint32_t row = output_grad.idx[k];
    if (row >= params.Wp.rows) throw InvalidArgument("backward: target index out of range");
    out_pre[k] = cache.output_pre[row];
  }
  return backward_contrib_at(params, cache.input, cache.hidden_pre, cache.hidden, output_grad,
                             out_pre);
}

void apply_contrib(const UserGradContrib& contrib, double scale, GradBuffers& grads) {
  const std::size_t dim = contrib.hidden.size();
  for (std::size_t k = 0; k < contrib.out_idx.size(); ++k) {
    double delta = scale * contrib.delta_out[k];
    if (delta == 0.0) continue;
    double* grow = grads.Wp.data.data() + contrib.out_idx[k] * dim;
    for (std::size_t d = 0; d < dim; ++d) grow[d] += delta * contrib.hidden[d];
    grads.bp[contrib.out_idx[k]] += delta;
  }
  for (std::size_t d = 0; d < dim; ++d) grads.b[d] += scale * contrib.delta_hidden[d];
  for (std::size_t k = 0; k < contrib.input.idx.size(); ++k) {
    double w = scale * contrib.input.val[k];
    if (w == 0.0) continue;
    double* gcol = grads.W.data.data() + contrib.input.idx[k];
    for (std::size_t d = 0; d < dim; ++d) gcol[d * grads.W.cols] += w * contrib.delta_hidden[d];
  }
}

void backward(const ModelParams& params, const ForwardCache& cache, const SparseGrad& output_grad,
              GradBuffers& grads) {
  if (!grads.W.same_shape(params.W) || !grads.Wp.same_shape(params.Wp))
    throw InvalidArgument("backward: gradient buffer shape mismatch");
  apply_contrib(backward_contrib(params, cache, output_grad), 1.0, grads);
}

std::vector<std::uint32_t> sample_targets(std::span<const std::uint32_t> observed,
                                          std::size_t n_items, const SamplingSpec& spec,
                                          Rng& rng) {
  if (observed.empty()) throw InvalidArgument("sample_targets: empty observed set");
  std::vector<std::uint32_t> targets(observed.begin(), observed.end());
  const std::size_t complement = n_items - observed.size();
  const std::size_t want = std::min(spec.sample_size(), complement);
  if (want == 0) return targets;

  auto is_observed = [&observed](std::uint32_t i) {
    return std::binary_search(observed.begin(), observed.end(), i);
  };
  if (want * 2 >= complement) {
    // dense case: partial Fisher-Yates over the explicit complement
    std::vector<std::uint32_t> pool;
    pool.reserve(complement);
    for (std::uint32_t i = 0; i < n_items; ++i)
      if (!is_observed(i)) pool.push_back(i);
    for (std::size_t k = 0; k < want; ++k) {
      std::size_t j = k + static_cast<std::size_t>(rng.next_below(pool.size() - k));
      std::swap(pool[k], pool[j]);
      targets.push_back(pool[k]);
    }
  } else {
    std::unordered_set<std::uint32_t> taken;
    taken.reserve(want * 2);
    while (taken.size() < want) {
      std::uint32_t i = static_cast<std::uint32_t>(rng.next_below(n_items));
      if (is_observed(i)) continue;
      if (taken.insert(i).second) targets.push_back(i);
    }
  }
  return targets;
}

std::vector<ItemPair> sample_pairs(std::span<const std::uint32_t> observed, std::size_t n_items,
                                   const SamplingSpec& spec, Rng& rng) {
  if (observed.empty()) throw InvalidArgument("sample_pairs: empty observed set");
  if (observed.size() >= n_items)
    throw InvalidArgument("sample_pairs: no unobserved items to pair against");
  auto is_observed = [&observed](std::uint32_t i) {
    return std::binary_search(observed.begin(), observed.end(), i);
  };
  std::vector<ItemPair> pairs;
  pairs.reserve(spec.sample_size());
  for (std::size_t k = 0; k < spec.sample_size(); ++k) {
    std::uint32_t pos = observed[rng.next_below(observed.size())];
    std::uint32_t neg;
    do {
      neg = static_cast<std::uint32_t>(rng.next_below(n_items));
    } while (is_observed(neg));
    pairs.push_back({pos, neg});
  }
  return pairs;
}

std::vector<ScoredItem> topk_from_scores(const Vector& scores,
                                         std::span<const std::uint32_t> exclude, std::size_t k) {
  if (k == 0) throw InvalidArgument("predict_topk: k must be >= 1");
  std::vector<ScoredItem> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::binary_search(exclude.begin(), exclude.end(), static_cast<std::uint32_t>(i)))
      continue;
    candidates.push_back({static_cast<std::uint32_t>(i), scores[i]});
  }
  auto better = [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  };
  std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(), better);
  candidates.resize(take);
  return candidates;
}

std::vector<ScoredItem> predict_topk(const ModelParams& params, const SparseVec& v_u,
                                     std::span<const std::uint32_t> exclude, std::size_t k,
                                     bool normalize) {
  Vector p_hat;
  ForwardCache cache;
  Rng no_noise(0);
  forward_dae(params, v_u, 0.0, no_noise, p_hat, cache, normalize);
  return topk_from_scores(p_hat, exclude, k);
}

std::vector<ScoredItem> predict_topk(const ModelParams& params, std::size_t u,
                                     std::span<const std::uint32_t> exclude, std::size_t k) {
  Vector p_hat;
  ForwardCache cache;
  forward_mf(params, u, p_hat, cache);
  return topk_from_scores(p_hat, exclude, k);
}

}  // namespace milrec
