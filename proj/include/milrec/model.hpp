#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "milrec/losses.hpp"
#include "milrec/matrix.hpp"
#include "milrec/numeric.hpp"
#include "milrec/rng.hpp"

namespace milrec {

enum class ModelKind : std::uint8_t { dae = 0, mf = 1 };

const char* to_string(ModelKind k);
std::optional<ModelKind> model_kind_from_string(std::string_view s);

// Single-hidden-layer model. The encoder consumes an item-indicator vector
// (dae, W is D x n_items) or a user one-hot (mf, W is D x n_users); the
// decoder always emits one score per item (Wp is n_items x D).
struct ModelParams {
  ModelKind kind = ModelKind::dae;
  Matrix W;
  Vector b;
  Matrix Wp;
  Vector bp;
  Activation enc_act = Activation::linear;
  Activation dec_act = Activation::sigmoid;

  std::size_t latent_dim() const { return W.rows; }
  std::size_t n_inputs() const { return W.cols; }
  std::size_t n_items() const { return Wp.rows; }

  void validate() const;  // throws InvalidArgument on inconsistent shapes
};

struct ForwardCache {
  SparseVec input;      // the (normalized, corrupted) input actually encoded
  Vector hidden_pre;    // D
  Vector hidden;        // D
  Vector output_pre;    // n_items
};

// Scales a nonzero vector to unit L2 norm; zero vectors pass through.
void normalize_unit(SparseVec& v);

// hidden = s(W x + b) exploiting input sparsity. An empty input is a valid
// cold start (hidden = s(b)).
void encode_sparse(const ModelParams& params, const SparseVec& input, Vector& hidden_pre,
                   Vector& hidden);

// Pre-activation decoder output for a single item row.
double decode_pre_at(const ModelParams& params, const Vector& hidden, std::uint32_t item);

// Encoder/decoder pass on an explicit sparse input; no normalization, no
// corruption.
void forward_sparse(const ModelParams& params, const SparseVec& input, Vector& p_hat,
                    ForwardCache& cache);

// Autoencoder pass: optional unit-L2 input normalization, dropout corruption
// with probability noise_q, then encode/decode. normalize_first selects
// normalization before corruption.
void forward_dae(const ModelParams& params, const SparseVec& v_u, double noise_q, Rng& rng,
                 Vector& p_hat, ForwardCache& cache, bool normalize = true,
                 bool normalize_first = true, bool inverted_dropout = false);

// Factorization pass: user one-hot input, so the hidden layer is just the
// u-th encoder column plus bias.
void forward_mf(const ModelParams& params, std::size_t u, Vector& p_hat, ForwardCache& cache);

struct GradBuffers {
  Matrix W;
  Vector b;
  Matrix Wp;
  Vector bp;

  void init_like(const ModelParams& params);
  void zero();
};

// Per-user backward contribution split from its application so batch members
// can be computed in parallel and merged in a fixed order.
struct UserGradContrib {
  std::vector<std::uint32_t> out_idx;  // touched decoder rows
  std::vector<double> delta_out;       // d loss / d output_pre per touched row
  Vector hidden;                       // h of this pass
  Vector delta_hidden;                 // d loss / d hidden_pre
  SparseVec input;                     // encoder columns touched
  double loss = 0.0;
};

// output_grad holds d loss / d p_hat on the touched items only.
UserGradContrib backward_contrib(const ModelParams& params, const ForwardCache& cache,
                                 const SparseGrad& output_grad);

// Same, from an explicitly restricted forward pass: out_pre holds the
// decoder pre-activations aligned with output_grad.idx.
UserGradContrib backward_contrib_at(const ModelParams& params, const SparseVec& input,
                                    const Vector& hidden_pre, const Vector& hidden,
                                    const SparseGrad& output_grad,
                                    std::span<const double> out_pre);

void apply_contrib(const UserGradContrib& contrib, double scale, GradBuffers& grads);

// backward = backward_contrib + apply_contrib with scale 1; accumulates into
// grads. Gradients touch only the decoder rows in output_grad and the
// encoder columns active in the cached input (plus both bias vectors).
void backward(const ModelParams& params, const ForwardCache& cache, const SparseGrad& output_grad,
              GradBuffers& grads);

// Target-set sizing: |sampled negatives| = ratio * base, where base is the
// median number of adopted items per training user.
struct SamplingSpec {
  std::size_t ratio = 50;
  std::size_t base = 1;

  std::size_t sample_size() const { return ratio * base; }
};

// I_u followed by min(ratio*base, n_items - |I_u|) distinct unobserved items.
std::vector<std::uint32_t> sample_targets(std::span<const std::uint32_t> observed,
                                          std::size_t n_items, const SamplingSpec& spec, Rng& rng);

// ratio*base (positive, unobserved) pairs drawn uniformly with replacement.
// Throws InvalidArgument when every item is observed.
std::vector<ItemPair> sample_pairs(std::span<const std::uint32_t> observed, std::size_t n_items,
                                   const SamplingSpec& spec, Rng& rng);

struct ScoredItem {
  std::uint32_t item;
  double score;
};

// Noise-free scoring, excluded items removed, descending score with ties
// broken by ascending item index; at most k entries. exclude must be sorted.
std::vector<ScoredItem> predict_topk(const ModelParams& params, const SparseVec& v_u,
                                     std::span<const std::uint32_t> exclude, std::size_t k,
                                     bool normalize = true);
std::vector<ScoredItem> predict_topk(const ModelParams& params, std::size_t u,
                                     std::span<const std::uint32_t> exclude, std::size_t k);
std::vector<ScoredItem> topk_from_scores(const Vector& scores,
                                         std::span<const std::uint32_t> exclude, std::size_t k);

}  // namespace milrec
