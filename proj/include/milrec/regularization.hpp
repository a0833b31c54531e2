#pragma once

#include <cstdint>
#include <optional>

#include "milrec/matrix.hpp"
#include "milrec/rng.hpp"

namespace milrec {

struct ModelParams;

enum class DecayMode : std::uint8_t { plain = 0, scaled = 1 };

struct RegSpec {
  double lambda = 0.0;
  DecayMode decay_mode = DecayMode::plain;
  std::optional<double> alpha_enc;  // max-norm strength for encoder columns
  std::optional<double> alpha_dec;  // max-norm strength for decoder rows
  double dropout_q = 0.0;
  // Input handling for the autoencoder path: unit-L2 normalization of the
  // input vector, order relative to corruption, and inverted scaling.
  bool normalize_input = true;
  bool normalize_before_dropout = true;
  bool inverted_dropout = false;

  void validate() const;
};

// penalty = lambda * (|W|^2 + |W'|^2); adds 2*lambda*W (resp. W') into the
// gradient accumulators when given. Biases are never decayed.
double weight_decay(const Matrix& W, const Matrix& Wp, double lambda, Matrix* grad_W,
                    Matrix* grad_Wp);

// penalty = (lambda/D) * (|W|^2/n_users + |W'|^2/n_items), equalizing the
// per-entry pressure on differently shaped factor matrices.
double scaled_weight_decay(const Matrix& W, const Matrix& Wp, double lambda, std::size_t dim,
                           std::size_t n_users, std::size_t n_items, Matrix* grad_W,
                           Matrix* grad_Wp);

// Rescales x to norm n = alpha*sqrt(dim(x)) when |x| exceeds n; direction is
// preserved and a zero vector passes through.
void max_norm_clip(std::span<double> x, double alpha);

void max_norm_columns(Matrix& m, double alpha);
void max_norm_rows(Matrix& m, double alpha);

// Clips every encoder column with alpha_enc and every decoder row with
// alpha_dec (either may be disengaged). Biases untouched.
void apply_max_norm(ModelParams& params, std::optional<double> alpha_enc,
                    std::optional<double> alpha_dec);

// Zeroes each stored coordinate independently with probability q. With
// inverted=true survivors are scaled by 1/(1-q); default off.
void dropout_corrupt(SparseVec& v, double q, Rng& rng, bool inverted = false);

}  // namespace milrec
