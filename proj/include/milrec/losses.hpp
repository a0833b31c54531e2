#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace milrec {

enum class LossKind : std::uint8_t { square_conf, ce_point, ce_pair, multinomial, mil };

const char* to_string(LossKind k);
std::optional<LossKind> loss_kind_from_string(std::string_view s);

// Objective selection plus its hyper-parameters. a is the confidence slope
// C(p) = a*p of the square/cross-entropy losses; A_mi and gamma_mi shape the
// missing-information barrier A_mi*(p_hat-0.5)^(2*gamma_mi); gamma_pos and
// gamma_neg are the positive/negative feedback exponents; eps is the clamp
// margin keeping predictions inside [eps, 1-eps] before logs and powers.
struct LossSpec {
  LossKind kind = LossKind::ce_point;
  double a = 1.0;
  double A_mi = 1e6;
  int gamma_mi = 10;
  int gamma_pos = 1;
  int gamma_neg = 1;
  double eps = 1e-5;
  // Keeps the uncorrected sign of the negative-feedback term
  // (-p_hat^gamma_neg at p=-1), whose minimization pushes p_hat toward 1.
  // Default off: the corrected +p_hat^gamma_neg drives negatives to zero.
  bool paper_negative_sign = false;

  void validate() const;  // throws InvalidArgument
};

// The (A_mi, gamma_mi) grid the barrier was tuned over.
struct MilBarrier {
  double A_mi;
  int gamma_mi;
};
inline constexpr std::array<MilBarrier, 5> kMilBarrierGrid = {
    {{5e1, 2}, {1e3, 4}, {2e4, 6}, {1e6, 10}, {5e9, 15}}};

double clamp_pref(double p_hat, double eps);

// Loss value and d loss / d p_hat. All point losses that clamp internally
// fold the clamp into the derivative (zero outside [eps, 1-eps]).
struct ScalarLoss {
  double loss = 0.0;
  double grad = 0.0;
};

// ((a*p)+1)/2 * (p - p_hat)^2. No clamping: square loss feeds on raw scores.
ScalarLoss square_conf(int p, double p_hat, double a);

// -(a*p)*log(p_hat) - (1-p)*log(1-p_hat) on the clamped prediction.
ScalarLoss ce_point(int p, double p_hat, double a, double eps);

struct PairLoss {
  double loss = 0.0;
  double grad_i = 0.0;  // d loss / d p_hat_i (the positive side)
  double grad_j = 0.0;
};

// -log sigmoid(p_hat_i - p_hat_j) with both predictions clamped first.
PairLoss ce_pair(double p_hat_i, double p_hat_j, double eps);

// Softmax cross-entropy against a (multi-hot) target vector p.
// grad receives (sum_i p_i) * softmax(logits) - p. Throws InvalidArgument on
// an all-zero p or mismatched lengths.
double multinomial_loss(std::span<const double> p, std::span<const double> logits,
                        std::span<double> grad);

// Missing-information loss on p in {-1, 0, 1}:
//   p=1  -> (1 - p_hat)^gamma_pos
//   p=0  -> A_mi * (p_hat - 0.5)^(2*gamma_mi)
//   p=-1 -> p_hat^gamma_neg (sign-corrected; spec.paper_negative_sign flips it)
// evaluated on the clamped prediction.
ScalarLoss mil(int p, double p_hat, const LossSpec& spec);

// Dispatch on spec.kind for the per-item losses (square_conf/ce_point/mil).
ScalarLoss point_loss(const LossSpec& spec, int label, double p_hat);

// Gradient with respect to the prediction vector, restricted to the touched
// items. Indices are unique and match the producer's order.
struct SparseGrad {
  std::vector<std::uint32_t> idx;
  std::vector<double> val;

  void clear() {
    idx.clear();
    val.clear();
  }
};

// Sum of point losses over a target set; grad_out gets one entry per target.
// Labels in {0,1} ({-1,0,1} for mil). Throws InvalidArgument on an empty
// target set or a label outside the loss's domain.
double batch_point_loss(const LossSpec& spec, std::span<const std::uint32_t> targets,
                        std::span<const double> preds, std::span<const std::int8_t> labels,
                        SparseGrad& grad_out);

struct ItemPair {
  std::uint32_t pos;
  std::uint32_t neg;
};

// Sum of ce_pair over pairs; predictions indexed by item. Gradients of items
// appearing in several pairs accumulate; grad_out indices come out sorted.
double batch_pair_loss(const LossSpec& spec, std::span<const ItemPair> pairs,
                       std::span<const double> preds, SparseGrad& grad_out);

}  // namespace milrec
