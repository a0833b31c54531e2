#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "milrec/data.hpp"
#include "milrec/losses.hpp"
#include "milrec/model.hpp"
#include "milrec/regularization.hpp"

namespace milrec {

struct TrainConfig {
  ModelKind kind = ModelKind::dae;
  std::size_t latent_dim = 200;
  Activation enc_act = Activation::linear;
  Activation dec_act = Activation::sigmoid;
  LossSpec loss;
  RegSpec reg;
  std::size_t sampling_ratio = 50;  // negatives = ratio * median(|I_u|)
  bool full_catalogue = false;      // score every item instead of sampling
  std::size_t batch_size = 100;
  std::size_t iterations = 120000;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  std::size_t eval_every = 0;  // 0 -> iterations / 20
  std::size_t threads = 1;
  std::string preset;

  void validate() const;
};

// Named baseline configurations. Unknown names raise InvalidArgument.
TrainConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

// Flat "key = value" config text; '#' starts a comment. A preset key is
// applied first, remaining keys override it. Unknown keys raise
// InvalidArgument naming the key.
TrainConfig parse_config_text(std::string_view text);
TrainConfig parse_config_file(const std::string& path);
// Applies a single entry; returns false for unrecognized keys.
bool apply_config_entry(TrainConfig& config, std::string_view key, std::string_view value);
// The full snapshot in config-file syntax (parse_config_text inverse).
std::string config_to_text(const TrainConfig& config);

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
  std::uint64_t vocab_hash = 0;
  std::uint64_t iteration = 0;
  std::size_t n_users = 0;  // catalogue of users the model was trained on
};

struct TrainLogEntry {
  std::size_t iteration;
  double mean_loss;      // mean batch loss (incl. decay) since last entry
  double valid_ndcg100;  // model-selection signal on the validation split
  double wall_ms;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
};

void write_train_log(const TrainLog& log, const std::string& path);

// Glorot-uniform weights, truncated-normal (std 1e-3) biases, drawn from rng
// in the fixed order W, b, W', b'.
ModelParams init_params(const TrainConfig& config, std::size_t n_users, std::size_t n_items,
                        Rng& rng);

// Mini-batch training: per iteration a batch of users is drawn uniformly,
// per-user gradient contributions are computed (in parallel when
// config.threads > 1) and merged in slot order, weight decay is added, one
// Adam step is taken and max-norm clipping applied. The trajectory is a pure
// function of (config, data): rng streams are pre-split per (iteration,
// slot), so any thread count gives bit-identical checkpoints.
std::pair<Checkpoint, TrainLog> train(const TrainConfig& config, const SplitDataset& data);

// Binary checkpoint format, little-endian:
//   magic "MILREC01" | u8 kind | u8 enc act | u8 dec act |
//   u32 D | u32 n_users | u32 n_items |
//   W, b, W', b' as f32 arrays (row-major, in that order) |
//   u64 payload byte count (everything between magic and this field).
// A "<path>.meta" sidecar stores the config snapshot, vocabulary hash and
// iteration count in config-file syntax.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct GradCheckEntry {
  std::string name;
  double max_rel_err;
  bool pass;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<GradCheckEntry> entries;

  bool all_pass() const;
};

// Finite-difference audit of the analytic gradients: a 6-user/12-item/D=3
// model per (loss, model kind) combination, every parameter perturbed with
// h=1e-6. Filters restrict the combinations checked.
GradCheckReport grad_check(double tolerance, std::optional<LossKind> only_loss = {},
                           std::optional<ModelKind> only_model = {});

// max_i |analytic_i - reference_i| / max(|analytic_i|, |reference_i|, 0.01).
// The floor keeps finite-difference round-off on near-zero coordinates from
// dominating the comparison.
double max_rel_err(std::span<const double> analytic, std::span<const double> reference);

}  // namespace milrec
