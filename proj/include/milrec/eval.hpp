#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "milrec/data.hpp"
#include "milrec/model.hpp"
#include "milrec/train.hpp"

namespace milrec {

inline constexpr std::array<int, 4> kDefaultKs = {1, 20, 50, 100};

struct MetricsReport {
  std::vector<int> ks;
  std::map<int, double> recall;
  std::map<int, double> ndcg;
  std::map<int, double> nov_ndcg;
  std::size_t users_evaluated = 0;
};

// test_items must be sorted; all three throw InvalidArgument on an empty
// test set (the aggregate level skips such users instead).
double recall_at_k(std::span<const std::uint32_t> ranked,
                   std::span<const std::uint32_t> test_items, std::size_t k);
double ndcg_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> test_items,
                 std::size_t k);
// Hits discounted by -ln(nu(item)); the ideal puts the user's most novel
// relevant item at every position (sorted_ideal=true ranks the relevant
// novelties instead). Throws EvalError naming the item when nu(i)=0 is hit.
double nov_ndcg_at_k(std::span<const std::uint32_t> ranked,
                     std::span<const std::uint32_t> test_items, std::span<const double> nu,
                     std::size_t k, bool sorted_ideal = false);

enum class EvalTarget : std::uint8_t {
  test,  // rank against test items, excluding train and valid
  valid  // rank against validation items, excluding train only
};

// Per-user ranking + metric averages over users with a non-empty target set.
// Embarrassingly parallel over users; per-user rows are merged in user order
// so any thread count yields identical sums.
MetricsReport evaluate_params(const ModelParams& params, const SplitDataset& data,
                              std::span<const int> ks, EvalTarget target, bool normalize_input,
                              std::size_t threads);

// Checkpoint-level entry: verifies the checkpoint belongs to this dataset
// (vocabulary hash when available, dimensions otherwise) and evaluates on
// the test split.
MetricsReport evaluate(const Checkpoint& ckpt, const SplitDataset& data, std::span<const int> ks,
                       std::size_t threads = 1);

// NDCG@k against the validation split with train items excluded; the
// training loop's model-selection signal. Unlike evaluate_params it needs no
// popularity statistics, so items that never made it into train are fine.
double validation_ndcg(const ModelParams& params, const SplitDataset& data, std::size_t k,
                       bool normalize_input, std::size_t threads);

inline constexpr std::array<double, 7> kDefaultPrefEdges = {1.0, 0.9, 0.7, 0.5, 0.25, 0.01, 0.0};

struct PreferenceHistogram {
  std::vector<double> edges;    // descending; bucket j is [edges[j+1], edges[j])
  std::vector<double> percent;  // per bucket, averaged across users
  std::size_t users = 0;
};

// Buckets every predicted preference of every user. Values exactly on an
// edge land in the higher bucket; the top bucket is closed. Requires a
// sigmoid decoder (EvalError otherwise).
PreferenceHistogram preference_histogram(const Checkpoint& ckpt, const SplitDataset& data,
                                         std::span<const double> edges = kDefaultPrefEdges,
                                         std::size_t threads = 1);

struct TailReport {
  std::array<double, 3> shares{};  // percent of recommendations per interval
  // cumulative[p][iv]: recommendations in interval iv at positions <= p+1,
  // summed over users
  std::vector<std::array<std::int64_t, 3>> cumulative;
  std::size_t users = 0;
  std::size_t k = 0;
};

// Pools every user's top-k recommendations over the popularity intervals.
TailReport tail_distribution(const Checkpoint& ckpt, const SplitDataset& data,
                             const TailIntervals& intervals, std::size_t k = 200,
                             std::size_t threads = 1);

}  // namespace milrec
