#include "milrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "milrec/error.hpp"

namespace milrec {

namespace {

bool contains(std::span<const std::uint32_t> sorted, std::uint32_t x) {
  return std::binary_search(sorted.begin(), sorted.end(), x);
}

double log2_discount(std::size_t rank1) {  // rank1 is 1-based
  return std::log2(static_cast<double>(rank1 + 1));
}

double neg_log_nu(std::span<const double> nu, std::uint32_t item) {
  double v = nu[item];
  if (!(v > 0.0))
    throw EvalError("novelty undefined: item " + std::to_string(item) +
                    " has zero training frequency");
  return -std::log(v);
}

}  // namespace

double recall_at_k(std::span<const std::uint32_t> ranked,
                   std::span<const std::uint32_t> test_items, std::size_t k) {
  if (test_items.empty()) throw InvalidArgument("recall_at_k: empty test set");
  if (k == 0) throw InvalidArgument("recall_at_k: k must be >= 1");
  std::size_t hits = 0;
  std::size_t upto = std::min(k, ranked.size());
  for (std::size_t s = 0; s < upto; ++s)
    if (contains(test_items, ranked[s])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(std::min(k, test_items.size()));
}

double ndcg_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> test_items,
                 std::size_t k) {
  if (test_items.empty()) throw InvalidArgument("ndcg_at_k: empty test set");
  if (k == 0) throw InvalidArgument("ndcg_at_k: k must be >= 1");
  double dcg = 0.0;
  std::size_t upto = std::min(k, ranked.size());
  for (std::size_t s = 0; s < upto; ++s)
    if (contains(test_items, ranked[s])) dcg += 1.0 / log2_discount(s + 1);
  double idcg = 0.0;
  std::size_t ideal = std::min(k, test_items.size());
  for (std::size_t s = 1; s <= ideal; ++s) idcg += 1.0 / log2_discount(s);
  return dcg / idcg;
}

double nov_ndcg_at_k(std::span<const std::uint32_t> ranked,
                     std::span<const std::uint32_t> test_items, std::span<const double> nu,
                     std::size_t k, bool sorted_ideal) {
  if (test_items.empty()) throw InvalidArgument("nov_ndcg_at_k: empty test set");
  if (k == 0) throw InvalidArgument("nov_ndcg_at_k: k must be >= 1");
  double dcg = 0.0;
  std::size_t upto = std::min(k, ranked.size());
  for (std::size_t s = 0; s < upto; ++s)
    if (contains(test_items, ranked[s])) dcg += neg_log_nu(nu, ranked[s]) / log2_discount(s + 1);

  Vector novelties;
  novelties.reserve(test_items.size());
  for (std::uint32_t i : test_items) novelties.push_back(neg_log_nu(nu, i));
  std::size_t ideal = std::min(k, test_items.size());
  double idcg = 0.0;
  if (sorted_ideal) {
    std::sort(novelties.begin(), novelties.end(), std::greater<double>());
    for (std::size_t s = 1; s <= ideal; ++s) idcg += novelties[s - 1] / log2_discount(s);
  } else {
    double m = *std::max_element(novelties.begin(), novelties.end());
    for (std::size_t s = 1; s <= ideal; ++s) idcg += m / log2_discount(s);
  }
  return dcg / idcg;
}

namespace {

std::vector<std::uint32_t> merge_sorted(std::span<const std::uint32_t> a,
                                        std::span<const std::uint32_t> b) {
  std::vector<std::uint32_t> out;
  out.resize(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint32_t> rank_user(const ModelParams& params, const SplitDataset& data,
                                     std::size_t u, std::span<const std::uint32_t> exclude,
                                     std::size_t kmax, bool normalize_input) {
  std::vector<ScoredItem> scored;
  if (params.kind == ModelKind::dae) {
    SparseVec input = user_vector(data.train, u, false);
    scored = predict_topk(params, input, exclude, kmax, normalize_input);
  } else {
    scored = predict_topk(params, u, exclude, kmax);
  }
  std::vector<std::uint32_t> ranked(scored.size());
  for (std::size_t s = 0; s < scored.size(); ++s) ranked[s] = scored[s].item;
  return ranked;
}

// Runs fn(u) over users, serially or with OpenMP. Results must be written to
// per-user rows; the first captured error (by user order) is rethrown.
template <typename Fn>
void for_each_user(std::size_t n_users, std::size_t threads, Fn&& fn) {
  std::vector<std::string> errors(threads > 1 ? n_users : 0);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(n_users);
  if (threads > 1) {
#pragma omp parallel for schedule(static) num_threads(static_cast<int>(threads))
    for (std::ptrdiff_t u = 0; u < n; ++u) {
      try {
        fn(static_cast<std::size_t>(u));
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(u)] = e.what();
      }
    }
    for (const std::string& e : errors)
      if (!e.empty()) throw EvalError(e);
  } else {
    for (std::ptrdiff_t u = 0; u < n; ++u) fn(static_cast<std::size_t>(u));
  }
}

}  // namespace

MetricsReport evaluate_params(const ModelParams& params, const SplitDataset& data,
                              std::span<const int> ks, EvalTarget target, bool normalize_input,
                              std::size_t threads) {
  if (ks.empty()) throw InvalidArgument("evaluate: no k values");
  for (int k : ks)
    if (k < 1) throw InvalidArgument("evaluate: k must be >= 1");
  const std::size_t kmax = static_cast<std::size_t>(*std::max_element(ks.begin(), ks.end()));
  const std::size_t n_users = data.train.n_users;
  const Interactions& target_part = target == EvalTarget::test ? data.test : data.valid;
  PopularityStats pop = popularity(data.train);

  struct Row {
    bool evaluated = false;
    std::vector<double> metrics;  // recall.. ndcg.. nov.. per k
  };
  std::vector<Row> rows(n_users);

  for_each_user(n_users, threads, [&](std::size_t u) {
    const auto& test_items = target_part.items[u];
    if (test_items.empty()) return;
    std::vector<std::uint32_t> exclude =
        target == EvalTarget::test
            ? merge_sorted(data.train.items[u], data.valid.items[u])
            : data.train.items[u];
    std::vector<std::uint32_t> ranked = rank_user(params, data, u, exclude, kmax, normalize_input);
    Row& row = rows[u];
    row.metrics.reserve(3 * ks.size());
    for (int k : ks) row.metrics.push_back(recall_at_k(ranked, test_items, k));
    for (int k : ks) row.metrics.push_back(ndcg_at_k(ranked, test_items, k));
    for (int k : ks) row.metrics.push_back(nov_ndcg_at_k(ranked, test_items, pop.nu, k));
    row.evaluated = true;
  });

  MetricsReport report;
  report.ks.assign(ks.begin(), ks.end());
  Vector sums(3 * ks.size(), 0.0);
  for (const Row& row : rows) {
    if (!row.evaluated) continue;
    ++report.users_evaluated;
    for (std::size_t j = 0; j < sums.size(); ++j) sums[j] += row.metrics[j];
  }
  const double denom = report.users_evaluated > 0 ? static_cast<double>(report.users_evaluated)
                                                  : 1.0;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    report.recall[ks[j]] = sums[j] / denom;
    report.ndcg[ks[j]] = sums[ks.size() + j] / denom;
    report.nov_ndcg[ks[j]] = sums[2 * ks.size() + j] / denom;
  }
  return report;
}

double validation_ndcg(const ModelParams& params, const SplitDataset& data, std::size_t k,
                       bool normalize_input, std::size_t threads) {
  const std::size_t n_users = data.train.n_users;
  std::vector<double> rows(n_users, -1.0);
  for_each_user(n_users, threads, [&](std::size_t u) {
    const auto& target = data.valid.items[u];
    if (target.empty()) return;
    std::vector<std::uint32_t> ranked =
        rank_user(params, data, u, data.train.items[u], k, normalize_input);
    rows[u] = ndcg_at_k(ranked, target, k);
  });
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : rows)
    if (v >= 0.0) {
      sum += v;
      ++n;
    }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

namespace {

void check_checkpoint_matches(const Checkpoint& ckpt, const SplitDataset& data) {
  if (ckpt.params.n_items() != data.train.n_items)
    throw InputError("checkpoint item catalogue does not match the dataset");
  if (ckpt.n_users != 0 && ckpt.n_users != data.train.n_users)
    throw InputError("checkpoint user catalogue does not match the dataset");
  if (ckpt.params.kind == ModelKind::mf && ckpt.params.W.cols != data.train.n_users)
    throw InputError("checkpoint user catalogue does not match the dataset");
  if (ckpt.vocab_hash != 0 && ckpt.vocab_hash != data.vocab.hash())
    throw InputError("checkpoint vocabulary hash does not match the dataset");
}

}  // namespace

MetricsReport evaluate(const Checkpoint& ckpt, const SplitDataset& data, std::span<const int> ks,
                       std::size_t threads) {
  check_checkpoint_matches(ckpt, data);
  return evaluate_params(ckpt.params, data, ks, EvalTarget::test,
                         ckpt.config.reg.normalize_input, threads);
}

PreferenceHistogram preference_histogram(const Checkpoint& ckpt, const SplitDataset& data,
                                         std::span<const double> edges, std::size_t threads) {
  check_checkpoint_matches(ckpt, data);
  if (ckpt.params.dec_act != Activation::sigmoid)
    throw EvalError(
        "preference histogram needs probability outputs: use a sigmoid-decoder model");
  if (edges.size() < 2) throw InvalidArgument("preference_histogram: need at least two edges");
  for (std::size_t j = 1; j < edges.size(); ++j)
    if (!(edges[j] < edges[j - 1]))
      throw InvalidArgument("preference_histogram: edges must be strictly descending");

  const std::size_t n_buckets = edges.size() - 1;
  const std::size_t n_users = data.train.n_users;
  const std::size_t n_items = data.train.n_items;
  const ModelParams& params = ckpt.params;
  const bool normalize = ckpt.config.reg.normalize_input;

  std::vector<Vector> rows(n_users);
  for_each_user(n_users, threads, [&](std::size_t u) {
    Vector p_hat;
    ForwardCache cache;
    if (params.kind == ModelKind::dae) {
      SparseVec input = user_vector(data.train, u, false);
      Rng dummy(0);
      forward_dae(params, input, 0.0, dummy, p_hat, cache, normalize);
    } else {
      forward_mf(params, u, p_hat, cache);
    }
    Vector counts(n_buckets, 0.0);
    for (double v : p_hat) {
      std::size_t b = n_buckets - 1;
      for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
        if (v >= edges[j + 1]) {  // edge values promote to the higher bucket
          b = j;
          break;
        }
      }
      counts[b] += 1.0;
    }
    for (double& c : counts) c = 100.0 * c / static_cast<double>(n_items);
    rows[u] = std::move(counts);
  });

  PreferenceHistogram hist;
  hist.edges.assign(edges.begin(), edges.end());
  hist.percent.assign(n_buckets, 0.0);
  hist.users = n_users;
  for (const Vector& row : rows)
    for (std::size_t j = 0; j < n_buckets; ++j) hist.percent[j] += row[j];
  if (n_users > 0)
    for (double& p : hist.percent) p /= static_cast<double>(n_users);
  return hist;
}

TailReport tail_distribution(const Checkpoint& ckpt, const SplitDataset& data,
                             const TailIntervals& intervals, std::size_t k, std::size_t threads) {
  check_checkpoint_matches(ckpt, data);
  if (k == 0) throw InvalidArgument("tail_distribution: k must be >= 1");
  if (intervals.interval_of.size() != data.train.n_items)
    throw InvalidArgument("tail_distribution: intervals were built for another catalogue");

  const std::size_t n_users = data.train.n_users;
  const ModelParams& params = ckpt.params;
  const bool normalize = ckpt.config.reg.normalize_input;

  std::vector<std::vector<std::uint8_t>> rows(n_users);
  for_each_user(n_users, threads, [&](std::size_t u) {
    std::vector<std::uint32_t> exclude =
        merge_sorted(data.train.items[u], data.valid.items[u]);
    std::vector<std::uint32_t> ranked = rank_user(params, data, u, exclude, k, normalize);
    std::vector<std::uint8_t>& row = rows[u];
    row.resize(ranked.size());
    for (std::size_t s = 0; s < ranked.size(); ++s) row[s] = intervals.interval_of[ranked[s]];
  });

  TailReport report;
  report.k = k;
  report.users = n_users;
  report.cumulative.assign(k, {0, 0, 0});
  std::array<std::int64_t, 3> totals{0, 0, 0};
  for (const auto& row : rows) {
    for (std::size_t s = 0; s < row.size(); ++s) {
      report.cumulative[s][row[s]] += 1;
      totals[row[s]] += 1;
    }
  }
  for (std::size_t s = 1; s < k; ++s)
    for (int iv = 0; iv < 3; ++iv) report.cumulative[s][iv] += report.cumulative[s - 1][iv];
  const std::int64_t grand = totals[0] + totals[1] + totals[2];
  for (int iv = 0; iv < 3; ++iv)
    report.shares[iv] = grand > 0 ? 100.0 * static_cast<double>(totals[iv]) /
                                        static_cast<double>(grand)
                                  : 0.0;
  return report;
}

}  // namespace milrec
