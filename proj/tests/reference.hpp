// Independent reference implementations used only by the test suites.
// Everything here is written as plain loops straight off the definitions, on
// purpose: these are the oracles the optimized library paths are checked
// against, so they must not share code with them.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "milrec/matrix.hpp"
#include "milrec/model.hpp"

namespace refimpl {

inline bool member(const std::vector<std::uint32_t>& set, std::uint32_t x) {
  for (std::uint32_t s : set)
    if (s == x) return true;
  return false;
}

inline double recall_ref(const std::vector<std::uint32_t>& ranked,
                         const std::vector<std::uint32_t>& test, std::size_t k) {
  double hits = 0.0;
  for (std::size_t s = 0; s < ranked.size() && s < k; ++s)
    if (member(test, ranked[s])) hits += 1.0;
  double denom = static_cast<double>(std::min(k, test.size()));
  return hits / denom;
}

inline double ndcg_ref(const std::vector<std::uint32_t>& ranked,
                       const std::vector<std::uint32_t>& test, std::size_t k) {
  double dcg = 0.0;
  for (std::size_t s = 1; s <= ranked.size() && s <= k; ++s)
    if (member(test, ranked[s - 1])) dcg += 1.0 / (std::log(double(s) + 1.0) / std::log(2.0));
  double idcg = 0.0;
  std::size_t ideal = std::min(k, test.size());
  for (std::size_t s = 1; s <= ideal; ++s)
    idcg += 1.0 / (std::log(double(s) + 1.0) / std::log(2.0));
  return dcg / idcg;
}

inline double nov_ndcg_ref(const std::vector<std::uint32_t>& ranked,
                           const std::vector<std::uint32_t>& test,
                           const std::vector<double>& nu, std::size_t k) {
  double dcg = 0.0;
  for (std::size_t s = 1; s <= ranked.size() && s <= k; ++s)
    if (member(test, ranked[s - 1]))
      dcg += -std::log(nu[ranked[s - 1]]) / (std::log(double(s) + 1.0) / std::log(2.0));
  double best = 0.0;
  for (std::uint32_t t : test) best = std::max(best, -std::log(nu[t]));
  double idcg = 0.0;
  std::size_t ideal = std::min(k, test.size());
  for (std::size_t s = 1; s <= ideal; ++s)
    idcg += best / (std::log(double(s) + 1.0) / std::log(2.0));
  return dcg / idcg;
}

// Ranking by score (descending, ties by ascending index) with exclusions,
// via a full stable sort of explicit pairs.
inline std::vector<std::uint32_t> rank_ref(const std::vector<double>& scores,
                                           const std::vector<std::uint32_t>& exclude,
                                           std::size_t k) {
  std::vector<std::pair<double, std::uint32_t>> items;
  for (std::uint32_t i = 0; i < scores.size(); ++i)
    if (!member(exclude, i)) items.push_back({scores[i], i});
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::uint32_t> out;
  for (std::size_t s = 0; s < items.size() && s < k; ++s) out.push_back(items[s].second);
  return out;
}

struct DenseGrads {
  milrec::Matrix W;
  milrec::Vector b;
  milrec::Matrix Wp;
  milrec::Vector bp;
};

// Fully dense backward pass: input and output gradient as dense vectors, no
// sparsity shortcuts anywhere.
inline DenseGrads dense_backward(const milrec::ModelParams& p, const milrec::Vector& x,
                                 const milrec::Vector& out_grad) {
  using milrec::activate;
  using milrec::activate_grad;
  const std::size_t dim = p.W.rows;
  const std::size_t n_in = p.W.cols;
  const std::size_t n_out = p.Wp.rows;

  milrec::Vector hidden_pre(dim), hidden(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    double acc = p.b[d];
    for (std::size_t i = 0; i < n_in; ++i) acc += p.W(d, i) * x[i];
    hidden_pre[d] = acc;
    hidden[d] = activate(p.enc_act, acc);
  }
  milrec::Vector out_pre(n_out), delta_out(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    double acc = p.bp[i];
    for (std::size_t d = 0; d < dim; ++d) acc += p.Wp(i, d) * hidden[d];
    out_pre[i] = acc;
    delta_out[i] = out_grad[i] * activate_grad(p.dec_act, acc);
  }

  DenseGrads g;
  g.W = milrec::Matrix(dim, n_in);
  g.b.assign(dim, 0.0);
  g.Wp = milrec::Matrix(n_out, dim);
  g.bp.assign(n_out, 0.0);
  for (std::size_t i = 0; i < n_out; ++i) {
    for (std::size_t d = 0; d < dim; ++d) g.Wp(i, d) = delta_out[i] * hidden[d];
    g.bp[i] = delta_out[i];
  }
  milrec::Vector delta_hidden(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_out; ++i) acc += delta_out[i] * p.Wp(i, d);
    delta_hidden[d] = acc * activate_grad(p.enc_act, hidden_pre[d]);
  }
  for (std::size_t d = 0; d < dim; ++d) {
    g.b[d] = delta_hidden[d];
    for (std::size_t i = 0; i < n_in; ++i) g.W(d, i) = delta_hidden[d] * x[i];
  }
  return g;
}

// Smallest prefix (of items sorted by descending count, ties by index)
// whose share reaches the target, found by scanning every prefix.
inline std::size_t tail_cut_ref(const std::vector<std::int64_t>& counts, std::int64_t num,
                                std::int64_t den) {
  std::vector<std::uint32_t> order(counts.size());
  for (std::uint32_t i = 0; i < counts.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  });
  std::int64_t total = 0;
  for (std::int64_t c : counts) total += c;
  for (std::size_t n = 1; n <= counts.size(); ++n) {
    std::int64_t cum = 0;
    for (std::size_t j = 0; j < n; ++j) cum += counts[order[j]];
    if (cum * den >= total * num) return n;
  }
  return counts.size();
}

}  // namespace refimpl
