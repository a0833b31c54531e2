#include "milrec/synthetic.hpp"

#include <algorithm>
#include <fstream>

#include "milrec/error.hpp"
#include "milrec/matrix.hpp"
#include "milrec/rng.hpp"

namespace milrec {

Dataset make_synthetic_lowrank(std::size_t n_users, std::size_t n_items, std::size_t rank,
                               double positive_frac, std::uint64_t seed) {
  if (n_users == 0 || n_items == 0 || rank == 0)
    throw InvalidArgument("synthetic: zero dimension");
  if (!(positive_frac > 0.0 && positive_frac < 1.0))
    throw InvalidArgument("synthetic: positive_frac must be in (0, 1)");

  Rng rng(Rng::mix(seed, 0xA));
  Matrix U(n_users, rank), V(n_items, rank);
  for (double& v : U.data) v = rng.next_double();
  for (double& v : V.data) v = rng.next_double();

  Vector scores(n_users * n_items);
  for (std::size_t u = 0; u < n_users; ++u) {
    for (std::size_t i = 0; i < n_items; ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < rank; ++r) s += U(u, r) * V(i, r);
      scores[u * n_items + i] = s;
    }
  }
  std::size_t n_pos = static_cast<std::size_t>(positive_frac * static_cast<double>(scores.size()));
  n_pos = std::max<std::size_t>(1, std::min(n_pos, scores.size() - 1));
  Vector sorted = scores;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n_pos - 1),
                   sorted.end(), std::greater<double>());
  const double tau = sorted[n_pos - 1];

  Dataset data;
  data.inter.n_users = n_users;
  data.inter.n_items = n_items;
  data.inter.items.resize(n_users);
  for (std::size_t u = 0; u < n_users; ++u)
    for (std::size_t i = 0; i < n_items; ++i)
      if (scores[u * n_items + i] >= tau)
        data.inter.items[u].push_back(static_cast<std::uint32_t>(i));
  data.vocab.users.resize(n_users);
  for (std::size_t u = 0; u < n_users; ++u) data.vocab.users[u] = "u" + std::to_string(u);
  data.vocab.items.resize(n_items);
  for (std::size_t i = 0; i < n_items; ++i) data.vocab.items[i] = "i" + std::to_string(i);
  return data;
}

void write_ratings_tsv(const Dataset& data, const std::string& path, double rating) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write ratings file: " + path);
  for (std::size_t u = 0; u < data.inter.n_users; ++u)
    for (std::uint32_t i : data.inter.items[u])
      out << data.vocab.users[u] << '\t' << data.vocab.items[i] << '\t' << rating << '\n';
  if (!out) throw InputError("write failure: " + path);
}

}  // namespace milrec
