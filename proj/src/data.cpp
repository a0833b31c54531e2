#include "milrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "milrec/error.hpp"

namespace milrec {

namespace {

bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_i64(std::string_view s, std::int64_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::size_t Interactions::pair_count() const {
  std::size_t n = 0;
  for (const auto& list : items) n += list.size();
  return n;
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto eat = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0x1f;  // separator
    h *= 0x100000001b3ULL;
  };
  for (const auto& u : users) eat(u);
  h ^= 0x1e;
  h *= 0x100000001b3ULL;
  for (const auto& i : items) eat(i);
  return h;
}

RawRatings ingest_ratings(const std::string& path, RatingsFormat format,
                          std::size_t max_malformed, std::size_t* malformed_count) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ratings file: " + path);
  const char sep = format == RatingsFormat::tsv ? '\t' : ',';

  // Read everything first: a non-numeric rating on line 1 is only a header
  // when a later line parses, otherwise line 1 is malformed data.
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    lines.push_back(line);
  }

  bool skip_first = false;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    auto fields = split_fields(lines[r], sep);
    double rating;
    bool numeric = fields.size() >= 3 && parse_double(fields[2], rating);
    if (r == 0) {
      if (numeric) break;
      continue;  // decide once a later data row is seen
    }
    if (numeric && !lines[0].empty()) {
      auto first = split_fields(lines[0], sep);
      double unused;
      skip_first = first.size() >= 3 && !parse_double(first[2], unused);
    }
    break;
  }

  RawRatings raw;
  std::size_t malformed = 0;
  std::size_t row = 0;
  auto bad_row = [&](const std::string& why) {
    ++malformed;
    if (malformed > max_malformed)
      throw InputError("malformed row " + std::to_string(row) + " in " + path + ": " + why);
  };
  for (std::size_t r = 0; r < lines.size(); ++r) {
    row = r + 1;
    if (lines[r].empty()) continue;
    if (r == 0 && skip_first) continue;
    auto fields = split_fields(lines[r], sep);
    if (fields.size() < 3) {
      bad_row("expected at least 3 fields, got " + std::to_string(fields.size()));
      continue;
    }
    double rating;
    if (!parse_double(fields[2], rating)) {
      bad_row("unparsable rating '" + std::string(fields[2]) + "'");
      continue;
    }
    if (fields[0].empty() || fields[1].empty()) {
      bad_row("empty id");
      continue;
    }
    RawRecord rec;
    rec.user_id = std::string(fields[0]);
    rec.item_id = std::string(fields[1]);
    rec.rating = rating;
    if (fields.size() >= 4 && !fields[3].empty()) {
      std::int64_t ts;
      if (!parse_i64(fields[3], ts)) {
        bad_row("unparsable timestamp '" + std::string(fields[3]) + "'");
        continue;
      }
      rec.timestamp = ts;
    }
    raw.records.push_back(std::move(rec));
  }
  if (malformed_count) *malformed_count = malformed;
  return raw;
}

Dataset binarize(const RawRatings& raw, double threshold) {
  if (!std::isfinite(threshold)) throw InvalidArgument("binarize: threshold must be finite");
  Dataset out;
  std::unordered_map<std::string, std::uint32_t> user_index, item_index;
  std::vector<std::vector<std::uint32_t>> per_user;
  for (const auto& rec : raw.records) {
    if (rec.rating < threshold) continue;
    auto [uit, unew] = user_index.try_emplace(rec.user_id,
                                              static_cast<std::uint32_t>(out.vocab.users.size()));
    if (unew) {
      out.vocab.users.push_back(rec.user_id);
      per_user.emplace_back();
    }
    auto [iit, inew] = item_index.try_emplace(rec.item_id,
                                              static_cast<std::uint32_t>(out.vocab.items.size()));
    if (inew) out.vocab.items.push_back(rec.item_id);
    per_user[uit->second].push_back(iit->second);
  }
  out.inter.n_users = out.vocab.users.size();
  out.inter.n_items = out.vocab.items.size();
  out.inter.items = std::move(per_user);
  for (auto& list : out.inter.items) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return out;
}

Interactions filter_activity(const Interactions& in, std::size_t min_items_per_user,
                             std::size_t min_users_per_item,
                             std::vector<std::uint32_t>* kept_users,
                             std::vector<std::uint32_t>* kept_items) {
  // Items below threshold go first, then users, one pass each.
  std::vector<std::size_t> item_users(in.n_items, 0);
  for (const auto& list : in.items)
    for (std::uint32_t i : list) ++item_users[i];

  std::vector<std::uint32_t> item_map(in.n_items, UINT32_MAX);
  std::vector<std::uint32_t> items_keep;
  for (std::size_t i = 0; i < in.n_items; ++i) {
    if (item_users[i] >= min_users_per_item) {
      item_map[i] = static_cast<std::uint32_t>(items_keep.size());
      items_keep.push_back(static_cast<std::uint32_t>(i));
    }
  }

  Interactions out;
  out.n_items = items_keep.size();
  std::vector<std::uint32_t> users_keep;
  const bool has_weights = in.weighted();
  if (has_weights) out.weights.reserve(in.n_users);
  for (std::size_t u = 0; u < in.n_users; ++u) {
    std::vector<std::uint32_t> list;
    std::vector<double> wlist;
    const auto& src = in.items[u];
    for (std::size_t k = 0; k < src.size(); ++k) {
      std::uint32_t mapped = item_map[src[k]];
      if (mapped == UINT32_MAX) continue;
      list.push_back(mapped);
      if (has_weights) wlist.push_back(in.weights[u][k]);
    }
    if (list.size() >= min_items_per_user) {
      users_keep.push_back(static_cast<std::uint32_t>(u));
      out.items.push_back(std::move(list));
      if (has_weights) out.weights.push_back(std::move(wlist));
    }
  }
  out.n_users = out.items.size();
  if (out.pair_count() == 0)
    throw InputError("filter_activity: no interactions survive the thresholds");
  if (kept_users) *kept_users = std::move(users_keep);
  if (kept_items) *kept_items = std::move(items_keep);
  return out;
}

Dataset filter_activity(const Dataset& in, std::size_t min_items_per_user,
                        std::size_t min_users_per_item) {
  Dataset out;
  std::vector<std::uint32_t> kept_users, kept_items;
  out.inter = filter_activity(in.inter, min_items_per_user, min_users_per_item, &kept_users,
                              &kept_items);
  out.vocab.users.reserve(kept_users.size());
  for (std::uint32_t u : kept_users) out.vocab.users.push_back(in.vocab.users[u]);
  out.vocab.items.reserve(kept_items.size());
  for (std::uint32_t i : kept_items) out.vocab.items.push_back(in.vocab.items[i]);
  return out;
}

SplitDataset split(const Dataset& data, double valid_frac, double test_frac, Rng& rng) {
  if (valid_frac < 0.0 || test_frac < 0.0 || valid_frac + test_frac >= 1.0)
    throw InvalidArgument("split: fractions must be non-negative and sum below 1");
  SplitDataset out;
  out.vocab = data.vocab;
  const Interactions& in = data.inter;
  for (Interactions* part : {&out.train, &out.valid, &out.test}) {
    part->n_users = in.n_users;
    part->n_items = in.n_items;
    part->items.resize(in.n_users);
  }
  for (std::size_t u = 0; u < in.n_users; ++u) {
    for (std::uint32_t i : in.items[u]) {
      double r = rng.next_double();
      if (r < valid_frac)
        out.valid.items[u].push_back(i);
      else if (r < valid_frac + test_frac)
        out.test.items[u].push_back(i);
      else
        out.train.items[u].push_back(i);
    }
  }
  return out;
}

PopularityStats popularity(const Interactions& train) {
  PopularityStats stats;
  stats.count.assign(train.n_items, 0);
  for (const auto& list : train.items)
    for (std::uint32_t i : list) ++stats.count[i];
  stats.total = std::accumulate(stats.count.begin(), stats.count.end(), std::int64_t{0});
  if (stats.total == 0) throw InputError("popularity: empty training interactions");
  stats.nu.resize(train.n_items);
  for (std::size_t i = 0; i < stats.count.size(); ++i)
    stats.nu[i] = static_cast<double>(stats.count[i]) / static_cast<double>(stats.total);
  return stats;
}

TailIntervals tail_intervals(const PopularityStats& stats) {
  if (stats.total <= 0) throw InvalidArgument("tail_intervals: total count must be > 0");
  TailIntervals t;
  const std::size_t n = stats.count.size();
  t.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.order[i] = static_cast<std::uint32_t>(i);
  std::sort(t.order.begin(), t.order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (stats.count[a] != stats.count[b]) return stats.count[a] > stats.count[b];
    return a < b;
  });
  // Integer arithmetic: share >= 1/3 iff 3*cum >= total, so exact thirds
  // (e.g. uniform counts) land on the boundary instead of drifting in fp.
  std::int64_t cum = 0;
  std::size_t pos = 0;
  t.n33 = t.n66 = n;
  for (std::size_t k = 0; k < n; ++k) {
    cum += stats.count[t.order[k]];
    if (pos == 0 && 3 * cum >= stats.total) {
      t.n33 = k + 1;
      pos = 1;
    }
    if (pos == 1 && 3 * cum >= 2 * stats.total) {
      t.n66 = k + 1;
      break;
    }
  }
  t.interval_of.assign(n, TailIntervals::kLong);
  for (std::size_t k = 0; k < t.n66 && k < n; ++k)
    t.interval_of[t.order[k]] = k < t.n33 ? TailIntervals::kShort : TailIntervals::kMedium;
  return t;
}

SparseVec user_vector(const Interactions& inter, std::size_t u, bool weighted) {
  if (u >= inter.n_users) throw InvalidArgument("user_vector: user index out of range");
  if (weighted && !inter.weighted())
    throw InvalidArgument("user_vector: interactions carry no weights");
  SparseVec v;
  const auto& list = inter.items[u];
  v.idx = list;
  if (weighted)
    v.val = inter.weights[u];
  else
    v.val.assign(list.size(), 1.0);
  return v;
}

std::size_t median_items_per_user(const Interactions& inter) {
  if (inter.n_users == 0) return 1;
  std::vector<std::size_t> sizes(inter.n_users);
  for (std::size_t u = 0; u < inter.n_users; ++u) sizes[u] = inter.items[u].size();
  std::nth_element(sizes.begin(), sizes.begin() + (sizes.size() - 1) / 2, sizes.end());
  std::size_t med = sizes[(sizes.size() - 1) / 2];
  return med > 0 ? med : 1;
}

void write_split_manifest(const SplitDataset& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
  if (!out) throw InputError("cannot write manifest: " + path);
  auto dump = [&out](const Interactions& part, const char* tag) {
    for (std::size_t u = 0; u < part.n_users; ++u)
      for (std::uint32_t i : part.items[u]) out << u << '\t' << i << '\t' << tag << '\n';
  };
  dump(split.train, "train");
  dump(split.valid, "valid");
  dump(split.test, "test");
  if (!out) throw InputError("write failure: " + path);
}

SplitDataset read_split_manifest(const std::string& path, Vocab vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open manifest: " + path);
  SplitDataset out;
  out.vocab = std::move(vocab);
  const std::size_t n_users = out.vocab.users.size();
  const std::size_t n_items = out.vocab.items.size();
  for (Interactions* part : {&out.train, &out.valid, &out.test}) {
    part->n_users = n_users;
    part->n_items = n_items;
    part->items.resize(n_users);
  }
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    std::int64_t u, i;
    if (fields.size() != 3 || !parse_i64(fields[0], u) || !parse_i64(fields[1], i))
      throw FormatError("manifest row " + std::to_string(row) + ": bad line");
    if (u < 0 || static_cast<std::size_t>(u) >= n_users || i < 0 ||
        static_cast<std::size_t>(i) >= n_items)
      throw FormatError("manifest row " + std::to_string(row) + ": index out of range");
    Interactions* part;
    if (fields[2] == "train")
      part = &out.train;
    else if (fields[2] == "valid")
      part = &out.valid;
    else if (fields[2] == "test")
      part = &out.test;
    else
      throw FormatError("manifest row " + std::to_string(row) + ": unknown tag '" +
                        std::string(fields[2]) + "'");
    part->items[static_cast<std::size_t>(u)].push_back(static_cast<std::uint32_t>(i));
  }
  for (Interactions* part : {&out.train, &out.valid, &out.test})
    for (auto& list : part->items)
      if (!std::is_sorted(list.begin(), list.end()))
        std::sort(list.begin(), list.end());
  return out;
}

void write_vocab(const std::vector<std::string>& ids, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write vocabulary: " + path);
  for (const auto& id : ids) out << id << '\n';
  if (!out) throw InputError("write failure: " + path);
}

std::vector<std::string> read_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open vocabulary: " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    ids.push_back(line);
  }
  return ids;
}

}  // namespace milrec
