#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "milrec/matrix.hpp"
#include "milrec/rng.hpp"

namespace milrec {

struct RawRecord {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;
};

struct RawRatings {
  std::vector<RawRecord> records;
};

enum class RatingsFormat : std::uint8_t { tsv, csv };

// Parses user_id <sep> item_id <sep> rating [<sep> timestamp]. A header row
// is auto-detected by a non-numeric rating field on the first line. Any
// malformed row beyond max_malformed raises InputError naming the row;
// tolerated malformed rows are skipped and counted in *malformed_count.
RawRatings ingest_ratings(const std::string& path, RatingsFormat format,
                          std::size_t max_malformed = 0,
                          std::size_t* malformed_count = nullptr);

// Binary user-item adoptions. Item lists are strictly increasing and
// duplicate-free; weights, when present, parallel the item lists.
struct Interactions {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<std::vector<std::uint32_t>> items;
  std::vector<std::vector<double>> weights;

  bool weighted() const { return !weights.empty(); }
  std::size_t pair_count() const;
};

struct Vocab {
  std::vector<std::string> users;
  std::vector<std::string> items;

  // FNV-1a over both id lists; used to tie checkpoints to the exact
  // vocabulary they were trained against.
  std::uint64_t hash() const;
};

struct Dataset {
  Interactions inter;
  Vocab vocab;
};

// Keeps pairs with rating >= threshold as p=1 and drops the rest. Ids map to
// dense indices in order of first appearance.
Dataset binarize(const RawRatings& raw, double threshold = 4.0);

// Single pass, items first then users: drops items adopted by fewer than
// min_users_per_item users, then users with fewer than min_items_per_user
// remaining items, then re-densifies indices. Not iterated to a fixpoint.
// kept_users/kept_items (optional) receive the surviving old indices in
// ascending order. InputError when nothing survives.
Interactions filter_activity(const Interactions& in, std::size_t min_items_per_user,
                             std::size_t min_users_per_item,
                             std::vector<std::uint32_t>* kept_users = nullptr,
                             std::vector<std::uint32_t>* kept_items = nullptr);
Dataset filter_activity(const Dataset& in, std::size_t min_items_per_user,
                        std::size_t min_users_per_item);

struct SplitDataset {
  Interactions train;
  Interactions valid;
  Interactions test;
  Vocab vocab;
};

// Assigns every (u, i) pair independently to valid/test/train with the given
// fractions, iterating pairs in (user, item) order so the outcome is a pure
// function of the seed.
SplitDataset split(const Dataset& data, double valid_frac, double test_frac, Rng& rng);

struct PopularityStats {
  std::vector<std::int64_t> count;  // adoptions per item in train
  std::vector<double> nu;           // count normalized by total interactions
  std::int64_t total = 0;
};

PopularityStats popularity(const Interactions& train);

// Catalogue partition by cumulative popularity share. order holds items by
// descending count (ties by ascending index); the first n33 items cover at
// least 1/3 of all adoptions, the first n66 at least 2/3, both minimal.
struct TailIntervals {
  std::size_t n33 = 0;
  std::size_t n66 = 0;
  std::vector<std::uint32_t> order;
  std::vector<std::uint8_t> interval_of;  // per item: 0 short, 1 medium, 2 long

  static constexpr std::uint8_t kShort = 0;
  static constexpr std::uint8_t kMedium = 1;
  static constexpr std::uint8_t kLong = 2;
};

TailIntervals tail_intervals(const PopularityStats& stats);

// Indicator (or r-weighted) vector over the catalogue for user u.
SparseVec user_vector(const Interactions& inter, std::size_t u, bool weighted = false);

// Lower median of per-user item counts, floored at 1; the negative-sampling
// base size.
std::size_t median_items_per_user(const Interactions& inter);

// Plain-text audit format: one "user\titem\ttag" line per pair,
// tag in {train, valid, test}, ordered by tag, user, item.
void write_split_manifest(const SplitDataset& split, const std::string& path);
SplitDataset read_split_manifest(const std::string& path, Vocab vocab);

void write_vocab(const std::vector<std::string>& ids, const std::string& path);
std::vector<std::string> read_vocab(const std::string& path);

}  // namespace milrec
