#pragma once

#include <cstdint>
#include <string>

#include "milrec/data.hpp"

namespace milrec {

// Low-rank toy dataset: scores U V^T from uniform nonnegative factors, with
// the top positive_frac of all scores binarized into adoptions. Useful for
// smoke training and benchmarks; real datasets come in through
// ingest_ratings.
Dataset make_synthetic_lowrank(std::size_t n_users, std::size_t n_items, std::size_t rank,
                               double positive_frac, std::uint64_t seed);

// Dumps adoptions as "user<TAB>item<TAB>rating" rows for the prep pipeline.
void write_ratings_tsv(const Dataset& data, const std::string& path, double rating = 5.0);

}  // namespace milrec
