#pragma once

#include "tmr/index.hpp"

#include <span>

namespace tmr {

/// Inverse Rank Position fusion: each doc scores 1 / sum_j (1 / rank_j) over
/// the input rankings; the output is sorted by ascending score (best first),
/// ties broken by doc id. Inputs must be full rankings over the same docs and
/// may carry fractional (tie-averaged) ranks.
Ranking irp_fuse(std::span<const Ranking> rankings);

}  // namespace tmr
