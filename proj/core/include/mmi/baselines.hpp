#pragma once

#include "mmi/mixed_mp.hpp"
#include "mmi/model.hpp"

namespace mmi {

/// Plain synchronous loopy sum-product, independent of the weighted scheme.
/// Beliefs are sum-marginal estimates; decode takes the per-node argmax over
/// the max set.
std::pair<Beliefs, SolveReport> sum_product(const PairwiseModel& m, const SolveConfig& cfg);

/// Plain synchronous loopy max-product. Node beliefs are normalized
/// max-marginals; decode as above.
std::pair<Beliefs, SolveReport> max_product(const PairwiseModel& m, const SolveConfig& cfg);

}  // namespace mmi
