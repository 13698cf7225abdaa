#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "oat/mirt.hpp"
#include "oat/peoat.hpp"

namespace oat {

// One-shot selectors sharing the evaluation protocol. peoat_basic is the
// engine with all three ablation switches off.
enum class SelectorKind { random_select, greedy_fisher, peoat_basic, peoat };

std::string selector_name(SelectorKind kind);
SelectorKind parse_selector(const std::string& name);

// L distinct ids drawn uniformly without replacement.
Individual select_random(std::span<const int> candidate_pool, int test_length,
                         std::uint64_t seed);

// The L ids with the largest scalar information at theta0, ties to the
// smaller id. Deterministic and invariant to pool iteration order.
Individual select_greedy_fisher(const MirtModel& model, const AbilityEstimate& theta0,
                                std::span<const int> candidate_pool, int test_length);

}  // namespace oat
