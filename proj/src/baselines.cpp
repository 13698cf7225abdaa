#include "oat/baselines.hpp"

#include <algorithm>
#include <vector>

#include "oat/errors.hpp"
#include "oat/kernels.hpp"
#include "oat/rng.hpp"

namespace oat {

std::string selector_name(SelectorKind kind) {
    switch (kind) {
        case SelectorKind::random_select:
            return "random";
        case SelectorKind::greedy_fisher:
            return "greedy_fisher";
        case SelectorKind::peoat_basic:
            return "peoat_basic";
        case SelectorKind::peoat:
            return "peoat";
    }
    return "unknown";
}

SelectorKind parse_selector(const std::string& name) {
    if (name == "random") return SelectorKind::random_select;
    if (name == "greedy_fisher") return SelectorKind::greedy_fisher;
    if (name == "peoat_basic") return SelectorKind::peoat_basic;
    if (name == "peoat") return SelectorKind::peoat;
    throw ConfigError("unknown selector '" + name +
                      "' (expected random, greedy_fisher, peoat_basic or peoat)");
}

Individual select_random(std::span<const int> candidate_pool, int test_length,
                         std::uint64_t seed) {
    if (static_cast<int>(candidate_pool.size()) < test_length) {
        throw DataError("candidate pool smaller than test length");
    }
    Rng rng(seed);
    Individual ind;
    ind.genes = rng.sample(std::vector<int>(candidate_pool.begin(), candidate_pool.end()),
                           static_cast<std::size_t>(test_length));
    return ind;
}

Individual select_greedy_fisher(const MirtModel& model, const AbilityEstimate& theta0,
                                std::span<const int> candidate_pool, int test_length) {
    if (static_cast<int>(candidate_pool.size()) < test_length) {
        throw DataError("candidate pool smaller than test length");
    }
    std::vector<std::pair<double, int>> scored;
    scored.reserve(candidate_pool.size());
    for (int id : candidate_pool) {
        scored.emplace_back(fisher_scalar(model, theta0, id), id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    Individual ind;
    ind.genes.reserve(test_length);
    for (int i = 0; i < test_length; ++i) ind.genes.push_back(scored[i].second);
    return ind;
}

}  // namespace oat
