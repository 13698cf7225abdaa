#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "oat/baselines.hpp"
#include "oat/rng.hpp"

using namespace oat;

namespace {

std::vector<int> iota_pool(int n) {
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    return pool;
}

}  // namespace

TEST_CASE("selector names round-trip") {
    for (auto k : {SelectorKind::random_select, SelectorKind::greedy_fisher,
                   SelectorKind::peoat_basic, SelectorKind::peoat}) {
        CHECK(parse_selector(selector_name(k)) == k);
    }
    CHECK_THROWS_AS(parse_selector("bogus"), ConfigError);
}

TEST_CASE("select_random basics") {
    const std::vector<int> pool = iota_pool(5);
    // |pool| = L forces the whole pool.
    const Individual all = select_random(pool, 5, 3);
    CHECK(std::set<int>(all.genes.begin(), all.genes.end()) ==
          std::set<int>(pool.begin(), pool.end()));

    // Determinism.
    CHECK(select_random(pool, 3, 17).genes == select_random(pool, 3, 17).genes);
    CHECK_THROWS_AS(select_random(pool, 6, 1), DataError);
}

TEST_CASE("select_random inclusion frequency matches the hypergeometric marginal") {
    const std::vector<int> pool = iota_pool(50);
    const int L = 5;
    std::unordered_map<int, int> counts;
    const int n = 10000;
    Rng seeds(7);
    for (int trial = 0; trial < n; ++trial) {
        const Individual ind = select_random(pool, L, seeds.next_u64());
        CHECK(ind.length() == L);
        CHECK(std::set<int>(ind.genes.begin(), ind.genes.end()).size() == 5);
        for (int g : ind.genes) ++counts[g];
    }
    for (int id = 0; id < 50; ++id) {
        const double freq = static_cast<double>(counts[id]) / n;
        CHECK(std::fabs(freq - 0.1) < 0.01);  // L/|pool| = 0.1
    }
}

TEST_CASE("greedy fisher selection") {
    MirtModel m;
    m.dim = 2;
    m.theta = Matrix(1, 2);
    m.alpha = Matrix(100, 2);
    Rng rng(5);
    for (auto& v : m.alpha.data) v = rng.normal();
    AbilityEstimate theta{0.4, -0.3};

    const std::vector<int> pool = iota_pool(100);
    const int L = 10;
    const Individual picked = select_greedy_fisher(m, theta, pool, L);

    // Exhaustive sort oracle.
    std::vector<std::pair<double, int>> scored;
    for (int id : pool) scored.emplace_back(fisher_scalar(m, theta, id), id);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> expected;
    for (int i = 0; i < L; ++i) expected.push_back(scored[i].second);
    CHECK(picked.genes == expected);

    // Invariant to the pool's iteration order.
    std::vector<int> shuffled = pool;
    Rng shuffle_rng(9);
    shuffle_rng.shuffle(shuffled);
    const Individual again = select_greedy_fisher(m, theta, shuffled, L);
    CHECK(std::set<int>(again.genes.begin(), again.genes.end()) ==
          std::set<int>(picked.genes.begin(), picked.genes.end()));

    // L = |pool| takes everything.
    CHECK(select_greedy_fisher(m, theta, pool, 100).length() == 100);
}

TEST_CASE("zero-information item is picked last by greedy fisher") {
    MirtModel m;
    m.dim = 2;
    m.theta = Matrix(1, 2);
    m.alpha = Matrix(4, 2);
    m.alpha.row(0)[0] = 1.0;
    m.alpha.row(1)[0] = 0.8;
    m.alpha.row(2)[1] = 0.5;
    // alpha row 3 stays zero: no information.
    const AbilityEstimate theta{0.0, 0.0};
    const std::vector<int> pool = iota_pool(4);
    const Individual three = select_greedy_fisher(m, theta, pool, 3);
    CHECK(std::find(three.genes.begin(), three.genes.end(), 3) == three.genes.end());
    const Individual four = select_greedy_fisher(m, theta, pool, 4);
    CHECK(four.genes.back() == 3);
}
