#include "oat/peoat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "oat/errors.hpp"
#include "oat/kernels.hpp"
#include "oat/rng.hpp"

namespace oat {

namespace {

constexpr double kUnevaluated = std::numeric_limits<double>::quiet_NaN();

void check_pool_sorted_unique(std::span<const int> pool) {
    for (std::size_t i = 1; i < pool.size(); ++i) {
        if (pool[i] <= pool[i - 1]) {
            throw DataError("candidate pool must be sorted and duplicate-free");
        }
    }
}

// Uniform draw of `k` distinct values from `ids`.
std::vector<int> draw_distinct(const std::vector<int>& ids, int k, Rng& rng) {
    return rng.sample(ids, static_cast<std::size_t>(k));
}

struct GeneSetHash {
    std::size_t operator()(const std::vector<int>& genes) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (int g : genes) h = mix_seed(h, static_cast<std::uint64_t>(g));
        return static_cast<std::size_t>(h);
    }
};

}  // namespace

void EvolveConfig::validate() const {
    if (population_size < 2 || population_size % 2 != 0) {
        throw ConfigError("population_size must be even and >= 2");
    }
    if (generations < 1) throw ConfigError("generations must be >= 1");
    if (crossover_rate < 0.0 || crossover_rate > 1.0) {
        throw ConfigError("crossover_rate must be in [0, 1]");
    }
    if (mutation_rate < 0.0 || mutation_rate > 1.0) {
        throw ConfigError("mutation_rate must be in [0, 1]");
    }
    if (tau_coeff < 0.0) throw ConfigError("tau_coeff must be >= 0");
    if (diversity_base < 0.0) throw ConfigError("diversity_base must be >= 0");
    if (max_fill_attempts < 1) throw ConfigError("max_fill_attempts must be >= 1");
}

DistanceVector build_distance_vector(const MirtModel& model, const AbilityEstimate& theta0,
                                     std::span<const int> candidate_pool) {
    if (candidate_pool.empty()) throw DataError("candidate pool is empty");
    DistanceVector dist;
    dist.values.resize(candidate_pool.size());
    kernels::sqdist_rows(model.alpha.data.data(), candidate_pool.data(), candidate_pool.size(),
                         theta0.data(), static_cast<std::size_t>(model.dim),
                         dist.values.data());
    for (auto& v : dist.values) v = std::sqrt(v);
    return dist;
}

Population init_population(const DistanceVector& distances, std::span<const int> candidate_pool,
                           const EvolveConfig& config, int test_length, std::uint64_t seed) {
    config.validate();
    check_pool_sorted_unique(candidate_pool);
    const int pool_size = static_cast<int>(candidate_pool.size());
    const int L = test_length;
    if (pool_size <= 4 * L) {
        throw DataError("candidate pool must exceed 4 * test_length (got " +
                        std::to_string(pool_size) + " for L=" + std::to_string(L) + ")");
    }
    if (distances.values.size() != candidate_pool.size()) {
        throw DataError("distance vector does not match candidate pool");
    }

    // Pool ids ordered by ascending distance; ties break on the id so the
    // ordering is deterministic.
    std::vector<int> by_distance(candidate_pool.begin(), candidate_pool.end());
    {
        std::vector<std::size_t> idx(candidate_pool.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (distances.values[a] != distances.values[b]) {
                return distances.values[a] < distances.values[b];
            }
            return candidate_pool[a] < candidate_pool[b];
        });
        for (std::size_t i = 0; i < idx.size(); ++i) by_distance[i] = candidate_pool[idx[i]];
    }

    const std::vector<int> whole_pool(candidate_pool.begin(), candidate_pool.end());
    const std::vector<int> nearest(by_distance.begin(), by_distance.begin() + 2 * L);
    const std::vector<int> farthest(by_distance.end() - 2 * L, by_distance.end());
    const std::vector<int> middle(by_distance.begin() + 2 * L, by_distance.end() - 2 * L);

    Rng rng(seed);
    Population pop;
    pop.members.reserve(config.population_size);
    for (int i = 0; i < config.population_size; ++i) {
        Individual ind;
        if (!config.use_personalized_init) {
            ind.genes = draw_distinct(whole_pool, L, rng);
        } else {
            switch (rng.bounded(3)) {
                case 0:
                    ind.genes = draw_distinct(nearest, L, rng);
                    break;
                case 1:
                    ind.genes = draw_distinct(farthest, L, rng);
                    break;
                default:
                    // Middle slice shorter than L cannot yield L distinct
                    // genes; fall back to the whole pool.
                    ind.genes = static_cast<int>(middle.size()) >= L
                                    ? draw_distinct(middle, L, rng)
                                    : draw_distinct(whole_pool, L, rng);
                    break;
            }
        }
        pop.members.push_back(std::move(ind));
    }
    pop.fitness.assign(pop.members.size(), kUnevaluated);
    pop.generation = 0;
    return pop;
}

namespace {

// Replace duplicate genes, left to right, keeping first occurrences. Draws
// avoid every gene currently in the child.
void repair(Individual& child, std::span<const int> pool, Rng& rng) {
    std::unordered_set<int> present(child.genes.begin(), child.genes.end());
    std::unordered_set<int> seen;
    for (auto& gene : child.genes) {
        if (seen.insert(gene).second) continue;
        std::vector<int> available;
        available.reserve(pool.size());
        for (int id : pool) {
            if (!present.count(id)) available.push_back(id);
        }
        if (available.empty()) {
            throw DataError("candidate pool too small to repair offspring");
        }
        gene = available[rng.index(available.size())];
        present.insert(gene);
        seen.insert(gene);
    }
}

std::pair<Individual, Individual> crossover_impl(const Individual& a, const Individual& b,
                                                 const std::vector<int>& mask,
                                                 std::span<const int> pool, Rng& rng) {
    const std::size_t L = a.genes.size();
    Individual c1, c2;
    c1.genes.resize(L);
    c2.genes.resize(L);
    for (std::size_t k = 0; k < L; ++k) {
        c1.genes[k] = mask[k] ? a.genes[k] : b.genes[k];
        c2.genes[k] = mask[k] ? b.genes[k] : a.genes[k];
    }
    repair(c1, pool, rng);
    repair(c2, pool, rng);
    return {std::move(c1), std::move(c2)};
}

}  // namespace

std::pair<Individual, Individual> crossover(const Individual& parent_a, const Individual& parent_b,
                                            std::span<const int> candidate_pool,
                                            std::uint64_t seed) {
    if (parent_a.genes.size() != parent_b.genes.size()) {
        throw DataError("crossover parents must share a length");
    }
    Rng rng(seed);
    std::vector<int> mask(parent_a.genes.size());
    for (auto& m : mask) m = static_cast<int>(rng.bounded(2));
    return crossover_impl(parent_a, parent_b, mask, candidate_pool, rng);
}

std::pair<Individual, Individual> crossover_with_mask(const Individual& parent_a,
                                                      const Individual& parent_b,
                                                      const std::vector<int>& mask,
                                                      std::span<const int> candidate_pool,
                                                      std::uint64_t repair_seed) {
    Rng rng(repair_seed);
    return crossover_impl(parent_a, parent_b, mask, candidate_pool, rng);
}

Individual mutate(const Individual& individual, const MirtModel& model,
                  const AbilityEstimate& theta0, std::span<const int> candidate_pool,
                  const EvolveConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    if (rng.real() >= config.mutation_rate) return individual;

    const std::unordered_set<int> genes(individual.genes.begin(), individual.genes.end());
    std::vector<int> unselected;
    unselected.reserve(candidate_pool.size());
    for (int id : candidate_pool) {
        if (!genes.count(id)) unselected.push_back(id);
    }
    if (unselected.empty()) throw DataError("mutation pool Z is empty");

    const std::size_t off_pos = rng.index(individual.genes.size());

    std::size_t pick = 0;
    bool picked = false;
    if (config.use_cognitive_operators) {
        std::vector<double> info(unselected.size());
        kernels::dot_rows(model.alpha.data.data(), unselected.data(), unselected.size(),
                          theta0.data(), static_cast<std::size_t>(model.dim), info.data());
        double total = 0.0;
        for (std::size_t i = 0; i < unselected.size(); ++i) {
            const double p = sigmoid(info[i]);
            info[i] = kernels::norm_sq(model.alpha.row(unselected[i])) * p * (1.0 - p);
            total += info[i];
        }
        if (total > 0.0) {
            const double u = rng.real() * total;
            double cumulative = 0.0;
            for (std::size_t i = 0; i < info.size(); ++i) {
                cumulative += info[i];
                if (u < cumulative) {
                    pick = i;
                    picked = true;
                    break;
                }
            }
            if (!picked) pick = info.size() - 1;  // u landed on the rounding edge
            picked = true;
        }
    }
    if (!picked) pick = rng.index(unselected.size());

    Individual mutated = individual;
    mutated.genes[off_pos] = unselected[pick];
    return mutated;
}

double evaluate_fitness(const Individual& individual, const MirtModel& model,
                        const AbilityEstimate& theta0,
                        const std::unordered_map<int, int>& candidate_responses,
                        std::span<const Interaction> test_split, const UpdateConfig& update) {
    if (test_split.empty()) throw DataError("fitness requires a nonempty test split");

    std::vector<std::pair<int, int>> responses;
    responses.reserve(individual.genes.size());
    for (int gene : individual.genes) {
        const auto it = candidate_responses.find(gene);
        if (it == candidate_responses.end()) {
            throw DataError("gene " + std::to_string(gene) +
                            " has no recorded response (split corruption)");
        }
        responses.emplace_back(gene, it->second);
    }

    const AbilityEstimate updated = virtual_update(model, theta0, responses, update);

    std::vector<double> predictions;
    std::vector<int> labels;
    predictions.reserve(test_split.size());
    labels.reserve(test_split.size());
    for (const auto& it : test_split) {
        predictions.push_back(predict(model, updated, it.question_id, update.probability_clip));
        labels.push_back(it.correct);
    }

    const double acc = metric_acc(predictions, labels);
    const auto auc = metric_auc(predictions, labels);
    return auc ? 0.5 * (acc + *auc) : acc;
}

int set_difference_distance(const Individual& a, const Individual& b) {
    int common = 0;
    for (int ga : a.genes) {
        for (int gb : b.genes) {
            if (ga == gb) {
                ++common;
                break;
            }
        }
    }
    return a.length() - common;
}

Population environmental_selection(const Population& parents, std::span<const Scored> offspring,
                                   const EvolveConfig& config, int test_length,
                                   SelectionStats* stats) {
    config.validate();
    if (parents.members.size() != parents.fitness.size()) {
        throw DataError("parent population fitness list is out of sync");
    }
    for (double f : parents.fitness) {
        if (std::isnan(f)) throw DataError("environmental selection needs evaluated parents");
    }

    std::vector<const Individual*> pool;
    std::vector<double> pool_fitness;
    pool.reserve(parents.members.size() + offspring.size());
    for (std::size_t i = 0; i < parents.members.size(); ++i) {
        pool.push_back(&parents.members[i]);
        pool_fitness.push_back(parents.fitness[i]);
    }
    for (const auto& s : offspring) {
        pool.push_back(&s.ind);
        pool_fitness.push_back(s.fitness);
    }

    // Descending fitness; stable so ties keep pool order (parents first).
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pool_fitness[a] > pool_fitness[b];
    });

    const std::size_t target = static_cast<std::size_t>(config.population_size);
    if (pool.size() < target) throw DataError("survivor pool smaller than population size");

    Population next;
    next.generation = parents.generation + 1;
    next.members.reserve(target);
    next.fitness.reserve(target);

    if (!config.use_diversity_selection) {
        for (std::size_t r = 0; r < target; ++r) {
            next.members.push_back(*pool[order[r]]);
            next.fitness.push_back(pool_fitness[order[r]]);
        }
        if (stats) stats->passes_used = 1;
        return next;
    }

    const std::size_t n_elite = target / 2;
    std::vector<bool> taken(pool.size(), false);
    for (std::size_t r = 0; r < n_elite; ++r) {
        next.members.push_back(*pool[order[r]]);
        next.fitness.push_back(pool_fitness[order[r]]);
        taken[order[r]] = true;
    }

    const double full_threshold = config.diversity_threshold(test_length);
    const int attempts = config.max_fill_attempts;
    int passes = 0;
    for (int pass = 0; pass < attempts && next.members.size() < target; ++pass) {
        ++passes;
        const bool last_pass = (pass == attempts - 1);
        const double threshold =
            (attempts == 1 || last_pass)
                ? 0.0
                : full_threshold * static_cast<double>(attempts - 1 - pass) / (attempts - 1);
        for (std::size_t r = n_elite; r < order.size() && next.members.size() < target; ++r) {
            const std::size_t cand = order[r];
            if (taken[cand]) continue;
            bool admit = true;
            if (!last_pass) {
                for (const auto& kept : next.members) {
                    if (set_difference_distance(*pool[cand], kept) <= threshold) {
                        admit = false;
                        break;
                    }
                }
            }
            if (admit) {
                next.members.push_back(*pool[cand]);
                next.fitness.push_back(pool_fitness[cand]);
                taken[cand] = true;
            }
        }
    }
    if (stats) stats->passes_used = passes;
    return next;
}

EvolveResult evolve(int student, const Dataset& dataset, const MirtModel& model,
                    const EvolveConfig& config, const UpdateConfig& update, int test_length,
                    std::uint64_t seed, const AbilityEstimate* theta0_override,
                    std::optional<Clock::time_point> deadline) {
    config.validate();
    update.validate();
    const auto split_it = dataset.splits.find(student);
    if (split_it == dataset.splits.end()) {
        throw DataError("student " + std::to_string(student) + " has no evaluation splits");
    }
    const StudentSplit& split = split_it->second;

    std::vector<int> pool;
    std::unordered_map<int, int> responses;
    pool.reserve(split.candidate.size());
    for (const auto& it : split.candidate) {
        pool.push_back(it.question_id);
        responses.emplace(it.question_id, it.correct);
    }
    // candidate split is sorted by question id at load time

    const AbilityEstimate theta0 =
        theta0_override ? *theta0_override : init_theta0(model, dataset, student, update);

    std::unordered_map<std::vector<int>, double, GeneSetHash> memo;
    const auto fitness_of = [&](const Individual& ind) {
        std::vector<int> key = ind.genes;
        std::sort(key.begin(), key.end());
        const auto found = memo.find(key);
        if (found != memo.end()) return found->second;
        const double f =
            evaluate_fitness(ind, model, theta0, responses, split.test, update);
        memo.emplace(std::move(key), f);
        return f;
    };

    Rng rng(seed);
    const DistanceVector distances = build_distance_vector(model, theta0, pool);
    Population pop = init_population(distances, pool, config, test_length, rng.next_u64());
    for (std::size_t i = 0; i < pop.members.size(); ++i) {
        pop.fitness[i] = fitness_of(pop.members[i]);
    }

    EvolveResult result;
    const auto record_trace = [&]() {
        FitnessTracePoint pt;
        pt.best = *std::max_element(pop.fitness.begin(), pop.fitness.end());
        pt.mean = std::accumulate(pop.fitness.begin(), pop.fitness.end(), 0.0) /
                  static_cast<double>(pop.fitness.size());
        result.trace.push_back(pt);
    };
    const auto update_best = [&]() {
        for (std::size_t i = 0; i < pop.members.size(); ++i) {
            if (result.best.genes.empty() || pop.fitness[i] > result.best_fitness) {
                result.best = pop.members[i];
                result.best_fitness = pop.fitness[i];
            }
        }
    };
    record_trace();
    update_best();

    for (int g = 1; g <= config.generations; ++g) {
        if (deadline && Clock::now() >= *deadline) {
            result.timed_out = true;
            break;
        }

        std::vector<std::size_t> perm(pop.members.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);

        std::vector<Scored> offspring;
        offspring.reserve(pop.members.size());
        for (std::size_t p = 0; p + 1 < perm.size(); p += 2) {
            const Individual& pa = pop.members[perm[p]];
            const Individual& pb = pop.members[perm[p + 1]];
            Individual c1, c2;
            if (rng.real() < config.crossover_rate) {
                std::tie(c1, c2) = crossover(pa, pb, pool, rng.next_u64());
            } else {
                c1 = pa;
                c2 = pb;
            }
            c1 = mutate(c1, model, theta0, pool, config, rng.next_u64());
            c2 = mutate(c2, model, theta0, pool, config, rng.next_u64());
            offspring.push_back({std::move(c1), 0.0});
            offspring.push_back({std::move(c2), 0.0});
        }
        for (auto& s : offspring) s.fitness = fitness_of(s.ind);

        pop = environmental_selection(pop, offspring, config, test_length);
        record_trace();
        update_best();
    }
    return result;
}

}  // namespace oat
