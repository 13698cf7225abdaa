#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "oat/mirt.hpp"

namespace oat {

// One candidate test form: exactly L distinct question ids, all drawn from
// the student's candidate pool.
struct Individual {
    std::vector<int> genes;

    int length() const { return static_cast<int>(genes.size()); }
};

struct Scored {
    Individual ind;
    double fitness = 0.0;
};

// Fitness entries are NaN until evaluated.
struct Population {
    std::vector<Individual> members;
    std::vector<double> fitness;
    int generation = 0;
};

struct EvolveConfig {
    int population_size = 20;
    int generations = 15;
    double crossover_rate = 0.8;
    double mutation_rate = 0.2;
    double tau_coeff = 1.0;        // swept over {0.5, 0.75, 1.0, 1.25, 1.5}
    double diversity_base = 0.15;  // threshold T = tau_coeff * diversity_base * L
    int max_fill_attempts = 3;
    bool use_personalized_init = true;   // off = ablation w/o PI
    bool use_cognitive_operators = true; // off = ablation w/o CE
    bool use_diversity_selection = true; // off = ablation w/o ES

    double diversity_threshold(int test_length) const {
        return tau_coeff * diversity_base * test_length;
    }
    void validate() const;
};

// delta_j = ||theta0 - alpha_j||, parallel to the candidate pool it was
// built from.
struct DistanceVector {
    std::vector<double> values;
};

struct FitnessTracePoint {
    double best = 0.0;
    double mean = 0.0;
};

struct EvolveResult {
    Individual best;
    double best_fitness = 0.0;
    std::vector<FitnessTracePoint> trace;  // entry 0 = initial population
    bool timed_out = false;
};

struct SelectionStats {
    int passes_used = 0;  // 1 means the full-threshold pass filled everything
};

using Clock = std::chrono::steady_clock;

DistanceVector build_distance_vector(const MirtModel& model, const AbilityEstimate& theta0,
                                     std::span<const int> candidate_pool);

// Multi-strategy initialization: per individual one of {match, diverse, rand}
// drawn uniformly. match samples from the 2L nearest candidates, diverse from
// the 2L farthest, rand from the middle slice of the distance ordering (whole
// pool when that slice is shorter than L). With use_personalized_init off,
// every individual is a uniform draw from the whole pool.
Population init_population(const DistanceVector& distances, std::span<const int> candidate_pool,
                           const EvolveConfig& config, int test_length, std::uint64_t seed);

// Uniform crossover under a Bernoulli(0.5) positionwise mask, then repair:
// scanning left to right, a gene duplicating an earlier one is replaced by a
// uniform draw from the pool minus the child's current genes.
std::pair<Individual, Individual> crossover(const Individual& parent_a, const Individual& parent_b,
                                            std::span<const int> candidate_pool,
                                            std::uint64_t seed);

// Deterministic-mask variant for exhaustive small-case tests.
std::pair<Individual, Individual> crossover_with_mask(const Individual& parent_a,
                                                      const Individual& parent_b,
                                                      const std::vector<int>& mask,
                                                      std::span<const int> candidate_pool,
                                                      std::uint64_t repair_seed);

// With probability mutation_rate, swaps one uniformly chosen gene for a
// replacement sampled from the unselected pool Z proportionally to its
// scalar information (uniform when cognitive operators are ablated or total
// information is zero).
Individual mutate(const Individual& individual, const MirtModel& model,
                  const AbilityEstimate& theta0, std::span<const int> candidate_pool,
                  const EvolveConfig& config, std::uint64_t seed);

// Virtual update on the form's recorded responses, then (AUC + ACC) / 2 on
// the test split; ACC alone when AUC is undefined.
double evaluate_fitness(const Individual& individual, const MirtModel& model,
                        const AbilityEstimate& theta0,
                        const std::unordered_map<int, int>& candidate_responses,
                        std::span<const Interaction> test_split, const UpdateConfig& update);

// L - |intersection|; equals half the Hamming distance between the M-bit
// characteristic vectors of two equal-length forms.
int set_difference_distance(const Individual& a, const Individual& b);

// (mu + lambda) survivor choice: top-half elites by fitness, the rest
// admitted in fitness order subject to a minimum distance to everything
// already kept. Admission relaxes linearly over max_fill_attempts passes;
// the final pass drops the constraint. Pure truncation when diversity
// selection is ablated.
Population environmental_selection(const Population& parents, std::span<const Scored> offspring,
                                   const EvolveConfig& config, int test_length,
                                   SelectionStats* stats = nullptr);

// Full per-student search. theta0_override skips the internal warm start
// (used by the tau sweep to share ability estimates across runs); deadline,
// when set, stops the generational loop early and flags the result.
EvolveResult evolve(int student, const Dataset& dataset, const MirtModel& model,
                    const EvolveConfig& config, const UpdateConfig& update, int test_length,
                    std::uint64_t seed, const AbilityEstimate* theta0_override = nullptr,
                    std::optional<Clock::time_point> deadline = std::nullopt);

}  // namespace oat
