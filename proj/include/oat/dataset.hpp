#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oat/errors.hpp"

namespace oat {

// One observed response. Pairs (student_id, question_id) are unique within a
// dataset; correct is 0 or 1.
struct Interaction {
    int student_id = 0;
    int question_id = 0;
    int correct = 0;
};

// Binary question-by-concept incidence matrix, row-major. Every row tags at
// least one concept.
struct QMatrix {
    int n_questions = 0;
    int n_concepts = 0;
    std::vector<std::uint8_t> entries;

    std::uint8_t at(int question, int concept_id) const {
        return entries[static_cast<std::size_t>(question) * n_concepts + concept_id];
    }
};

// Per-student partition of interactions. Question-id sets are pairwise
// disjoint; candidate questions keep their recorded responses and form the
// pool eligible for one-shot selection; test is the held-out evaluation set.
struct StudentSplit {
    std::vector<Interaction> train;
    std::vector<Interaction> candidate;
    std::vector<Interaction> test;
};

struct SplitConfig {
    double train_ratio = 0.2;
    double candidate_ratio = 0.6;
    double test_ratio = 0.2;
    std::uint64_t seed = 0;
    // 0 means auto: max(50, 4 * max_test_length + min_test).
    int min_interactions = 0;
    int max_test_length = 20;  // largest L the splits must support
    int min_test = 5;
    double pretrain_fraction = 0.7;

    int effective_min_interactions() const;
    void validate() const;
};

struct LoadReport {
    int students_seen = 0;
    int dropped_min_interactions = 0;
    int dropped_split_minima = 0;
    int pretrain_students = 0;
    int eval_students = 0;
};

struct Dataset {
    int n_students = 0;
    int n_questions = 0;
    int n_concepts = 0;
    QMatrix q_matrix;
    // Evaluation students only; pretrain students contribute all their
    // interactions to item-parameter fitting and are never evaluated.
    std::map<int, StudentSplit> splits;
    std::vector<int> pretrain_students;  // sorted
    std::vector<int> eval_students;      // sorted, == keys of splits
    std::vector<Interaction> pretrain_interactions;
    LoadReport load_report;
};

struct SynthSpec {
    int n_students = 200;
    int n_questions = 300;
    int n_concepts = 8;
    int interactions_per_student = 150;
};

// Hidden parameters behind a synthetic dataset, for oracle checks.
struct GroundTruth {
    int dim = 0;
    std::vector<double> theta_star;  // n_students x dim, row-major
    std::vector<double> alpha_star;  // n_questions x dim, row-major
    double mean_model_prob = 0.0;    // mean of sigmoid(theta*.alpha*) over generated pairs

    const double* theta_row(int student) const {
        return theta_star.data() + static_cast<std::size_t>(student) * dim;
    }
    const double* alpha_row(int question) const {
        return alpha_star.data() + static_cast<std::size_t>(question) * dim;
    }
};

// CSV ingestion. Interactions file: header `student_id,question_id,correct`.
// Q-matrix file: one row per question, n_concepts binary fields.
Dataset load_dataset(const std::string& interactions_path, const std::string& qmatrix_path,
                     const SplitConfig& config);

// Same split pipeline over in-memory rows (used by load, synthesis and tests).
Dataset assemble_dataset(std::vector<Interaction> interactions, QMatrix q_matrix,
                         const SplitConfig& config);

std::pair<Dataset, GroundTruth> synthesize_dataset(const SynthSpec& spec, std::uint64_t seed,
                                                   SplitConfig config = SplitConfig{});

void write_interactions_csv(const std::vector<Interaction>& interactions,
                            const std::string& path);
void write_qmatrix_csv(const QMatrix& q, const std::string& path);

// Raw synthetic draw before splitting, for the synth CLI subcommand.
struct SynthRaw {
    std::vector<Interaction> interactions;
    QMatrix q_matrix;
    GroundTruth truth;
};
SynthRaw synthesize_raw(const SynthSpec& spec, std::uint64_t seed);

}  // namespace oat
