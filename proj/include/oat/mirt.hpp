#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oat/dataset.hpp"

namespace oat {

// Row-major dense matrix, just enough for ability/difficulty tables.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    std::span<double> row(int i) {
        return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const double> row(int i) const {
        return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
    }
};

// A single student's ability vector, detached from the model.
using AbilityEstimate = std::vector<double>;

// Multidimensional IRT: p = sigmoid(theta . alpha). Immutable after
// pretraining; predict / fisher / virtual updates are pure over shared state.
struct MirtModel {
    Matrix theta;  // n_students x dim
    Matrix alpha;  // n_questions x dim
    int dim = 0;
};

struct UpdateConfig {
    double learning_rate = 0.02;
    int epochs = 16;  // for_length(10)
    double probability_clip = 1e-6;

    // ceil(5 * sqrt(L)) epochs for a test of length L.
    static UpdateConfig for_length(int test_length, double lr = 0.02, double clip = 1e-6);
    void validate() const;
};

// The train-split warm start needs more steps than a length-L virtual
// update; 50 full-batch epochs on ~30 interactions personalizes theta0
// without drifting off the pretrain anchor.
inline UpdateConfig default_theta0_update() { return UpdateConfig{0.02, 50, 1e-6}; }

struct PretrainConfig {
    double learning_rate = 0.02;
    int epochs = 20;
    int batch_size = 256;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    // Used to place evaluation students' theta rows after item fitting.
    UpdateConfig theta0 = default_theta0_update();

    void validate() const;
};

double sigmoid(double x);

// sigmoid(theta . alpha_j), no clipping.
double predict_raw(const MirtModel& model, std::span<const double> theta, int question_id);

// Clipped to [clip, 1 - clip] for log-loss stability.
double predict(const MirtModel& model, std::span<const double> theta, int question_id,
               double clip = 1e-6);

// Mean binary cross-entropy of the (probability, label) pairs; probabilities
// clipped before the logs.
double bce_loss(std::span<const double> probs, std::span<const int> labels, double clip = 1e-6);

// Fits all item rows and pretrain students' ability rows by Adam on
// mini-batch BCE, then writes each evaluation student's theta row from
// init_theta0. epoch_losses, when given, receives the per-epoch mean loss.
MirtModel pretrain(const Dataset& dataset, const PretrainConfig& config, std::uint64_t seed,
                   std::vector<double>* epoch_losses = nullptr);

// Mean ability over pretrain students, the cold-start anchor.
AbilityEstimate pretrain_mean_theta(const MirtModel& model, const Dataset& dataset);

// theta0: pretrain-mean warm start refined by full-batch gradient steps on
// the student's train split. Empty train split returns the mean unchanged.
AbilityEstimate init_theta0(const MirtModel& model, const Dataset& dataset, int student,
                            const UpdateConfig& config);

// `epochs` full-batch gradient descent steps on BCE over `responses`, items
// frozen. Operates on a detached copy; neither theta0 nor the model changes.
AbilityEstimate virtual_update(const MirtModel& model, const AbilityEstimate& theta0,
                               std::span<const std::pair<int, int>> responses,
                               const UpdateConfig& config);

// Scalar information proxy: ||alpha_j||^2 * p * (1 - p), unclipped p.
double fisher_scalar(const MirtModel& model, std::span<const double> theta, int question_id);

// Fraction of (p >= 0.5) == label. Ties at 0.5 classify as 1.
double metric_acc(std::span<const double> predictions, std::span<const int> labels);

// Mann-Whitney rank AUC, ties count 0.5. nullopt when only one class present.
std::optional<double> metric_auc(std::span<const double> predictions,
                                 std::span<const int> labels);

// JSON checkpoint; doubles round-trip bit-exactly.
void save_checkpoint(const MirtModel& model, const PretrainConfig& config, std::uint64_t seed,
                     const std::string& path);
MirtModel load_checkpoint(const std::string& path);

}  // namespace oat
