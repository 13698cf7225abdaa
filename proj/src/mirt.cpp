#include "oat/mirt.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "oat/errors.hpp"
#include "oat/kernels.hpp"
#include "oat/rng.hpp"

namespace oat {

namespace {

constexpr std::uint64_t kXavierStream = 201;
constexpr std::uint64_t kBatchStream = 202;

double clipped(double p, double clip) { return std::min(1.0 - clip, std::max(clip, p)); }

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

UpdateConfig UpdateConfig::for_length(int test_length, double lr, double clip) {
    UpdateConfig c;
    c.learning_rate = lr;
    c.epochs = static_cast<int>(std::ceil(5.0 * std::sqrt(static_cast<double>(test_length))));
    c.probability_clip = clip;
    return c;
}

void UpdateConfig::validate() const {
    if (learning_rate <= 0.0 || learning_rate >= 1.0) {
        throw ConfigError("update learning_rate must be in (0, 1)");
    }
    if (epochs < 1) throw ConfigError("update epochs must be >= 1");
    if (probability_clip <= 0.0 || probability_clip >= 0.01) {
        throw ConfigError("probability_clip must be in (0, 0.01)");
    }
}

void PretrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("pretrain learning_rate must be positive");
    if (epochs < 1) throw ConfigError("pretrain epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("pretrain batch_size must be >= 1");
    theta0.validate();
}

double predict_raw(const MirtModel& model, std::span<const double> theta, int question_id) {
    return sigmoid(kernels::dot(theta, model.alpha.row(question_id)));
}

double predict(const MirtModel& model, std::span<const double> theta, int question_id,
               double clip) {
    return clipped(predict_raw(model, theta, question_id), clip);
}

double bce_loss(std::span<const double> probs, std::span<const int> labels, double clip) {
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = clipped(probs[i], clip);
        total += labels[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(probs.size());
}

namespace {

// Dense Adam state over one parameter matrix.
struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double>& params, std::vector<double>& grads, AdamState& state,
               const PretrainConfig& cfg, int t) {
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = cfg.adam_beta1 * state.m[i] + (1.0 - cfg.adam_beta1) * g;
        state.v[i] = cfg.adam_beta2 * state.v[i] + (1.0 - cfg.adam_beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        grads[i] = 0.0;
    }
}

void xavier_fill(Matrix& mat, Rng& rng) {
    const double bound = std::sqrt(6.0 / (mat.rows + mat.cols));
    for (auto& v : mat.data) v = (2.0 * rng.real() - 1.0) * bound;
}

}  // namespace

MirtModel pretrain(const Dataset& dataset, const PretrainConfig& config, std::uint64_t seed,
                   std::vector<double>* epoch_losses) {
    config.validate();
    if (dataset.pretrain_students.empty()) {
        throw DataError("pretrain student set is empty");
    }

    MirtModel model;
    model.dim = dataset.n_concepts;
    model.theta = Matrix(dataset.n_students, model.dim);
    model.alpha = Matrix(dataset.n_questions, model.dim);

    Rng init_rng(mix_seed(seed, kXavierStream));
    xavier_fill(model.theta, init_rng);
    xavier_fill(model.alpha, init_rng);

    const auto& rows = dataset.pretrain_interactions;
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    AdamState theta_state(model.theta.data.size());
    AdamState alpha_state(model.alpha.data.size());
    std::vector<double> theta_grad(model.theta.data.size(), 0.0);
    std::vector<double> alpha_grad(model.alpha.data.size(), 0.0);

    Rng batch_rng(mix_seed(seed, kBatchStream));
    const int d = model.dim;
    int step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        batch_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const Interaction& it = rows[order[k]];
                const auto theta_row = model.theta.row(it.student_id);
                const auto alpha_row = model.alpha.row(it.question_id);
                const double p = sigmoid(kernels::dot(theta_row, alpha_row));
                const double pc = clipped(p, config.theta0.probability_clip);
                batch_loss += it.correct ? -std::log(pc) : -std::log(1.0 - pc);
                const double g = (p - it.correct) * inv_batch;
                kernels::axpy(g, alpha_row,
                              {theta_grad.data() +
                                   static_cast<std::size_t>(it.student_id) * d,
                               static_cast<std::size_t>(d)});
                kernels::axpy(g, theta_row,
                              {alpha_grad.data() +
                                   static_cast<std::size_t>(it.question_id) * d,
                               static_cast<std::size_t>(d)});
            }
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("pretrain loss is not finite (divergent learning rate?)");
            }
            ++step;
            adam_step(model.theta.data, theta_grad, theta_state, config, step);
            adam_step(model.alpha.data, alpha_grad, alpha_state, config, step);
            epoch_loss += batch_loss;
        }
        if (epoch_losses) epoch_losses->push_back(epoch_loss / rows.size());
    }

    // Evaluation students start cold: warm-start rows from the pretrain mean
    // refined on their train split.
    for (int sid : dataset.eval_students) {
        const AbilityEstimate theta0 = init_theta0(model, dataset, sid, config.theta0);
        std::copy(theta0.begin(), theta0.end(), model.theta.row(sid).begin());
    }
    return model;
}

AbilityEstimate pretrain_mean_theta(const MirtModel& model, const Dataset& dataset) {
    if (dataset.pretrain_students.empty()) {
        throw DataError("pretrain student set is empty");
    }
    AbilityEstimate mean(model.dim, 0.0);
    for (int sid : dataset.pretrain_students) {
        kernels::axpy(1.0, model.theta.row(sid), mean);
    }
    const double inv = 1.0 / static_cast<double>(dataset.pretrain_students.size());
    for (auto& v : mean) v *= inv;
    return mean;
}

AbilityEstimate init_theta0(const MirtModel& model, const Dataset& dataset, int student,
                            const UpdateConfig& config) {
    AbilityEstimate start = pretrain_mean_theta(model, dataset);
    const auto split_it = dataset.splits.find(student);
    if (split_it == dataset.splits.end()) {
        throw DataError("student " + std::to_string(student) + " has no evaluation splits");
    }
    const auto& train = split_it->second.train;
    if (train.empty()) return start;

    std::vector<std::pair<int, int>> responses;
    responses.reserve(train.size());
    for (const auto& it : train) responses.emplace_back(it.question_id, it.correct);
    return virtual_update(model, start, responses, config);
}

AbilityEstimate virtual_update(const MirtModel& model, const AbilityEstimate& theta0,
                               std::span<const std::pair<int, int>> responses,
                               const UpdateConfig& config) {
    config.validate();
    if (responses.empty()) throw DataError("virtual_update requires at least one response");

    AbilityEstimate theta = theta0;
    std::vector<double> grad(theta.size());
    const double inv_n = 1.0 / static_cast<double>(responses.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (const auto& [question_id, r] : responses) {
            const double p = predict_raw(model, theta, question_id);
            kernels::axpy((p - r) * inv_n, model.alpha.row(question_id), grad);
        }
        kernels::axpy(-config.learning_rate, grad, theta);
    }
    return theta;
}

double fisher_scalar(const MirtModel& model, std::span<const double> theta, int question_id) {
    const auto alpha_row = model.alpha.row(question_id);
    const double p = sigmoid(kernels::dot(theta, alpha_row));
    return kernels::norm_sq(alpha_row) * p * (1.0 - p);
}

double metric_acc(std::span<const double> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw DataError("metric_acc: length mismatch or empty input");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int predicted = predictions[i] >= 0.5 ? 1 : 0;
        hits += (predicted == labels[i]);
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::optional<double> metric_auc(std::span<const double> predictions,
                                 std::span<const int> labels) {
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw DataError("metric_auc: length mismatch or empty input");
    }
    const std::size_t n = predictions.size();
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n; ++i) n_pos += (labels[i] == 1);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });

    // Midranks make tied pairs count exactly 0.5.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && predictions[idx[j + 1]] == predictions[idx[i]]) ++j;
        const double mid_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[idx[k]] == 1) rank_sum_pos += mid_rank;
        }
        i = j + 1;
    }
    const double pos = static_cast<double>(n_pos);
    return (rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * static_cast<double>(n_neg));
}

void save_checkpoint(const MirtModel& model, const PretrainConfig& config, std::uint64_t seed,
                     const std::string& path) {
    nlohmann::json j;
    j["dim"] = model.dim;
    j["n_students"] = model.theta.rows;
    j["n_questions"] = model.alpha.rows;
    j["theta"] = model.theta.data;
    j["alpha"] = model.alpha.data;
    j["pretrain"] = {{"learning_rate", config.learning_rate},
                     {"epochs", config.epochs},
                     {"batch_size", config.batch_size}};
    j["seed"] = seed;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << j.dump(2) << '\n';
}

MirtModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint parse error in " + path + ": " + e.what());
    }
    MirtModel model;
    try {
        model.dim = j.at("dim").get<int>();
        model.theta = Matrix(j.at("n_students").get<int>(), model.dim);
        model.alpha = Matrix(j.at("n_questions").get<int>(), model.dim);
        model.theta.data = j.at("theta").get<std::vector<double>>();
        model.alpha.data = j.at("alpha").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint field error in " + path + ": " + e.what());
    }
    if (model.theta.data.size() != static_cast<std::size_t>(model.theta.rows) * model.dim ||
        model.alpha.data.size() != static_cast<std::size_t>(model.alpha.rows) * model.dim) {
        throw DataError("checkpoint matrix sizes are inconsistent: " + path);
    }
    return model;
}

}  // namespace oat
