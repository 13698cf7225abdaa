#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oat/baselines.hpp"
#include "oat/dataset.hpp"
#include "oat/mirt.hpp"
#include "oat/peoat.hpp"

namespace oat {

struct DataConfig {
    enum class Mode { synthetic, files };
    Mode mode = Mode::synthetic;
    SynthSpec synth;
    std::string interactions_path;
    std::string qmatrix_path;
    SplitConfig split;
};

struct ExperimentConfig {
    DataConfig data;
    SelectorKind selector = SelectorKind::peoat;
    std::vector<int> test_lengths{5, 10, 15, 20};
    EvolveConfig evolve;
    PretrainConfig pretrain;
    double update_learning_rate = 0.02;
    double probability_clip = 1e-6;
    UpdateConfig theta0_update = default_theta0_update();
    std::vector<double> tau_sweep{0.5, 0.75, 1.0, 1.25, 1.5};
    std::uint64_t master_seed = 42;
    int workers = 1;
    std::string output_dir;
    std::string checkpoint_path;  // optional pretrained model to load
    double student_timeout_seconds = 60.0;
    int max_eval_students = 0;  // 0 = all

    void validate() const;
    UpdateConfig update_for(int test_length) const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json experiment_config_json(const ExperimentConfig& config);

// FNV-1a over the canonical config dump, minus scheduling-only fields
// (workers, output paths), so one hash identifies one experiment.
std::string config_hash(const ExperimentConfig& config);

// Dataset and pretraining-seed derivation shared by run_experiment and the
// CLI's pretrain subcommand.
Dataset build_experiment_dataset(const ExperimentConfig& config);
std::uint64_t pretrain_seed(const ExperimentConfig& config);

struct StudentRecord {
    int student_id = 0;
    int test_length = 0;
    std::string selector;
    double acc = 0.0;
    std::optional<double> auc;
    double fitness_at_selection = 0.0;
    bool timed_out = false;
};

struct TraceRecord {
    int student_id = 0;
    int test_length = 0;
    int generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
};

struct Aggregate {
    std::string selector;
    int test_length = 0;
    int n_students = 0;
    int n_auc_defined = 0;
    double mean_acc = 0.0;
    double mean_auc = 0.0;  // over students with defined AUC
    double pooled_acc = 0.0;
    std::optional<double> pooled_auc;  // predictions pooled across students
};

struct OatReport {
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::string kernel;
    bool partial = false;
    double wall_time_seconds = 0.0;
    std::vector<StudentRecord> per_student;
    std::vector<TraceRecord> traces;  // evolutionary selectors only
    std::vector<Aggregate> aggregates;
};

nlohmann::json report_json(const OatReport& report);

// Runs the full protocol: data, pretraining, one-shot selection per
// (evaluation student, L), a single virtual update on the selected responses
// and test-split scoring. Writes report.json / per_student.csv /
// fitness_trace.csv under output_dir when set. Reproducible from
// (config, master_seed) regardless of worker count.
OatReport run_experiment(const ExperimentConfig& config);

// One run per tau_sweep coefficient with shared dataset, model and ability
// estimates; writes tau_sweep.csv plus per-tau subdirectories.
std::vector<OatReport> run_tau_sweep(const ExperimentConfig& config);

}  // namespace oat
