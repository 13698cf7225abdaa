#include "oat/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "oat/errors.hpp"
#include "oat/kernels.hpp"
#include "oat/rng.hpp"

namespace oat {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr std::uint64_t kDataStream = 301;
constexpr std::uint64_t kFileSplitStream = 302;
constexpr std::uint64_t kPretrainStream = 303;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end()) {
            throw ConfigError("unknown config key '" + key + "' in " + context);
        }
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

SplitConfig parse_split(const json& j) {
    check_keys(j,
               {"train_ratio", "candidate_ratio", "test_ratio", "seed", "min_interactions",
                "max_test_length", "min_test", "pretrain_fraction"},
               "data.split");
    SplitConfig s;
    s.train_ratio = get_or(j, "train_ratio", s.train_ratio);
    s.candidate_ratio = get_or(j, "candidate_ratio", s.candidate_ratio);
    s.test_ratio = get_or(j, "test_ratio", s.test_ratio);
    s.seed = get_or(j, "seed", s.seed);
    s.min_interactions = get_or(j, "min_interactions", s.min_interactions);
    s.max_test_length = get_or(j, "max_test_length", s.max_test_length);
    s.min_test = get_or(j, "min_test", s.min_test);
    s.pretrain_fraction = get_or(j, "pretrain_fraction", s.pretrain_fraction);
    return s;
}

SynthSpec parse_synth(const json& j) {
    check_keys(j, {"n_students", "n_questions", "n_concepts", "interactions_per_student"},
               "data.synth");
    SynthSpec s;
    s.n_students = get_or(j, "n_students", s.n_students);
    s.n_questions = get_or(j, "n_questions", s.n_questions);
    s.n_concepts = get_or(j, "n_concepts", s.n_concepts);
    s.interactions_per_student = get_or(j, "interactions_per_student",
                                        s.interactions_per_student);
    return s;
}

EvolveConfig parse_evolve(const json& j) {
    check_keys(j,
               {"population_size", "generations", "crossover_rate", "mutation_rate", "tau_coeff",
                "diversity_base", "max_fill_attempts", "use_personalized_init",
                "use_cognitive_operators", "use_diversity_selection"},
               "evolve");
    EvolveConfig e;
    e.population_size = get_or(j, "population_size", e.population_size);
    e.generations = get_or(j, "generations", e.generations);
    e.crossover_rate = get_or(j, "crossover_rate", e.crossover_rate);
    e.mutation_rate = get_or(j, "mutation_rate", e.mutation_rate);
    e.tau_coeff = get_or(j, "tau_coeff", e.tau_coeff);
    e.diversity_base = get_or(j, "diversity_base", e.diversity_base);
    e.max_fill_attempts = get_or(j, "max_fill_attempts", e.max_fill_attempts);
    e.use_personalized_init = get_or(j, "use_personalized_init", e.use_personalized_init);
    e.use_cognitive_operators = get_or(j, "use_cognitive_operators", e.use_cognitive_operators);
    e.use_diversity_selection = get_or(j, "use_diversity_selection", e.use_diversity_selection);
    return e;
}

PretrainConfig parse_pretrain(const json& j) {
    check_keys(j, {"learning_rate", "epochs", "batch_size"}, "pretrain");
    PretrainConfig p;
    p.learning_rate = get_or(j, "learning_rate", p.learning_rate);
    p.epochs = get_or(j, "epochs", p.epochs);
    p.batch_size = get_or(j, "batch_size", p.batch_size);
    return p;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (test_lengths.empty()) throw ConfigError("test_lengths must be nonempty");
    for (int L : test_lengths) {
        if (L < 1) throw ConfigError("test lengths must be >= 1");
        if (L > data.split.max_test_length) {
            throw ConfigError("test length " + std::to_string(L) +
                              " exceeds data.split.max_test_length");
        }
    }
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (student_timeout_seconds < 0) throw ConfigError("student_timeout_seconds must be >= 0");
    if (max_eval_students < 0) throw ConfigError("max_eval_students must be >= 0");
    if (update_learning_rate <= 0 || update_learning_rate >= 1) {
        throw ConfigError("update.learning_rate must be in (0, 1)");
    }
    if (tau_sweep.empty()) throw ConfigError("tau_sweep must be nonempty");
    data.split.validate();
    evolve.validate();
    pretrain.validate();
    theta0_update.validate();
    if (data.mode == DataConfig::Mode::files) {
        if (!fs::exists(data.interactions_path)) {
            throw ConfigError("interactions path does not exist: " + data.interactions_path);
        }
        if (!fs::exists(data.qmatrix_path)) {
            throw ConfigError("qmatrix path does not exist: " + data.qmatrix_path);
        }
    }
    if (!checkpoint_path.empty() && !fs::exists(checkpoint_path)) {
        throw ConfigError("checkpoint path does not exist: " + checkpoint_path);
    }
}

UpdateConfig ExperimentConfig::update_for(int test_length) const {
    return UpdateConfig::for_length(test_length, update_learning_rate, probability_clip);
}

ExperimentConfig parse_experiment_config(const json& j) {
    check_keys(j,
               {"data", "selector", "test_lengths", "evolve", "update", "theta0", "pretrain",
                "tau_sweep", "master_seed", "workers", "output_dir", "checkpoint",
                "student_timeout_seconds", "max_eval_students"},
               "config");
    ExperimentConfig c;
    if (j.contains("data")) {
        const json& d = j.at("data");
        check_keys(d, {"mode", "synth", "interactions", "qmatrix", "split"}, "data");
        const std::string mode = get_or<std::string>(d, "mode", "synthetic");
        if (mode == "synthetic") {
            c.data.mode = DataConfig::Mode::synthetic;
        } else if (mode == "files") {
            c.data.mode = DataConfig::Mode::files;
        } else {
            throw ConfigError("data.mode must be 'synthetic' or 'files'");
        }
        if (d.contains("synth")) c.data.synth = parse_synth(d.at("synth"));
        c.data.interactions_path = get_or<std::string>(d, "interactions", "");
        c.data.qmatrix_path = get_or<std::string>(d, "qmatrix", "");
        if (d.contains("split")) c.data.split = parse_split(d.at("split"));
    }
    c.selector = parse_selector(get_or<std::string>(j, "selector", "peoat"));
    c.test_lengths = get_or(j, "test_lengths", c.test_lengths);
    if (j.contains("evolve")) c.evolve = parse_evolve(j.at("evolve"));
    if (j.contains("update")) {
        const json& u = j.at("update");
        check_keys(u, {"learning_rate", "probability_clip"}, "update");
        c.update_learning_rate = get_or(u, "learning_rate", c.update_learning_rate);
        c.probability_clip = get_or(u, "probability_clip", c.probability_clip);
    }
    if (j.contains("theta0")) {
        const json& t = j.at("theta0");
        check_keys(t, {"learning_rate", "epochs"}, "theta0");
        c.theta0_update.learning_rate = get_or(t, "learning_rate", c.theta0_update.learning_rate);
        c.theta0_update.epochs = get_or(t, "epochs", c.theta0_update.epochs);
    }
    c.theta0_update.probability_clip = c.probability_clip;
    if (j.contains("pretrain")) c.pretrain = parse_pretrain(j.at("pretrain"));
    c.pretrain.theta0 = c.theta0_update;
    c.tau_sweep = get_or(j, "tau_sweep", c.tau_sweep);
    c.master_seed = get_or(j, "master_seed", c.master_seed);
    c.workers = get_or(j, "workers", c.workers);
    c.output_dir = get_or<std::string>(j, "output_dir", "");
    c.checkpoint_path = get_or<std::string>(j, "checkpoint", "");
    c.student_timeout_seconds = get_or(j, "student_timeout_seconds", c.student_timeout_seconds);
    c.max_eval_students = get_or(j, "max_eval_students", c.max_eval_students);
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_experiment_config(j);
}

json experiment_config_json(const ExperimentConfig& c) {
    json j;
    j["data"]["mode"] = c.data.mode == DataConfig::Mode::synthetic ? "synthetic" : "files";
    j["data"]["synth"] = {{"n_students", c.data.synth.n_students},
                          {"n_questions", c.data.synth.n_questions},
                          {"n_concepts", c.data.synth.n_concepts},
                          {"interactions_per_student", c.data.synth.interactions_per_student}};
    j["data"]["interactions"] = c.data.interactions_path;
    j["data"]["qmatrix"] = c.data.qmatrix_path;
    j["data"]["split"] = {{"train_ratio", c.data.split.train_ratio},
                          {"candidate_ratio", c.data.split.candidate_ratio},
                          {"test_ratio", c.data.split.test_ratio},
                          {"seed", c.data.split.seed},
                          {"min_interactions", c.data.split.min_interactions},
                          {"max_test_length", c.data.split.max_test_length},
                          {"min_test", c.data.split.min_test},
                          {"pretrain_fraction", c.data.split.pretrain_fraction}};
    j["selector"] = selector_name(c.selector);
    j["test_lengths"] = c.test_lengths;
    j["evolve"] = {{"population_size", c.evolve.population_size},
                   {"generations", c.evolve.generations},
                   {"crossover_rate", c.evolve.crossover_rate},
                   {"mutation_rate", c.evolve.mutation_rate},
                   {"tau_coeff", c.evolve.tau_coeff},
                   {"diversity_base", c.evolve.diversity_base},
                   {"max_fill_attempts", c.evolve.max_fill_attempts},
                   {"use_personalized_init", c.evolve.use_personalized_init},
                   {"use_cognitive_operators", c.evolve.use_cognitive_operators},
                   {"use_diversity_selection", c.evolve.use_diversity_selection}};
    j["update"] = {{"learning_rate", c.update_learning_rate},
                   {"probability_clip", c.probability_clip}};
    j["theta0"] = {{"learning_rate", c.theta0_update.learning_rate},
                   {"epochs", c.theta0_update.epochs}};
    j["pretrain"] = {{"learning_rate", c.pretrain.learning_rate},
                     {"epochs", c.pretrain.epochs},
                     {"batch_size", c.pretrain.batch_size}};
    j["tau_sweep"] = c.tau_sweep;
    j["master_seed"] = c.master_seed;
    j["workers"] = c.workers;
    j["output_dir"] = c.output_dir;
    j["checkpoint"] = c.checkpoint_path;
    j["student_timeout_seconds"] = c.student_timeout_seconds;
    j["max_eval_students"] = c.max_eval_students;
    return j;
}

std::string config_hash(const ExperimentConfig& config) {
    json j = experiment_config_json(config);
    // Scheduling and output location do not change the experiment.
    j.erase("workers");
    j.erase("output_dir");
    j.erase("master_seed");
    const std::string dump = j.dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

struct Task {
    int student_id = 0;
    int test_length = 0;
};

struct TaskResult {
    bool ok = false;
    std::string error;
    StudentRecord record;
    std::vector<TraceRecord> traces;
    std::vector<double> predictions;
    std::vector<int> labels;
};

struct SharedInputs {
    const Dataset* dataset = nullptr;
    const MirtModel* model = nullptr;
    // student_id -> precomputed theta0 (tau sweep sharing)
    const std::map<int, AbilityEstimate>* theta0_cache = nullptr;
};

TaskResult run_task(const ExperimentConfig& cfg, const SharedInputs& shared, const Task& task) {
    const Dataset& ds = *shared.dataset;
    const MirtModel& model = *shared.model;
    const int sid = task.student_id;
    const int L = task.test_length;
    const std::uint64_t seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(sid),
                                           static_cast<std::uint64_t>(L));
    const UpdateConfig update = cfg.update_for(L);
    const StudentSplit& split = ds.splits.at(sid);

    std::vector<int> pool;
    std::unordered_map<int, int> responses;
    pool.reserve(split.candidate.size());
    for (const auto& it : split.candidate) {
        pool.push_back(it.question_id);
        responses.emplace(it.question_id, it.correct);
    }

    AbilityEstimate theta0;
    if (shared.theta0_cache) {
        theta0 = shared.theta0_cache->at(sid);
    } else {
        theta0 = init_theta0(model, ds, sid, cfg.theta0_update);
    }

    TaskResult out;
    out.record.student_id = sid;
    out.record.test_length = L;
    out.record.selector = selector_name(cfg.selector);

    Individual selected;
    switch (cfg.selector) {
        case SelectorKind::random_select:
            selected = select_random(pool, L, seed);
            out.record.fitness_at_selection =
                evaluate_fitness(selected, model, theta0, responses, split.test, update);
            break;
        case SelectorKind::greedy_fisher:
            selected = select_greedy_fisher(model, theta0, pool, L);
            out.record.fitness_at_selection =
                evaluate_fitness(selected, model, theta0, responses, split.test, update);
            break;
        case SelectorKind::peoat_basic:
        case SelectorKind::peoat: {
            EvolveConfig evo = cfg.evolve;
            if (cfg.selector == SelectorKind::peoat_basic) {
                evo.use_personalized_init = false;
                evo.use_cognitive_operators = false;
                evo.use_diversity_selection = false;
            }
            std::optional<Clock::time_point> deadline;
            if (cfg.student_timeout_seconds > 0) {
                deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                              std::chrono::duration<double>(
                                                  cfg.student_timeout_seconds));
            }
            EvolveResult res =
                evolve(sid, ds, model, evo, update, L, seed, &theta0, deadline);
            selected = std::move(res.best);
            out.record.fitness_at_selection = res.best_fitness;
            out.record.timed_out = res.timed_out;
            for (std::size_t g = 0; g < res.trace.size(); ++g) {
                out.traces.push_back({sid, L, static_cast<int>(g), res.trace[g].best,
                                      res.trace[g].mean});
            }
            break;
        }
    }

    // The single final ability update: exactly the L selected responses, no
    // other feedback path.
    std::vector<std::pair<int, int>> final_responses;
    final_responses.reserve(selected.genes.size());
    for (int gene : selected.genes) final_responses.emplace_back(gene, responses.at(gene));
    const AbilityEstimate theta_final = virtual_update(model, theta0, final_responses, update);

    out.predictions.reserve(split.test.size());
    out.labels.reserve(split.test.size());
    for (const auto& it : split.test) {
        out.predictions.push_back(
            predict(model, theta_final, it.question_id, cfg.probability_clip));
        out.labels.push_back(it.correct);
    }
    out.record.acc = metric_acc(out.predictions, out.labels);
    out.record.auc = metric_auc(out.predictions, out.labels);
    out.ok = true;
    return out;
}

std::vector<Aggregate> build_aggregates(const ExperimentConfig& cfg,
                                        const std::vector<TaskResult>& results) {
    std::vector<Aggregate> aggregates;
    for (int L : cfg.test_lengths) {
        Aggregate agg;
        agg.selector = selector_name(cfg.selector);
        agg.test_length = L;
        double acc_sum = 0.0, auc_sum = 0.0;
        std::vector<double> pooled_preds;
        std::vector<int> pooled_labels;
        for (const auto& r : results) {
            if (r.record.test_length != L) continue;
            ++agg.n_students;
            acc_sum += r.record.acc;
            if (r.record.auc) {
                ++agg.n_auc_defined;
                auc_sum += *r.record.auc;
            }
            pooled_preds.insert(pooled_preds.end(), r.predictions.begin(), r.predictions.end());
            pooled_labels.insert(pooled_labels.end(), r.labels.begin(), r.labels.end());
        }
        if (agg.n_students == 0) continue;
        agg.mean_acc = acc_sum / agg.n_students;
        agg.mean_auc = agg.n_auc_defined ? auc_sum / agg.n_auc_defined : 0.0;
        agg.pooled_acc = metric_acc(pooled_preds, pooled_labels);
        agg.pooled_auc = metric_auc(pooled_preds, pooled_labels);
        aggregates.push_back(std::move(agg));
    }
    return aggregates;
}

void write_csv_reports(const OatReport& report, const std::string& dir) {
    {
        std::ofstream out(fs::path(dir) / "per_student.csv");
        out << "student_id,L,selector,acc,auc,fitness_at_selection,timed_out\n";
        for (const auto& r : report.per_student) {
            out << r.student_id << ',' << r.test_length << ',' << r.selector << ','
                << fmt_double(r.acc) << ',' << (r.auc ? fmt_double(*r.auc) : std::string{})
                << ',' << fmt_double(r.fitness_at_selection) << ',' << (r.timed_out ? 1 : 0)
                << '\n';
        }
    }
    if (!report.traces.empty()) {
        std::ofstream out(fs::path(dir) / "fitness_trace.csv");
        out << "student_id,L,generation,best_fitness,mean_fitness\n";
        for (const auto& t : report.traces) {
            out << t.student_id << ',' << t.test_length << ',' << t.generation << ','
                << fmt_double(t.best_fitness) << ',' << fmt_double(t.mean_fitness) << '\n';
        }
    }
}

void write_report_files(const OatReport& report, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / "report.json");
    out << report_json(report).dump(2) << '\n';
    write_csv_reports(report, dir);
}

OatReport run_with_shared(const ExperimentConfig& cfg, const SharedInputs& shared) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset& ds = *shared.dataset;

    std::vector<int> students = ds.eval_students;
    if (cfg.max_eval_students > 0 &&
        static_cast<int>(students.size()) > cfg.max_eval_students) {
        students.resize(cfg.max_eval_students);
    }
    if (students.empty()) throw DataError("no evaluable students");

    std::vector<Task> tasks;
    for (int L : cfg.test_lengths) {
        for (int sid : students) tasks.push_back({sid, L});
    }

    std::vector<TaskResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    const int n_workers = std::min<int>(cfg.workers, static_cast<int>(tasks.size()));
    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            try {
                results[i] = run_task(cfg, shared, tasks[i]);
            } catch (const std::exception& e) {
                results[i].ok = false;
                results[i].error = "student " + std::to_string(tasks[i].student_id) + ", L=" +
                                   std::to_string(tasks[i].test_length) + ": " + e.what();
            }
        }
    };
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    OatReport report;
    report.config_hash = config_hash(cfg);
    report.master_seed = cfg.master_seed;
    report.kernel = std::string(kernels::active_backend_name());

    std::string first_error;
    std::vector<TaskResult> ok_results;
    for (auto& r : results) {
        if (r.ok) {
            ok_results.push_back(std::move(r));
        } else if (first_error.empty()) {
            first_error = r.error;
        }
    }
    for (const auto& r : ok_results) {
        report.per_student.push_back(r.record);
        report.traces.insert(report.traces.end(), r.traces.begin(), r.traces.end());
    }
    report.aggregates = build_aggregates(cfg, ok_results);
    report.partial = !first_error.empty();
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!cfg.output_dir.empty()) write_report_files(report, cfg.output_dir);
    if (report.partial) throw DataError(first_error);
    return report;
}

}  // namespace

Dataset build_experiment_dataset(const ExperimentConfig& cfg) {
    if (cfg.data.mode == DataConfig::Mode::synthetic) {
        return synthesize_dataset(cfg.data.synth, mix_seed(cfg.master_seed, kDataStream),
                                  cfg.data.split)
            .first;
    }
    SplitConfig split = cfg.data.split;
    if (split.seed == 0) split.seed = mix_seed(cfg.master_seed, kFileSplitStream);
    return load_dataset(cfg.data.interactions_path, cfg.data.qmatrix_path, split);
}

std::uint64_t pretrain_seed(const ExperimentConfig& cfg) {
    return mix_seed(cfg.master_seed, kPretrainStream);
}

namespace {

void check_checkpoint_shape(const MirtModel& model, const Dataset& dataset,
                            const std::string& path) {
    if (model.dim != dataset.n_concepts || model.alpha.rows != dataset.n_questions ||
        model.theta.rows < dataset.n_students) {
        throw DataError("checkpoint shape does not match the dataset: " + path);
    }
}

}  // namespace

json report_json(const OatReport& report) {
    json j;
    j["metadata"] = {{"config_hash", report.config_hash},
                     {"master_seed", report.master_seed},
                     {"kernel", report.kernel},
                     {"partial", report.partial},
                     {"wall_time_seconds", report.wall_time_seconds}};
    j["aggregates"] = json::array();
    for (const auto& a : report.aggregates) {
        json row = {{"selector", a.selector},
                    {"L", a.test_length},
                    {"n_students", a.n_students},
                    {"n_auc_defined", a.n_auc_defined},
                    {"mean_acc", a.mean_acc},
                    {"pooled_acc", a.pooled_acc}};
        row["mean_auc"] = a.n_auc_defined ? json(a.mean_auc) : json(nullptr);
        row["pooled_auc"] = a.pooled_auc ? json(*a.pooled_auc) : json(nullptr);
        j["aggregates"].push_back(std::move(row));
    }
    j["per_student"] = json::array();
    for (const auto& r : report.per_student) {
        json row = {{"student_id", r.student_id},
                    {"L", r.test_length},
                    {"selector", r.selector},
                    {"acc", r.acc},
                    {"fitness_at_selection", r.fitness_at_selection},
                    {"timed_out", r.timed_out}};
        row["auc"] = r.auc ? json(*r.auc) : json(nullptr);
        j["per_student"].push_back(std::move(row));
    }
    j["traces"] = json::array();
    for (const auto& t : report.traces) {
        j["traces"].push_back({{"student_id", t.student_id},
                               {"L", t.test_length},
                               {"generation", t.generation},
                               {"best_fitness", t.best_fitness},
                               {"mean_fitness", t.mean_fitness}});
    }
    return j;
}

OatReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const Dataset dataset = build_experiment_dataset(config);
    MirtModel model;
    if (!config.checkpoint_path.empty()) {
        model = load_checkpoint(config.checkpoint_path);
        check_checkpoint_shape(model, dataset, config.checkpoint_path);
    } else {
        model = pretrain(dataset, config.pretrain, pretrain_seed(config));
    }
    SharedInputs shared;
    shared.dataset = &dataset;
    shared.model = &model;
    return run_with_shared(config, shared);
}

std::vector<OatReport> run_tau_sweep(const ExperimentConfig& config) {
    config.validate();
    if (config.selector != SelectorKind::peoat) {
        throw ConfigError("tau sweep requires selector 'peoat'");
    }
    const Dataset dataset = build_experiment_dataset(config);
    MirtModel model;
    if (!config.checkpoint_path.empty()) {
        model = load_checkpoint(config.checkpoint_path);
        check_checkpoint_shape(model, dataset, config.checkpoint_path);
    } else {
        model = pretrain(dataset, config.pretrain, pretrain_seed(config));
    }

    std::vector<int> students = dataset.eval_students;
    if (config.max_eval_students > 0 &&
        static_cast<int>(students.size()) > config.max_eval_students) {
        students.resize(config.max_eval_students);
    }

    // Ability estimates are tau-independent; compute once, share across runs.
    std::map<int, AbilityEstimate> theta0_cache;
    for (int sid : students) {
        theta0_cache.emplace(sid, init_theta0(model, dataset, sid, config.theta0_update));
    }

    SharedInputs shared;
    shared.dataset = &dataset;
    shared.model = &model;
    shared.theta0_cache = &theta0_cache;

    std::vector<OatReport> reports;
    for (double tau : config.tau_sweep) {
        ExperimentConfig run_cfg = config;
        run_cfg.evolve.tau_coeff = tau;
        if (!config.output_dir.empty()) {
            char sub[32];
            std::snprintf(sub, sizeof(sub), "tau_%g", tau);
            run_cfg.output_dir = (fs::path(config.output_dir) / sub).string();
        }
        reports.push_back(run_with_shared(run_cfg, shared));
    }

    if (!config.output_dir.empty()) {
        fs::create_directories(config.output_dir);
        std::ofstream out(fs::path(config.output_dir) / "tau_sweep.csv");
        out << "tau_coeff,L,mean_acc,mean_auc\n";
        for (std::size_t i = 0; i < reports.size(); ++i) {
            for (const auto& a : reports[i].aggregates) {
                out << fmt_double(config.tau_sweep[i]) << ',' << a.test_length << ','
                    << fmt_double(a.mean_acc) << ',' << fmt_double(a.mean_auc) << '\n';
            }
        }
    }
    return reports;
}

}  // namespace oat
