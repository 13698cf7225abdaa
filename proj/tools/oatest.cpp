// oatest: one-shot adaptive testing experiments from the command line.
//
//   oatest run       --config cfg.json [--seed N] [--workers N]
//   oatest sweep-tau --config cfg.json [--seed N] [--workers N]
//   oatest synth     --spec spec.json --out dir [--seed N]
//   oatest pretrain  --config cfg.json --out model.json [--seed N]
//
// Exit codes: 0 success, 2 config error, 3 data error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "oat/harness.hpp"
#include "oat/kernels.hpp"
#include "oat/rng.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
    std::int64_t seed_override = -1;
    int workers_override = 0;
};

oat::ExperimentConfig load_with_overrides(const CommonArgs& args) {
    oat::ExperimentConfig cfg = oat::load_experiment_config(args.config_path);
    if (args.seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(args.seed_override);
    if (args.workers_override > 0) cfg.workers = args.workers_override;
    return cfg;
}

void print_summary(const oat::OatReport& report) {
    std::printf("config %s  seed %llu  kernel %s  wall %.2fs\n", report.config_hash.c_str(),
                static_cast<unsigned long long>(report.master_seed), report.kernel.c_str(),
                report.wall_time_seconds);
    std::printf("%-14s %4s %10s %10s %12s %12s\n", "selector", "L", "mean_acc", "mean_auc",
                "pooled_acc", "pooled_auc");
    for (const auto& a : report.aggregates) {
        std::printf("%-14s %4d %10.4f %10.4f %12.4f %12.4f\n", a.selector.c_str(),
                    a.test_length, a.mean_acc, a.mean_auc, a.pooled_acc,
                    a.pooled_auc.value_or(0.0));
    }
}

int run_command(const CommonArgs& args) {
    const oat::ExperimentConfig cfg = load_with_overrides(args);
    const oat::OatReport report = oat::run_experiment(cfg);
    print_summary(report);
    return 0;
}

int sweep_command(const CommonArgs& args) {
    oat::ExperimentConfig cfg = load_with_overrides(args);
    const auto reports = oat::run_tau_sweep(cfg);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::printf("--- tau_coeff = %g ---\n", cfg.tau_sweep[i]);
        print_summary(reports[i]);
    }
    return 0;
}

int synth_command(const std::string& spec_path, const std::string& out_dir,
                  std::int64_t seed_override) {
    std::ifstream in(spec_path);
    if (!in) throw oat::ConfigError("cannot open spec: " + spec_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw oat::ConfigError(std::string("spec parse error: ") + e.what());
    }
    oat::SynthSpec spec;
    std::uint64_t seed = 7;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "n_students") spec.n_students = value.get<int>();
            else if (key == "n_questions") spec.n_questions = value.get<int>();
            else if (key == "n_concepts") spec.n_concepts = value.get<int>();
            else if (key == "interactions_per_student") spec.interactions_per_student = value.get<int>();
            else if (key == "seed") seed = value.get<std::uint64_t>();
            else throw oat::ConfigError("unknown spec key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw oat::ConfigError(std::string("bad spec value: ") + e.what());
    }
    if (seed_override >= 0) seed = static_cast<std::uint64_t>(seed_override);

    const oat::SynthRaw raw = oat::synthesize_raw(spec, seed);
    fs::create_directories(out_dir);
    oat::write_interactions_csv(raw.interactions, (fs::path(out_dir) / "interactions.csv").string());
    oat::write_qmatrix_csv(raw.q_matrix, (fs::path(out_dir) / "qmatrix.csv").string());
    json truth;
    truth["dim"] = raw.truth.dim;
    truth["theta_star"] = raw.truth.theta_star;
    truth["alpha_star"] = raw.truth.alpha_star;
    truth["mean_model_prob"] = raw.truth.mean_model_prob;
    std::ofstream truth_out(fs::path(out_dir) / "ground_truth.json");
    truth_out << truth.dump(2) << '\n';
    std::printf("wrote %zu interactions for %d students to %s\n", raw.interactions.size(),
                spec.n_students, out_dir.c_str());
    return 0;
}

int bench_command() {
    using BenchClock = std::chrono::steady_clock;
    constexpr std::size_t dim = 32;
    constexpr std::size_t n_rows = 4096;
    constexpr int reps = 2000;

    std::vector<double> rows(dim * n_rows), v(dim), out(n_rows);
    std::vector<int> ids(n_rows);
    oat::Rng rng(1);
    for (auto& x : rows) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    for (std::size_t i = 0; i < n_rows; ++i) ids[i] = static_cast<int>(i);

    std::printf("%-8s %14s %14s %14s\n", "backend", "dot_rows", "sqdist_rows", "axpy");
    for (auto b : {oat::kernels::Backend::scalar, oat::kernels::Backend::avx2,
                   oat::kernels::Backend::neon}) {
        if (!oat::kernels::backend_available(b)) continue;
        const auto& ops = oat::kernels::ops_for(b);
        double sink = 0.0;

        auto t0 = BenchClock::now();
        for (int r = 0; r < reps; ++r) {
            ops.dot_rows(rows.data(), ids.data(), n_rows, v.data(), dim, out.data());
            sink += out[r % n_rows];
        }
        const double dot_s = std::chrono::duration<double>(BenchClock::now() - t0).count();

        t0 = BenchClock::now();
        for (int r = 0; r < reps; ++r) {
            ops.sqdist_rows(rows.data(), ids.data(), n_rows, v.data(), dim, out.data());
            sink += out[r % n_rows];
        }
        const double sq_s = std::chrono::duration<double>(BenchClock::now() - t0).count();

        std::vector<double> acc(dim, 0.0);
        t0 = BenchClock::now();
        for (int r = 0; r < reps; ++r) {
            for (std::size_t i = 0; i < n_rows; i += 16) {
                ops.axpy(0.001, rows.data() + i * dim, acc.data(), dim);
            }
        }
        const double axpy_s = std::chrono::duration<double>(BenchClock::now() - t0).count();
        sink += acc[0];

        static volatile double keep;
        keep = sink;  // the timed loops must not be optimized away
        (void)keep;

        const double gflop_dot = 2.0 * dim * n_rows * reps / dot_s / 1e9;
        const double gflop_sq = 3.0 * dim * n_rows * reps / sq_s / 1e9;
        const double gflop_axpy = 2.0 * dim * (n_rows / 16) * reps / axpy_s / 1e9;
        std::printf("%-8s %11.2f GF %11.2f GF %11.2f GF\n",
                    std::string(oat::kernels::backend_name(b)).c_str(), gflop_dot, gflop_sq,
                    gflop_axpy);
    }
    return 0;
}

int pretrain_command(const CommonArgs& args, const std::string& out_path) {
    const oat::ExperimentConfig cfg = load_with_overrides(args);
    cfg.validate();
    const oat::Dataset ds = oat::build_experiment_dataset(cfg);
    std::vector<double> losses;
    const std::uint64_t seed = oat::pretrain_seed(cfg);
    const oat::MirtModel model = oat::pretrain(ds, cfg.pretrain, seed, &losses);
    oat::save_checkpoint(model, cfg.pretrain, seed, out_path);
    std::printf("pretrained %d x %d model over %zu interactions; loss %.4f -> %.4f; saved %s\n",
                model.alpha.rows, model.dim, ds.pretrain_interactions.size(), losses.front(),
                losses.back(), out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-shot adaptive testing experiments"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string out_path;
    std::string spec_path;
    std::string kernel_override;

    app.add_option("--kernel", kernel_override, "force kernel backend (scalar|avx2|neon)");

    auto* run = app.add_subcommand("run", "run one experiment");
    run->add_option("--config", common.config_path, "experiment config JSON")->required();
    run->add_option("--seed", common.seed_override, "override master_seed");
    run->add_option("--workers", common.workers_override, "worker pool width");

    auto* sweep = app.add_subcommand("sweep-tau", "run the distance-threshold sweep");
    sweep->add_option("--config", common.config_path, "experiment config JSON")->required();
    sweep->add_option("--seed", common.seed_override, "override master_seed");
    sweep->add_option("--workers", common.workers_override, "worker pool width");

    auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
    synth->add_option("--spec", spec_path, "synthesis spec JSON")->required();
    synth->add_option("--out", out_path, "output directory")->required();
    synth->add_option("--seed", common.seed_override, "override spec seed");

    auto* bench = app.add_subcommand("bench", "time the kernel backends");

    auto* pre = app.add_subcommand("pretrain", "pretrain and save a model checkpoint");
    pre->add_option("--config", common.config_path, "experiment config JSON")->required();
    pre->add_option("--out", out_path, "checkpoint path")->required();
    pre->add_option("--seed", common.seed_override, "override master_seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Usage problems share the config-error exit code; --help stays 0.
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!kernel_override.empty()) {
            oat::kernels::Backend b;
            if (kernel_override == "scalar") b = oat::kernels::Backend::scalar;
            else if (kernel_override == "avx2") b = oat::kernels::Backend::avx2;
            else if (kernel_override == "neon") b = oat::kernels::Backend::neon;
            else throw oat::ConfigError("unknown kernel '" + kernel_override + "'");
            if (!oat::kernels::force_backend(b)) {
                throw oat::ConfigError("kernel '" + kernel_override + "' not available on this CPU");
            }
        }
        if (run->parsed()) return run_command(common);
        if (sweep->parsed()) return sweep_command(common);
        if (synth->parsed()) return synth_command(spec_path, out_path, common.seed_override);
        if (bench->parsed()) return bench_command();
        if (pre->parsed()) return pretrain_command(common, out_path);
    } catch (const oat::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const oat::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
