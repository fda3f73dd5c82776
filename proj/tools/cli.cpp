// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "cirrange/harness/config.hpp"
#include "cirrange/harness/dataset.hpp"
#include "cirrange/harness/experiment.hpp"
#include "cirrange/harness/pgm.hpp"
#include "cirrange/ranging.hpp"
#include "cirrange/rng.hpp"

namespace cirrange::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

nn::Tensor random_tensor(const nn::Shape& shape, double lo, double hi, std::uint64_t seed) {
    nn::Tensor t(shape);
    Rng rng(seed);
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

// Random weights everywhere (fresh ranging models start with a zero output
// layer, which would make every gradient trivially zero). The output layer
// sign is chosen so the final ReLU is active.
nn::Model oracle_model(nn::Model net, const nn::Tensor& input, std::uint64_t seed) {
    net.init_kaiming_uniform(seed);
    auto params = net.parameters();
    params.back()->fill(0.1);
    if (net.forward(input)[0] <= 0.0) {
        for (auto& w : params[params.size() - 2]->data()) w = -w;
    }
    return net;
}

harness::ExperimentConfig load_with_overrides(const fs::path& path, const std::optional<std::uint64_t>& seed) {
    auto cfg = harness::load_config(path);
    if (seed) cfg.master_seed = *seed;
    cfg.validate();
    return cfg;
}

void print_metrics(std::ostream& out, const std::string& name, const harness::Metrics& m) {
    out << name << "  bias_m " << fmt("%.3f", m.bias_m) << "  std_m " << fmt("%.3f", m.std_m) << "  n " << m.n << "\n";
}

}  // namespace

std::vector<OracleCase> gradcheck_suite(std::size_t rows, std::size_t cols, const nn::GradCheckOptions& options) {
    std::vector<OracleCase> cases;
    const std::uint64_t base = options.seed;

    {
        // One affine layer: the objective is quadratic and every partial is
        // 2 * err * x, so inputs and error are kept away from zero to stay
        // above the rounding floor of the central difference.
        Rng rng(derive_seed(base, {1, 1}));
        auto away = [&rng] { return (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.0); };
        nn::Model linear({8}, {nn::make_dense(8, 1)});
        linear.init_kaiming_uniform(derive_seed(base, {1, 2}));
        nn::Tensor x({8});
        for (auto& v : x.data()) v = away();
        const nn::Tensor y({1}, linear.forward(x)[0] + away());
        cases.push_back({"linear", nn::gradient_check(linear, x, y, options)});
    }
    {
        const auto x = random_tensor({1}, -2.0, 2.0, derive_seed(base, {2, 1}));
        const auto net = oracle_model(ranging::build_rssi_mlp(0).net, x, derive_seed(base, {2, 2}));
        const nn::Tensor y({1}, 0.3);
        cases.push_back({"rssi_mlp", nn::gradient_check(net, x, y, options)});
    }
    {
        const auto x = random_tensor({rows, cols, 1}, 0.0, 1.0, derive_seed(base, {3, 1}));
        const auto net = oracle_model(ranging::build_cir_cnn(rows, cols, 0).net, x, derive_seed(base, {3, 2}));
        const nn::Tensor y({1}, 0.3);
        cases.push_back({"cir_cnn", nn::gradient_check(net, x, y, options)});
    }
    return cases;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic LTE CIR ranging: dataset generation, training and evaluation", "cirrange"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a dataset from a config file");
    fs::path gen_config, gen_out;
    std::optional<std::uint64_t> gen_seed;
    gen->add_option("--config", gen_config, "Experiment config file")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "Dataset file to write")->required();
    gen->add_option("--seed", gen_seed, "Override experiment.master_seed");

    // train
    auto* train = app.add_subcommand("train", "Train one model on the TRAIN split of a dataset");
    fs::path train_dataset, train_out;
    std::optional<fs::path> train_config;
    std::string train_kind = "cnn";
    std::optional<std::size_t> epochs, batch;
    std::optional<double> lr;
    std::optional<std::uint64_t> train_seed;
    train->add_option("--dataset", train_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    train->add_option("--out", train_out, "Checkpoint to write")->required();
    train->add_option("--model", train_kind, "cnn or rssi")->check(CLI::IsMember({"cnn", "rssi"}));
    train->add_option("--config", train_config, "Take [train] settings from this config")
        ->check(CLI::ExistingFile);
    train->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
    train->add_option("--batch-size", batch)->check(CLI::PositiveNumber);
    train->add_option("--lr", lr)->check(CLI::PositiveNumber);
    train->add_option("--seed", train_seed, "Training and init seed");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the TEST split of a dataset");
    fs::path eval_model, eval_dataset;
    eval->add_option("--model", eval_model, "Checkpoint")->required()->check(CLI::ExistingFile);
    eval->add_option("--dataset", eval_dataset, "Dataset file")->required()->check(CLI::ExistingFile);

    // run
    auto* runc = app.add_subcommand("run", "Full experiment: dataset, both models, report");
    fs::path run_config, run_out;
    std::optional<fs::path> run_dataset;
    std::optional<std::uint64_t> run_seed;
    bool quiet = false;
    runc->add_option("--config", run_config, "Experiment config file")->required()->check(CLI::ExistingFile);
    runc->add_option("--out", run_out, "Output directory")->required();
    runc->add_option("--dataset", run_dataset, "Reuse this dataset instead of generating one")
        ->check(CLI::ExistingFile);
    runc->add_option("--seed", run_seed, "Override experiment.master_seed");
    runc->add_flag("-q,--quiet", quiet, "No progress output");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Dump one sample's CIR image as a P5 graymap");
    fs::path inspect_dataset;
    std::optional<fs::path> inspect_out;
    std::size_t index = 0;
    int scale = 4;
    inspect->add_option("--dataset", inspect_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    inspect->add_option("--index", index, "Sample index");
    inspect->add_option("--pgm", inspect_out, "Graymap to write");
    inspect->add_option("--scale", scale, "Pixel replication factor")->check(CLI::Range(1, 64));

    // gradcheck
    auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient oracle");
    nn::GradCheckOptions gopt;
    std::size_t rows = 40, cols = 64;
    double tolerance = 1e-5;
    grad->add_option("--params", gopt.n_params, "Sampled parameters per model")->check(CLI::PositiveNumber);
    grad->add_option("--step", gopt.h, "Central-difference step")->check(CLI::PositiveNumber);
    grad->add_option("--seed", gopt.seed);
    grad->add_option("--fault", gopt.fault, "Scale one analytic gradient by 1 + fault");
    grad->add_option("--rows", rows)->check(CLI::Range(std::size_t{22}, std::size_t{4096}));
    grad->add_option("--cols", cols)->check(CLI::Range(std::size_t{22}, std::size_t{4096}));
    grad->add_option("--tolerance", tolerance)->check(CLI::PositiveNumber);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "cirrange: " << e.what() << "\n";
        err << "Run with --help for usage.\n";
        return kExitUsage;
    }

    auto log = [&](const std::string& msg) { err << msg << "\n"; };

    try {
        if (*gen) {
            const auto cfg = load_with_overrides(gen_config, gen_seed);
            const auto ds = harness::generate_dataset(cfg);
            harness::write_dataset(gen_out, ds);
            std::size_t n_test = 0;
            for (const auto& s : ds.samples) n_test += s.split == harness::Split::Test;
            out << "wrote " << gen_out.string() << ": " << ds.samples.size() << " samples (" << ds.samples.size() - n_test
                << " train, " << n_test << " test), image " << ds.rows << "x" << ds.cols << "\n";
        } else if (*train) {
            ranging::TrainConfig tcfg;
            if (train_config) tcfg = harness::load_config(*train_config).train;
            if (epochs) tcfg.epochs = *epochs;
            if (batch) tcfg.batch_size = *batch;
            if (lr) tcfg.lr = *lr;
            if (train_seed) tcfg.seed = *train_seed;
            tcfg.validate();
            const auto ds = harness::read_dataset(train_dataset);
            harness::audit_split(ds);
            const auto kind = train_kind == "cnn" ? ranging::ModelKind::CirCnn : ranging::ModelKind::RssiMlp;
            const std::uint64_t init = derive_seed(tcfg.seed, {1});
            auto model = kind == ranging::ModelKind::CirCnn
                             ? ranging::build_cir_cnn(static_cast<std::size_t>(ds.rows),
                                                      static_cast<std::size_t>(ds.cols), init)
                             : ranging::build_rssi_mlp(init);
            const auto set = harness::training_set(ds, kind, harness::Split::Train);
            log("training " + std::string(ranging::to_string(kind)) + " on " + std::to_string(set.inputs.size()) +
                " samples");
            const auto result = ranging::train(std::move(model), set, tcfg);
            ranging::save_model(train_out, result.model);
            out << "wrote " << train_out.string() << ": final loss " << fmt("%.6e", result.loss_history.back())
                << " after " << result.loss_history.size() << " epochs\n";
        } else if (*eval) {
            const auto model = ranging::load_model(eval_model);
            const auto ds = harness::read_dataset(eval_dataset);
            const auto r = harness::evaluate(model, ds);
            print_metrics(out, r.name, r.metrics);
        } else if (*runc) {
            const auto cfg = load_with_overrides(run_config, run_seed);
            harness::RunOptions opt;
            opt.out_dir = run_out;
            opt.dataset_path = run_dataset;
            if (!quiet) opt.log = log;
            const auto report = harness::run_experiment(cfg, opt);
            out << harness::format_report(cfg, report);
        } else if (*inspect) {
            const auto ds = harness::read_dataset(inspect_dataset);
            if (index >= ds.samples.size()) {
                err << "cirrange: --index " << index << " out of range (dataset has " << ds.samples.size()
                    << " samples)\n";
                return kExitUsage;
            }
            const auto& s = ds.samples[index];
            const auto& im = s.image;
            int peak_col = 0;
            double peak = -1.0;
            for (int c = 0; c < im.cols; ++c) {
                double col_mean = 0.0;
                for (int r = 0; r < im.rows; ++r) col_mean += im.at(r, c);
                if (col_mean > peak) {
                    peak = col_mean;
                    peak_col = c;
                }
            }
            out << "index " << index << "\n"
                << "spot_id " << s.spot_id() << "\n"
                << "frame_id " << im.frame_id << "\n"
                << "split " << (s.split == harness::Split::Train ? "train" : "test") << "\n"
                << "true_range_m " << fmt("%.4f", s.true_range_m()) << "\n"
                << "rssi_db " << fmt("%.4f", s.rssi_db) << "\n"
                << "image " << im.rows << "x" << im.cols << "\n"
                << "peak_tap " << peak_col << "\n";
            if (inspect_out) {
                harness::write_pgm(*inspect_out, im, scale);
                out << "wrote " << inspect_out->string() << "\n";
            }
        } else if (*grad) {
            bool ok = true;
            for (const auto& c : gradcheck_suite(rows, cols, gopt)) {
                const bool pass = c.report.max_rel_error < tolerance;
                ok = ok && pass;
                out << c.name << "  max_rel_error " << fmt("%.3e", c.report.max_rel_error) << "  params "
                    << c.report.n_checked << "  " << (pass ? "ok" : "FAIL") << "\n";
            }
            return ok ? kExitOk : kExitFailure;
        }
    } catch (const std::exception& e) {
        err << "cirrange: error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace cirrange::cli
