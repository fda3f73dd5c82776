// SPDX-License-Identifier: Apache-2.0

#include "cirrange/harness/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cirrange/errors.hpp"
#include "cirrange/rng.hpp"

namespace cirrange::harness {
namespace {

constexpr std::uint64_t kModelInitStream = 3;

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw FormatError("write failed for " + path.string());
}

}  // namespace

MethodResult evaluate(const ranging::RangingModel& model, const RangingDataset& dataset) {
    const auto test = training_set(dataset, model.kind, Split::Test);
    if (!test.inputs.empty() && test.inputs.front().shape() != model.input_spec()) {
        throw ShapeError("model expects input " + nn::format_shape(model.input_spec()) + " but dataset provides " +
                         nn::format_shape(test.inputs.front().shape()));
    }
    MethodResult r;
    r.name = model.kind == ranging::ModelKind::CirCnn ? "CIR_CNN" : "RSSI_MLP";
    r.predictions_m = ranging::predict_batch(model, test.inputs);
    r.metrics = compute_metrics(r.predictions_m, test.labels_m);
    return r;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    auto log = [&](const std::string& msg) {
        if (options.log) options.log(msg);
    };
    const bool write = !options.out_dir.empty();
    if (write) std::filesystem::create_directories(options.out_dir);

    RangingDataset dataset;
    if (options.dataset_path) {
        log("loading dataset " + options.dataset_path->string());
        dataset = read_dataset(*options.dataset_path);
    } else {
        log("generating dataset");
        dataset = generate_dataset(config);
    }
    audit_split(dataset);
    if (write) write_dataset(options.out_dir / "dataset.cird", dataset);

    std::set<int> test_spots;
    for (const auto& s : dataset.samples) {
        if (s.split == Split::Test) test_spots.insert(s.spot_id());
    }
    const ranging::BatchAudit audit = [&](std::span<const int> ids) {
        for (int id : ids) {
            if (test_spots.count(id) != 0) {
                throw std::logic_error("test spot " + std::to_string(id) + " reached a training batch");
            }
        }
    };

    ExperimentReport report;
    for (const auto& s : dataset.samples) (s.split == Split::Train ? report.n_train_samples : report.n_test_samples)++;
    log("train samples " + std::to_string(report.n_train_samples) + ", test samples " +
        std::to_string(report.n_test_samples));

    ranging::TrainConfig tcfg = config.train;
    tcfg.seed = config.effective_train_seed();
    const std::uint64_t init_seed = derive_seed(config.master_seed, {kModelInitStream});

    auto flush = [&] {
        if (!write) return;
        write_text(options.out_dir / "loss_history.csv", format_loss_csv(report));
        write_text(options.out_dir / "errors.csv", format_errors_csv(dataset, report));
        write_text(options.out_dir / "report.txt", format_report(config, report));
    };

    std::vector<MethodResult> results(2);
    for (const auto kind : {ranging::ModelKind::RssiMlp, ranging::ModelKind::CirCnn}) {
        const bool cnn = kind == ranging::ModelKind::CirCnn;
        log(std::string("training ") + (cnn ? "CIR_CNN" : "RSSI_MLP"));
        auto model = cnn ? ranging::build_cir_cnn(static_cast<std::size_t>(dataset.rows),
                                                  static_cast<std::size_t>(dataset.cols), derive_seed(init_seed, {1}))
                         : ranging::build_rssi_mlp(derive_seed(init_seed, {2}));
        auto trained = ranging::train(std::move(model), training_set(dataset, kind, Split::Train), tcfg, audit);
        MethodResult r = evaluate(trained.model, dataset);
        r.loss_history = std::move(trained.loss_history);
        log(r.name + ": bias " + fmt("%.3f", r.metrics.bias_m) + " m, std " + fmt("%.3f", r.metrics.std_m) + " m");
        if (write) ranging::save_model(options.out_dir / (cnn ? "cir_cnn.cirm" : "rssi_mlp.cirm"), trained.model);
        results[cnn ? 0 : 1] = std::move(r);
        report.methods.clear();
        for (const auto& m : results) {
            if (!m.name.empty()) report.methods.push_back(m);
        }
        flush();
    }
    return report;
}

std::string format_report(const ExperimentConfig& config, const ExperimentReport& report) {
    std::ostringstream o;
    o << "scenario      " << channel::to_string(config.scenario.kind) << "\n"
      << "master_seed   " << config.master_seed << "\n"
      << "train/test    " << report.n_train_samples << " / " << report.n_test_samples << " samples\n\n";
    o << "method        bias_m      std_m\n";
    for (const auto& m : report.methods) {
        std::string name = m.name;
        name.resize(12, ' ');
        o << name << fmt("%8.3f", m.metrics.bias_m) << "   " << fmt("%8.3f", m.metrics.std_m) << "\n";
    }
    return o.str();
}

std::string format_errors_csv(const RangingDataset& dataset, const ExperimentReport& report) {
    const auto test = select(dataset, Split::Test);
    std::ostringstream o;
    o << "method,spot_id,frame_id,true_range_m,predicted_m,error_m\n";
    for (const auto& m : report.methods) {
        for (std::size_t i = 0; i < test.size() && i < m.predictions_m.size(); ++i) {
            const double truth = test[i]->true_range_m();
            o << m.name << ',' << test[i]->spot_id() << ',' << test[i]->image.frame_id << ','
              << fmt("%.6f", truth) << ',' << fmt("%.6f", m.predictions_m[i]) << ','
              << fmt("%.6f", m.predictions_m[i] - truth) << '\n';
        }
    }
    return o.str();
}

std::string format_loss_csv(const ExperimentReport& report) {
    std::ostringstream o;
    o << "method,epoch,loss\n";
    for (const auto& m : report.methods) {
        for (std::size_t e = 0; e < m.loss_history.size(); ++e) {
            o << m.name << ',' << e + 1 << ',' << fmt("%.9e", m.loss_history[e]) << '\n';
        }
    }
    return o.str();
}

}  // namespace cirrange::harness
