// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cirrange/harness/config.hpp"
#include "cirrange/harness/dataset.hpp"
#include "cirrange/harness/metrics.hpp"
#include "cirrange/ranging.hpp"

namespace cirrange::harness {

struct MethodResult {
    std::string name;  // "CIR_CNN" or "RSSI_MLP"
    Metrics metrics;
    std::vector<double> loss_history;
    std::vector<double> predictions_m;
};

struct ExperimentReport {
    std::size_t n_train_samples = 0;
    std::size_t n_test_samples = 0;
    std::vector<MethodResult> methods;  // CIR_CNN first, then RSSI_MLP
};

struct RunOptions {
    /// Output directory; nothing is written when empty.
    std::filesystem::path out_dir;
    /// Load this dataset instead of generating one.
    std::optional<std::filesystem::path> dataset_path;
    std::function<void(const std::string&)> log;
};

/// Trains both regressors and evaluates them on the TEST spots, RSSI_MLP first
/// since it is cheap. Files written to out_dir: dataset.cird (+ manifest),
/// rssi_mlp.cirm, cir_cnn.cirm, loss_history.csv, errors.csv, report.txt.
/// Each is flushed as soon as it is available.
ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Evaluates \p model on the TEST split.
MethodResult evaluate(const ranging::RangingModel& model, const RangingDataset& dataset);

/// Fixed-width method x (bias, std) table.
std::string format_report(const ExperimentConfig& config, const ExperimentReport& report);

std::string format_errors_csv(const RangingDataset& dataset, const ExperimentReport& report);
std::string format_loss_csv(const ExperimentReport& report);

}  // namespace cirrange::harness
