// SPDX-License-Identifier: Apache-2.0

#include "cirrange/harness/dataset.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "cirrange/binary_io.hpp"
#include "cirrange/channel.hpp"
#include "cirrange/errors.hpp"
#include "cirrange/lte_grid.hpp"
#include "cirrange/rng.hpp"

namespace cirrange::harness {
namespace {

namespace bio = cirrange::binary_io;

constexpr std::uint64_t kSpotStream = 1;
constexpr std::uint64_t kFrameStream = 2;

std::string build_manifest(const ExperimentConfig& config, const RangingDataset& ds) {
    std::ostringstream o;
    o << "# cirrange dataset manifest\n"
      << "# regenerate with: cirrange gen --config <this file> --out <dataset>\n"
      << "# samples = " << ds.samples.size() << ", image = " << ds.rows << " x " << ds.cols << "\n"
      << "# spot  split  range_m  shadowing_db  frames\n";
    for (const auto& s : ds.spots) {
        o << "# " << std::setw(4) << s.spot_id << "  " << (s.split == Split::Train ? "train" : "test ") << "  "
          << std::fixed << std::setprecision(3) << std::setw(7) << s.range_m << "  " << std::setw(12)
          << s.shadowing_db << "  " << s.n_frames << "\n";
        o.unsetf(std::ios::floatfield);
    }
    o << "\n" << format_config(config);
    return o.str();
}

}  // namespace

RangingDataset generate_dataset(const ExperimentConfig& config) {
    config.validate();
    const auto num = lte::build_numerology(config.bandwidth_hz);
    const auto crs_ref = lte::make_crs_reference(num, config.cell_id);
    const auto rcfg = config.receiver();

    RangingDataset ds;
    ds.rows = 2 * num.slots_per_frame;
    ds.cols = config.n_taps_kept;

    struct Job {
        int spot;
        int frame;
    };
    std::vector<Job> jobs;
    const int n_spots = config.n_train_spots + config.n_test_spots;
    for (int s = 0; s < n_spots; ++s) {
        const std::uint64_t spot_seed = derive_seed(config.master_seed, {kSpotStream, static_cast<std::uint64_t>(s)});
        Rng rng(spot_seed);
        const auto [lo, hi] = config.scenario.range_interval_m;
        SpotInfo info;
        info.spot_id = s;
        info.range_m = rng.uniform(lo, hi);
        info.shadowing_db = channel::draw_shadowing_db(config.scenario, derive_seed(spot_seed, {1}));
        info.n_frames = static_cast<int>(rng.integer(config.frames_per_spot_min, config.frames_per_spot_max));
        info.split = s < config.n_train_spots ? Split::Train : Split::Test;
        ds.spots.push_back(info);
        for (int f = 0; f < info.n_frames; ++f) jobs.push_back({s, f});
    }

    ds.samples.resize(jobs.size());
    std::vector<std::optional<std::string>> errors(jobs.size());

#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto [s, f] = jobs[j];
        const SpotInfo& spot = ds.spots[static_cast<std::size_t>(s)];
        try {
            const std::uint64_t seed = derive_seed(
                config.master_seed, {kFrameStream, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(f)});
            const auto grid = lte::build_transmit_grid(num, config.cell_id, derive_seed(seed, {1}));
            const auto tx = lte::ofdm_modulate(grid, num);
            const auto chan =
                channel::sample_channel(config.scenario, spot.range_m, derive_seed(seed, {2}), spot.shadowing_db);
            const auto rxw = channel::apply_channel(tx, chan, num, derive_seed(seed, {3}));
            auto obs = rx::process_frame(rxw, num, crs_ref, rcfg, 0);
            Sample& out = ds.samples[j];
            out.image = std::move(obs.image);
            out.image.true_range_m = spot.range_m;
            out.image.spot_id = s;
            out.image.frame_id = f;
            out.rssi_db = obs.rssi_db;
            out.split = spot.split;
        } catch (const std::exception& e) {
            errors[j] = "spot " + std::to_string(s) + ", frame " + std::to_string(f) + ": " + e.what();
        }
    }
    for (const auto& err : errors) {
        if (err) throw std::runtime_error("dataset generation failed at " + *err);
    }
    ds.manifest = build_manifest(config, ds);
    return ds;
}

void audit_split(const RangingDataset& dataset) {
    std::map<int, Split> seen;
    for (const auto& s : dataset.samples) {
        auto [it, inserted] = seen.emplace(s.spot_id(), s.split);
        if (!inserted && it->second != s.split) {
            throw std::logic_error("spot " + std::to_string(s.spot_id()) + " appears in both TRAIN and TEST");
        }
    }
}

std::vector<const Sample*> select(const RangingDataset& dataset, Split split) {
    std::vector<const Sample*> out;
    for (const auto& s : dataset.samples) {
        if (s.split == split) out.push_back(&s);
    }
    return out;
}

ranging::TrainingSet training_set(const RangingDataset& dataset, ranging::ModelKind kind, Split split) {
    ranging::TrainingSet set;
    for (const Sample* s : select(dataset, split)) {
        set.inputs.push_back(kind == ranging::ModelKind::CirCnn ? ranging::cir_input(s->image)
                                                                : ranging::rssi_input(s->rssi_db));
        set.labels_m.push_back(s->true_range_m());
        set.spot_ids.push_back(s->spot_id());
    }
    return set;
}

void write_dataset(const std::filesystem::path& path, const RangingDataset& ds) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    bio::write_bytes(os, "CIRD");
    bio::write_u16(os, kDatasetVersion);
    bio::write_u32(os, static_cast<std::uint32_t>(ds.rows));
    bio::write_u32(os, static_cast<std::uint32_t>(ds.cols));
    bio::write_u64(os, ds.samples.size());
    std::map<int, int> spots;
    for (const auto& s : ds.samples) spots[s.spot_id()] = 1;
    bio::write_u32(os, static_cast<std::uint32_t>(spots.size()));
    const std::size_t n_pix = static_cast<std::size_t>(ds.rows) * static_cast<std::size_t>(ds.cols);
    for (const auto& s : ds.samples) {
        if (s.image.rows != ds.rows || s.image.cols != ds.cols || s.image.pixels.size() != n_pix) {
            throw ArgumentError("dataset sample image shape differs from dataset header");
        }
        bio::write_u32(os, static_cast<std::uint32_t>(s.spot_id()));
        bio::write_u32(os, static_cast<std::uint32_t>(s.image.frame_id));
        bio::write_u32(os, static_cast<std::uint32_t>(s.split));
        bio::write_f64(os, s.rssi_db);
        bio::write_f64(os, s.true_range_m());
        for (float p : s.image.pixels) bio::write_f32(os, p);
    }
    if (!os) throw FormatError("write failed for " + path.string());
    std::filesystem::path manifest_path = path;
    manifest_path += ".manifest";
    std::ofstream ms(manifest_path, std::ios::binary | std::ios::trunc);
    if (!ms) throw FormatError("cannot open " + manifest_path.string() + " for writing");
    ms << ds.manifest;
}

RangingDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open dataset " + path.string());
    if (bio::read_bytes(is, 4) != "CIRD") throw FormatError(path.string() + ": bad magic (expected CIRD)");
    const auto version = bio::read_u16(is);
    if (version != kDatasetVersion) {
        throw FormatError(path.string() + ": unsupported dataset version " + std::to_string(version));
    }
    RangingDataset ds;
    ds.rows = static_cast<int>(bio::read_u32(is));
    ds.cols = static_cast<int>(bio::read_u32(is));
    const auto n = bio::read_u64(is);
    (void)bio::read_u32(is);  // spot count, informational
    if (ds.rows <= 0 || ds.cols <= 0 || ds.rows > 4096 || ds.cols > 4096) {
        throw FormatError(path.string() + ": implausible image size");
    }
    const std::size_t n_pix = static_cast<std::size_t>(ds.rows) * static_cast<std::size_t>(ds.cols);
    ds.samples.resize(n);
    for (auto& s : ds.samples) {
        s.image.spot_id = static_cast<int>(bio::read_u32(is));
        s.image.frame_id = static_cast<int>(bio::read_u32(is));
        const auto split = bio::read_u32(is);
        if (split > 1) throw FormatError(path.string() + ": bad split tag " + std::to_string(split));
        s.split = static_cast<Split>(split);
        s.rssi_db = bio::read_f64(is);
        s.image.true_range_m = bio::read_f64(is);
        s.image.rows = ds.rows;
        s.image.cols = ds.cols;
        s.image.pixels.resize(n_pix);
        for (auto& p : s.image.pixels) p = bio::read_f32(is);
    }
    std::filesystem::path manifest_path = path;
    manifest_path += ".manifest";
    if (std::ifstream ms(manifest_path, std::ios::binary); ms) {
        std::stringstream buf;
        buf << ms.rdbuf();
        ds.manifest = buf.str();
    }
    return ds;
}

}  // namespace cirrange::harness
