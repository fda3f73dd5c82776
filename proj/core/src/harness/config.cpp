// SPDX-License-Identifier: Apache-2.0

#include "cirrange/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "cirrange/errors.hpp"
#include "cirrange/lte_grid.hpp"
#include "cirrange/rng.hpp"

namespace cirrange::harness {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string value;
    int line;
};

[[noreturn]] void bad_value(const std::string& key, const Entry& e, const char* expected) {
    throw ConfigError("line " + std::to_string(e.line) + ": " + key + " = '" + e.value + "' is not " + expected);
}

double to_double(const std::string& key, const Entry& e) {
    if (e.value == "inf" || e.value == "+inf") return INFINITY;
    if (e.value == "-inf") return -INFINITY;
    double v = 0.0;
    const char* end = e.value.data() + e.value.size();
    auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || ptr != end || std::isnan(v)) bad_value(key, e, "a number");
    return v;
}

std::int64_t to_int(const std::string& key, const Entry& e) {
    std::int64_t v = 0;
    const char* end = e.value.data() + e.value.size();
    auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || ptr != end) bad_value(key, e, "an integer");
    return v;
}

std::uint64_t to_u64(const std::string& key, const Entry& e) {
    std::uint64_t v = 0;
    const char* end = e.value.data() + e.value.size();
    auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || ptr != end) bad_value(key, e, "an unsigned integer");
    return v;
}

bool to_bool(const std::string& key, const Entry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    bad_value(key, e, "true or false");
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(channel::ScenarioKind kind) {
    ExperimentConfig c;
    if (kind == channel::ScenarioKind::Los) {
        c.scenario = channel::ScenarioConfig::los_default();
        c.n_train_spots = 21;
        c.n_test_spots = 6;
    } else {
        c.scenario = channel::ScenarioConfig::multipath_default();
        c.n_train_spots = 12;
        c.n_test_spots = 3;
    }
    // 300 epochs over the full datasets would take hours on one core.
    c.train.epochs = kDefaultExperimentEpochs;
    return c;
}

void ExperimentConfig::validate() const {
    (void)lte::build_numerology(bandwidth_hz);
    if (cell_id < 0 || cell_id > lte::kMaxCellId) throw ConfigError("experiment: cell_id outside [0, 503]");
    if (n_train_spots < 1 || n_test_spots < 1) throw ConfigError("experiment: spot counts must be positive");
    if (frames_per_spot_min < 1 || frames_per_spot_max < frames_per_spot_min) {
        throw ConfigError("experiment: frames_per_spot range must satisfy 1 <= min <= max");
    }
    scenario.validate();
    if (n_cir < 1 || (n_cir & (n_cir - 1)) != 0) throw ConfigError("receiver: n_cir must be a power of two");
    const auto num = lte::build_numerology(bandwidth_hz);
    if (n_cir < num.crs_per_symbol()) {
        throw ConfigError("receiver: n_cir must be >= " + std::to_string(num.crs_per_symbol()) + " CRS bins");
    }
    if (n_taps_kept < 1 || n_taps_kept > n_cir) throw ConfigError("receiver: n_taps_kept must be in [1, n_cir]");
    if (!(floor_db < 0.0)) throw ConfigError("receiver: floor_db must be negative");
    if (!std::isfinite(rx_gain_db)) throw ConfigError("receiver: rx_gain_db must be finite");
    train.validate();
}

rx::ReceiverConfig ExperimentConfig::receiver() const {
    rx::ReceiverConfig r;
    r.cell_id = cell_id;
    r.n_cir = n_cir;
    r.n_taps_kept = n_taps_kept;
    r.floor_db = floor_db;
    r.rx_gain_db = rx_gain_db;
    r.correct_cfo = correct_cfo;
    r.refine_cfo = refine_cfo;
    return r;
}

std::uint64_t ExperimentConfig::effective_train_seed() const {
    return train_seed.value_or(derive_seed(master_seed, {0x747261696eULL}));
}

ExperimentConfig parse_config(std::string_view text) {
    std::map<std::string, Entry> entries;
    std::string section;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    const std::set<std::string> sections{"experiment", "scenario", "receiver", "train"};
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!sections.count(section)) {
                throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
        const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (!entries.emplace(key, Entry{value, line_no}).second) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key);
        }
    }

    channel::ScenarioKind kind = channel::ScenarioKind::Los;
    if (auto it = entries.find("scenario.kind"); it != entries.end()) {
        try {
            kind = channel::parse_scenario_kind(it->second.value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(it->second.line) + ": " + e.what());
        }
    }
    ExperimentConfig c = ExperimentConfig::defaults(kind);

    using Setter = std::function<void(const std::string&, const Entry&)>;
    auto as_int = [](int& field) -> Setter {
        return [&field](const std::string& k, const Entry& e) {
            const auto v = to_int(k, e);
            if (v < INT32_MIN || v > INT32_MAX) bad_value(k, e, "a 32-bit integer");
            field = static_cast<int>(v);
        };
    };
    auto as_double = [](double& field) -> Setter {
        return [&field](const std::string& k, const Entry& e) { field = to_double(k, e); };
    };
    auto as_bool = [](bool& field) -> Setter {
        return [&field](const std::string& k, const Entry& e) { field = to_bool(k, e); };
    };
    auto as_size = [](std::size_t& field) -> Setter {
        return [&field](const std::string& k, const Entry& e) { field = to_u64(k, e); };
    };
    auto& s = c.scenario;
    const std::map<std::string, Setter> setters{
        {"experiment.master_seed", [&](const std::string& k, const Entry& e) { c.master_seed = to_u64(k, e); }},
        {"experiment.cell_id", as_int(c.cell_id)},
        {"experiment.bandwidth_hz", as_double(c.bandwidth_hz)},
        {"experiment.n_train_spots", as_int(c.n_train_spots)},
        {"experiment.n_test_spots", as_int(c.n_test_spots)},
        {"experiment.frames_per_spot_min", as_int(c.frames_per_spot_min)},
        {"experiment.frames_per_spot_max", as_int(c.frames_per_spot_max)},
        {"scenario.kind", [](const std::string&, const Entry&) {}},
        {"scenario.range_min_m", as_double(s.range_interval_m.first)},
        {"scenario.range_max_m", as_double(s.range_interval_m.second)},
        {"scenario.n_extra_taps", as_int(s.n_extra_taps)},
        {"scenario.excess_delay_mean_s", as_double(s.excess_delay_mean_s)},
        {"scenario.tap_decay_db_per_us", as_double(s.tap_decay_db_per_us)},
        {"scenario.los_suppression_db", as_double(s.los_suppression_db)},
        {"scenario.shadowing_sigma_db", as_double(s.shadowing_sigma_db)},
        {"scenario.snr_db", as_double(s.snr_db)},
        {"scenario.cfo_min_hz", as_double(s.cfo_range_hz.first)},
        {"scenario.cfo_max_hz", as_double(s.cfo_range_hz.second)},
        {"scenario.path_loss_exponent", as_double(s.path_loss_exponent)},
        {"scenario.ref_loss_db_at_1m", as_double(s.ref_loss_db_at_1m)},
        {"receiver.n_cir", as_int(c.n_cir)},
        {"receiver.n_taps_kept", as_int(c.n_taps_kept)},
        {"receiver.floor_db", as_double(c.floor_db)},
        {"receiver.rx_gain_db", as_double(c.rx_gain_db)},
        {"receiver.correct_cfo", as_bool(c.correct_cfo)},
        {"receiver.refine_cfo", as_bool(c.refine_cfo)},
        {"train.batch_size", as_size(c.train.batch_size)},
        {"train.epochs", as_size(c.train.epochs)},
        {"train.lr", as_double(c.train.lr)},
        {"train.shuffle", as_bool(c.train.shuffle)},
        {"train.seed", [&](const std::string& k, const Entry& e) { c.train_seed = to_u64(k, e); }},
    };
    for (const auto& [key, entry] : entries) {
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("line " + std::to_string(entry.line) + ": unknown key " + key);
        }
        it->second(key, entry);
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string format_config(const ExperimentConfig& c) {
    std::ostringstream o;
    const auto& s = c.scenario;
    o << "[experiment]\n"
      << "master_seed = " << c.master_seed << "\n"
      << "cell_id = " << c.cell_id << "\n"
      << "bandwidth_hz = " << fmt(c.bandwidth_hz) << "\n"
      << "n_train_spots = " << c.n_train_spots << "\n"
      << "n_test_spots = " << c.n_test_spots << "\n"
      << "frames_per_spot_min = " << c.frames_per_spot_min << "\n"
      << "frames_per_spot_max = " << c.frames_per_spot_max << "\n"
      << "\n[scenario]\n"
      << "kind = " << channel::to_string(s.kind) << "\n"
      << "range_min_m = " << fmt(s.range_interval_m.first) << "\n"
      << "range_max_m = " << fmt(s.range_interval_m.second) << "\n"
      << "n_extra_taps = " << s.n_extra_taps << "\n"
      << "excess_delay_mean_s = " << fmt(s.excess_delay_mean_s) << "\n"
      << "tap_decay_db_per_us = " << fmt(s.tap_decay_db_per_us) << "\n"
      << "los_suppression_db = " << fmt(s.los_suppression_db) << "\n"
      << "shadowing_sigma_db = " << fmt(s.shadowing_sigma_db) << "\n"
      << "snr_db = " << fmt(s.snr_db) << "\n"
      << "cfo_min_hz = " << fmt(s.cfo_range_hz.first) << "\n"
      << "cfo_max_hz = " << fmt(s.cfo_range_hz.second) << "\n"
      << "path_loss_exponent = " << fmt(s.path_loss_exponent) << "\n"
      << "ref_loss_db_at_1m = " << fmt(s.ref_loss_db_at_1m) << "\n"
      << "\n[receiver]\n"
      << "n_cir = " << c.n_cir << "\n"
      << "n_taps_kept = " << c.n_taps_kept << "\n"
      << "floor_db = " << fmt(c.floor_db) << "\n"
      << "rx_gain_db = " << fmt(c.rx_gain_db) << "\n"
      << "correct_cfo = " << (c.correct_cfo ? "true" : "false") << "\n"
      << "refine_cfo = " << (c.refine_cfo ? "true" : "false") << "\n"
      << "\n[train]\n"
      << "batch_size = " << c.train.batch_size << "\n"
      << "epochs = " << c.train.epochs << "\n"
      << "lr = " << fmt(c.train.lr) << "\n"
      << "shuffle = " << (c.train.shuffle ? "true" : "false") << "\n";
    if (c.train_seed) o << "seed = " << *c.train_seed << "\n";
    return o.str();
}

}  // namespace cirrange::harness
