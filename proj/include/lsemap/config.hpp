/*
 * Copyright 2026 The lsemap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef LSEMAP_CONFIG_HPP
#define LSEMAP_CONFIG_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lsemap/data.hpp"
#include "lsemap/error.hpp"
#include "lsemap/session.hpp"

namespace lsemap {

enum class KernelMode { Auto, Fixed, Prescan };

inline const char* kernel_mode_name(KernelMode m) {
    switch (m) {
    case KernelMode::Auto: return "auto";
    case KernelMode::Fixed: return "fixed";
    default: return "prescan";
    }
}

enum class SourceMode { None, Truth, File, Synth };

/// One `key = value` line together with its origin, e.g. "run.cfg:12".
struct ConfigEntry {
    std::string key;
    std::string value;
    std::string where;
};

/// Everything a benchmark run or a live session is built from.
struct RunConfig {
    SessionConfig session;
    KernelMode kernel_mode = KernelMode::Auto;
    /// Pre-scan lattice stride along each axis.
    std::size_t prescan_stride = 2;

    std::string truth_file;
    std::optional<SynthKind> truth_kind;
    SynthParams truth_params;
    std::optional<std::uint64_t> truth_seed;

    std::size_t grid_cols = 40;
    std::size_t grid_rows = 40;
    double spacing_x = 2.0;
    double spacing_y = 2.0;
    Position origin{};

    std::optional<double> noise_sd;
    /// Noise sd as a fraction of the map range when noise_sd is unset.
    double noise_fraction = 0.01;
    std::optional<std::uint64_t> noise_seed;

    SourceMode source_mode = SourceMode::None;
    std::string source_file;
    SynthKind source_kind = SynthKind::EdgeBand;
    SynthParams source_params;
    std::optional<std::uint64_t> source_seed;
    std::optional<double> source_noise_sd;
    std::size_t transfer_thin = 1;

    std::optional<std::size_t> budget;
    std::vector<std::size_t> snapshot_steps;

    bool has_truth() const { return !truth_file.empty() || truth_kind.has_value(); }
};

/// Independent stream seed for one consumer of the run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
    std::mt19937_64 rng(seq);
    return rng();
}

inline constexpr std::uint32_t kTruthSeedTag = 1;
inline constexpr std::uint32_t kNoiseSeedTag = 2;
inline constexpr std::uint32_t kSourceSeedTag = 3;
inline constexpr std::uint32_t kSourceNoiseSeedTag = 4;
inline constexpr std::uint32_t kPrescanSeedTag = 5;

inline std::uint64_t truth_seed(const RunConfig& c) {
    return c.truth_seed.value_or(derive_seed(c.session.seed, kTruthSeedTag));
}
inline std::uint64_t noise_seed(const RunConfig& c) {
    return c.noise_seed.value_or(derive_seed(c.session.seed, kNoiseSeedTag));
}
inline std::uint64_t source_seed(const RunConfig& c) {
    return c.source_seed.value_or(derive_seed(c.session.seed, kSourceSeedTag));
}

namespace detail {

[[noreturn]] inline void config_error(const ConfigEntry& e, const std::string& msg) {
    throw ParseError(e.where + ": " + e.key + ": " + msg);
}

inline double config_double(const ConfigEntry& e) {
    double v = 0.0;
    if (!parse_double(e.value, v) || !std::isfinite(v))
        config_error(e, "expected a finite number, got '" + e.value + "'");
    return v;
}

inline std::uint64_t config_u64(const ConfigEntry& e) {
    std::uint64_t v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end || e.value.empty())
        config_error(e, "expected a non-negative integer, got '" + e.value + "'");
    return v;
}

inline std::size_t config_size(const ConfigEntry& e) { return static_cast<std::size_t>(config_u64(e)); }

inline bool config_bool(const ConfigEntry& e) {
    if (e.value == "true" || e.value == "1" || e.value == "yes")
        return true;
    if (e.value == "false" || e.value == "0" || e.value == "no")
        return false;
    config_error(e, "expected true or false, got '" + e.value + "'");
}

inline std::vector<std::size_t> config_index_list(const ConfigEntry& e) {
    std::vector<std::size_t> out;
    std::string_view rest = e.value;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string item(trim(rest.substr(0, comma)));
        ConfigEntry one{e.key, item, e.where};
        if (!item.empty())
            out.push_back(config_size(one));
        if (comma == std::string_view::npos)
            break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

inline bool set_synth_param(SynthParams& p, std::string_view name, const ConfigEntry& e) {
    if (name == "features") {
        p.features = config_size(e);
        return true;
    }
    double* field = name == "high"        ? &p.high
                    : name == "low"       ? &p.low
                    : name == "band_mm"   ? &p.band_mm
                    : name == "ramp_mm"   ? &p.ramp_mm
                    : name == "level"     ? &p.level
                    : name == "amplitude" ? &p.amplitude
                    : name == "length_mm" ? &p.length_mm
                    : name == "scale"     ? &p.scale
                    : name == "offset"    ? &p.offset
                                          : nullptr;
    if (!field)
        return false;
    *field = config_double(e);
    return true;
}

inline std::string resolve_path(const std::string& value, const std::filesystem::path& base) {
    std::filesystem::path p(value);
    if (p.is_relative() && !base.empty())
        p = base / p;
    return p.lexically_normal().string();
}

}  // namespace detail

/// Builds a configuration from parsed entries. Relative file references are
/// resolved against `base_dir`.
inline RunConfig build_run_config(const std::vector<ConfigEntry>& entries, const std::filesystem::path& base_dir = {}) {
    RunConfig c;
    std::set<std::string> seen;
    std::optional<double> amp, len, noise;
    std::string kernel_where;

    for (const ConfigEntry& e : entries) {
        if (!seen.insert(e.key).second)
            detail::config_error(e, "key given more than once");
        const std::string_view k = e.key;
        try {
            if (k == "strategy")
                c.session.strategy = parse_strategy(e.value);
            else if (k == "threshold")
                c.session.threshold = detail::config_double(e);
            else if (k == "epsilon")
                c.session.margin = detail::config_double(e);
            else if (k == "max_iterations")
                c.session.max_iterations = detail::config_size(e);
            else if (k == "seed")
                c.session.seed = detail::config_u64(e);
            else if (k == "init.random_k")
                c.session.init.random_k = detail::config_size(e);
            else if (k == "init.points")
                c.session.init.points = detail::config_index_list(e);
            else if (k == "kernel") {
                kernel_where = e.where;
                if (e.value == "auto")
                    c.kernel_mode = KernelMode::Auto;
                else if (e.value == "fixed")
                    c.kernel_mode = KernelMode::Fixed;
                else if (e.value == "prescan")
                    c.kernel_mode = KernelMode::Prescan;
                else
                    detail::config_error(e, "expected auto, fixed or prescan");
            } else if (k == "kernel.amplitude")
                amp = detail::config_double(e);
            else if (k == "kernel.length_scale")
                len = detail::config_double(e);
            else if (k == "kernel.noise_variance")
                noise = detail::config_double(e);
            else if (k == "kernel.refit_every")
                c.session.kernel.refit_every = detail::config_size(e);
            else if (k == "kernel.prescan_stride")
                c.prescan_stride = detail::config_size(e);
            else if (k == "sticky_classification")
                c.session.sticky_classification = detail::config_bool(e);
            else if (k == "transfer.lss_base") {
                if (e.value == "shifted")
                    c.session.lss_base = LssBase::Shifted;
                else if (e.value == "raw")
                    c.session.lss_base = LssBase::Raw;
                else
                    detail::config_error(e, "expected shifted or raw");
            } else if (k == "transfer.thin")
                c.transfer_thin = detail::config_size(e);
            else if (k == "truth.file")
                c.truth_file = detail::resolve_path(e.value, base_dir);
            else if (k == "truth.kind")
                c.truth_kind = parse_synth_kind(e.value);
            else if (k == "truth.seed")
                c.truth_seed = detail::config_u64(e);
            else if (k.starts_with("truth.") && detail::set_synth_param(c.truth_params, k.substr(6), e)) {
            } else if (k == "grid.cols")
                c.grid_cols = detail::config_size(e);
            else if (k == "grid.rows")
                c.grid_rows = detail::config_size(e);
            else if (k == "grid.spacing")
                c.spacing_x = c.spacing_y = detail::config_double(e);
            else if (k == "grid.spacing_x")
                c.spacing_x = detail::config_double(e);
            else if (k == "grid.spacing_y")
                c.spacing_y = detail::config_double(e);
            else if (k == "grid.origin_x")
                c.origin.x = detail::config_double(e);
            else if (k == "grid.origin_y")
                c.origin.y = detail::config_double(e);
            else if (k == "noise.sd")
                c.noise_sd = detail::config_double(e);
            else if (k == "noise.fraction")
                c.noise_fraction = detail::config_double(e);
            else if (k == "noise.seed")
                c.noise_seed = detail::config_u64(e);
            else if (k == "source") {
                if (e.value == "truth")
                    c.source_mode = SourceMode::Truth;
                else if (e.value == "none")
                    c.source_mode = SourceMode::None;
                else
                    detail::config_error(e, "expected truth or none (use source.file or source.kind otherwise)");
            } else if (k == "source.file") {
                c.source_mode = SourceMode::File;
                c.source_file = detail::resolve_path(e.value, base_dir);
            } else if (k == "source.kind") {
                c.source_mode = SourceMode::Synth;
                c.source_kind = parse_synth_kind(e.value);
            } else if (k == "source.seed")
                c.source_seed = detail::config_u64(e);
            else if (k == "source.noise_sd")
                c.source_noise_sd = detail::config_double(e);
            else if (k.starts_with("source.") && detail::set_synth_param(c.source_params, k.substr(7), e)) {
            } else if (k == "budget")
                c.budget = detail::config_size(e);
            else if (k == "snapshot_steps")
                c.snapshot_steps = detail::config_index_list(e);
            else
                detail::config_error(e, "unknown key");
        } catch (const ParseError&) {
            throw;
        } catch (const Error& err) {
            detail::config_error(e, err.what());
        }
    }

    auto fail = [](const std::string& msg) { throw InvalidConfig(msg); };
    if (c.kernel_mode == KernelMode::Fixed) {
        if (!amp || !len || !noise)
            fail(kernel_where + ": kernel = fixed needs kernel.amplitude, kernel.length_scale and kernel.noise_variance");
        c.session.kernel.automatic = false;
        c.session.kernel.fixed = {*amp, *len, *noise};
        c.session.kernel.fixed.validate();
    } else if (amp || len || noise) {
        fail("kernel.amplitude, kernel.length_scale and kernel.noise_variance require kernel = fixed");
    }
    if (!c.truth_file.empty() && c.truth_kind)
        fail("truth.file and truth.kind are mutually exclusive");
    if (c.noise_sd && !(*c.noise_sd >= 0.0))
        fail("noise.sd must be non-negative");
    if (!(c.noise_fraction >= 0.0))
        fail("noise.fraction must be non-negative");
    if (c.source_noise_sd && !(*c.source_noise_sd >= 0.0))
        fail("source.noise_sd must be non-negative");
    if (c.prescan_stride == 0)
        fail("kernel.prescan_stride must be at least 1");
    if (c.transfer_thin == 0)
        fail("transfer.thin must be at least 1");
    if (c.kernel_mode == KernelMode::Prescan && !c.has_truth())
        fail("kernel = prescan needs a ground-truth map (truth.file or truth.kind)");
    if (c.source_mode == SourceMode::Truth && !c.has_truth())
        fail("source = truth needs a ground-truth map");
    if (uses_transfer(c.session.strategy) && c.source_mode == SourceMode::None)
        fail(std::string("strategy ") + strategy_name(c.session.strategy) +
             " needs a source (source = truth, source.file or source.kind)");
    return c;
}

/// Reads `key = value` lines; `#` starts a comment.
inline std::vector<ConfigEntry> parse_config_entries(std::istream& in, const std::string& where) {
    std::vector<ConfigEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view v = line;
        if (const auto hash = v.find('#'); hash != std::string_view::npos)
            v = v.substr(0, hash);
        v = detail::trim(v);
        if (v.empty())
            continue;
        const std::string loc = where + ":" + std::to_string(lineno);
        const auto eq = v.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(loc + ": expected 'key = value'");
        ConfigEntry e{std::string(detail::trim(v.substr(0, eq))), std::string(detail::trim(v.substr(eq + 1))), loc};
        if (e.key.empty())
            throw ParseError(loc + ": empty key");
        out.push_back(std::move(e));
    }
    return out;
}

inline RunConfig parse_run_config(std::istream& in, const std::string& where,
                                  const std::filesystem::path& base_dir = {}) {
    return build_run_config(parse_config_entries(in, where), base_dir);
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path + ": cannot open config file");
    return parse_run_config(in, path, std::filesystem::path(path).parent_path());
}

/// Flattens a JSON object into entries; nested objects join keys with '.',
/// arrays become comma-separated lists.
inline std::vector<ConfigEntry> config_entries_from_json(const nlohmann::json& j, const std::string& where,
                                                         const std::string& prefix = {}) {
    if (!j.is_object())
        throw ParseError(where + ": configuration must be a JSON object");
    std::vector<ConfigEntry> out;
    for (const auto& [key, value] : j.items()) {
        const std::string k = prefix.empty() ? key : prefix + "." + key;
        auto scalar = [&](const nlohmann::json& v) -> std::string {
            if (v.is_string())
                return v.get<std::string>();
            if (v.is_boolean())
                return v.get<bool>() ? "true" : "false";
            if (v.is_number_unsigned())
                return std::to_string(v.get<std::uint64_t>());
            if (v.is_number_integer())
                return std::to_string(v.get<std::int64_t>());
            if (v.is_number())
                return detail::format_double(v.get<double>());
            throw ParseError(where + ": " + k + ": unsupported value " + v.dump());
        };
        if (value.is_object()) {
            auto nested = config_entries_from_json(value, where, k);
            out.insert(out.end(), nested.begin(), nested.end());
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& item : value) {
                if (!joined.empty())
                    joined += ',';
                joined += scalar(item);
            }
            out.push_back({k, joined, where});
        } else {
            out.push_back({k, scalar(value), where});
        }
    }
    return out;
}

/// Resolved configuration, including defaulted keys and derived seeds.
inline nlohmann::ordered_json describe(const RunConfig& c) {
    const SessionConfig& s = c.session;
    nlohmann::ordered_json j;
    j["strategy"] = strategy_name(s.strategy);
    j["threshold"] = s.threshold;
    j["epsilon"] = s.margin;
    j["max_iterations"] = s.max_iterations;
    j["seed"] = s.seed;
    if (s.init.points)
        j["init.points"] = *s.init.points;
    else
        j["init.random_k"] = s.init.random_k;
    j["kernel"] = kernel_mode_name(c.kernel_mode);
    if (c.kernel_mode == KernelMode::Fixed) {
        j["kernel.amplitude"] = s.kernel.fixed.amplitude;
        j["kernel.length_scale"] = s.kernel.fixed.length_scale;
        j["kernel.noise_variance"] = s.kernel.fixed.noise_variance;
    }
    if (c.kernel_mode == KernelMode::Auto)
        j["kernel.refit_every"] = s.kernel.refit_every;
    if (c.kernel_mode == KernelMode::Prescan)
        j["kernel.prescan_stride"] = c.prescan_stride;
    j["sticky_classification"] = s.sticky_classification;

    auto synth = [&](const std::string& prefix, SynthKind kind, const SynthParams& p) {
        if (kind == SynthKind::EdgeBand) {
            j[prefix + "high"] = p.high;
            j[prefix + "low"] = p.low;
            j[prefix + "band_mm"] = p.band_mm;
            j[prefix + "ramp_mm"] = p.ramp_mm;
        } else {
            j[prefix + "level"] = p.level;
            j[prefix + "amplitude"] = p.amplitude;
            j[prefix + "length_mm"] = p.length_mm;
            if (kind == SynthKind::GpDraw)
                j[prefix + "features"] = p.features;
        }
        j[prefix + "scale"] = p.scale;
        j[prefix + "offset"] = p.offset;
    };
    if (!c.truth_file.empty()) {
        j["truth.file"] = c.truth_file;
    } else {
        if (c.truth_kind) {
            j["truth.kind"] = synth_kind_name(*c.truth_kind);
            j["truth.seed"] = truth_seed(c);
            synth("truth.", *c.truth_kind, c.truth_params);
        }
        j["grid.cols"] = c.grid_cols;
        j["grid.rows"] = c.grid_rows;
        j["grid.spacing_x"] = c.spacing_x;
        j["grid.spacing_y"] = c.spacing_y;
        j["grid.origin_x"] = c.origin.x;
        j["grid.origin_y"] = c.origin.y;
    }
    if (c.has_truth()) {
        if (c.noise_sd)
            j["noise.sd"] = *c.noise_sd;
        else
            j["noise.fraction"] = c.noise_fraction;
        j["noise.seed"] = noise_seed(c);
    }
    switch (c.source_mode) {
    case SourceMode::None: break;
    case SourceMode::Truth: j["source"] = "truth"; break;
    case SourceMode::File: j["source.file"] = c.source_file; break;
    case SourceMode::Synth:
        j["source.kind"] = synth_kind_name(c.source_kind);
        synth("source.", c.source_kind, c.source_params);
        break;
    }
    if (c.source_mode != SourceMode::None) {
        j["source.seed"] = source_seed(c);
        if (c.source_noise_sd)
            j["source.noise_sd"] = *c.source_noise_sd;
        j["transfer.thin"] = c.transfer_thin;
        j["transfer.lss_base"] = s.lss_base == LssBase::Shifted ? "shifted" : "raw";
    }
    if (c.budget)
        j["budget"] = *c.budget;
    j["snapshot_steps"] = c.snapshot_steps;
    return j;
}

}  // namespace lsemap

#endif  // LSEMAP_CONFIG_HPP
