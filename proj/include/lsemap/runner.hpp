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

#ifndef LSEMAP_RUNNER_HPP
#define LSEMAP_RUNNER_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsemap/config.hpp"
#include "lsemap/data.hpp"
#include "lsemap/error.hpp"
#include "lsemap/metrics.hpp"
#include "lsemap/session.hpp"
#include "lsemap/transfer.hpp"

namespace lsemap {

inline constexpr const char* kVersion = "1.0.0";

/// Concrete inputs of a run: lattice, optional ground truth, noise level,
/// transfer source and the session configuration with its kernel resolved.
struct Problem {
    GridDomain domain;
    std::optional<GridMap> truth;
    double noise_sd = 0.0;
    std::shared_ptr<const SourceDataset> source;
    SessionConfig session;
};

/// Noisy pre-scan of `map` on every `stride`-th row and column.
inline LabeledDataset prescan(const GridMap& map, std::size_t stride, double noise_sd, std::uint64_t seed) {
    if (stride == 0)
        throw InvalidConfig("pre-scan stride must be at least 1");
    NoisyOracle oracle(map, noise_sd, seed);
    LabeledDataset d;
    const GridDomain& g = map.domain;
    for (std::size_t r = 0; r < g.rows(); r += stride)
        for (std::size_t c = 0; c < g.cols(); c += stride) {
            const std::size_t i = g.index(r, c);
            d.add(g.point_at(i), oracle.query(i));
        }
    return d;
}

/// Kernel chosen once by marginal likelihood on a pre-scan of the map.
inline KernelParams prescan_kernel(const GridMap& map, std::size_t stride, double noise_sd, std::uint64_t seed) {
    const LabeledDataset d = prescan(map, stride, noise_sd, seed);
    const double diag = map.domain.diagonal();
    if (d.size() < 2)
        return default_kernel_params(d.values, diag);
    return select_hyperparameters(d, default_search_grid(d.values, diag));
}

namespace detail {

inline GridMap source_surface(const RunConfig& c, const std::optional<GridMap>& truth, const GridDomain& domain) {
    switch (c.source_mode) {
    case SourceMode::Truth: return *truth;
    case SourceMode::File: return load_grid_csv(c.source_file);
    default: return synth_map(c.source_kind, domain, c.source_params, source_seed(c));
    }
}

}  // namespace detail

/// Measures the source surface at every grid point (every `thin`-th in
/// row-major order) with its own noise stream and fits the source GP.
inline std::shared_ptr<const SourceDataset> build_source(const RunConfig& c, const GridMap& surface,
                                                         double noise_sd, const KernelParams* kernel) {
    NoisyOracle oracle(surface, c.source_noise_sd.value_or(noise_sd),
                       derive_seed(source_seed(c), kSourceNoiseSeedTag));
    LabeledDataset all;
    for (std::size_t i = 0; i < surface.size(); ++i)
        all.add(surface.domain.point_at(i), oracle.query(i));
    LabeledDataset data = thin(all, c.transfer_thin);
    if (kernel)
        return std::make_shared<const SourceDataset>(SourceDataset::fit_with(std::move(data), *kernel));
    return std::make_shared<const SourceDataset>(SourceDataset::fit_auto(std::move(data), surface.domain.diagonal()));
}

inline Problem materialize(const RunConfig& c) {
    Problem p;
    p.session = c.session;
    if (!c.truth_file.empty()) {
        p.truth = load_grid_csv(c.truth_file);
        p.domain = p.truth->domain;
    } else {
        p.domain = GridDomain(c.origin, c.spacing_x, c.spacing_y, c.grid_cols, c.grid_rows);
        if (c.truth_kind)
            p.truth = synth_map(*c.truth_kind, p.domain, c.truth_params, truth_seed(c));
    }
    if (p.truth)
        p.noise_sd = c.noise_sd.value_or(c.noise_fraction * p.truth->range());
    else
        p.noise_sd = c.noise_sd.value_or(0.0);

    if (c.kernel_mode == KernelMode::Prescan) {
        p.session.kernel.automatic = false;
        p.session.kernel.fixed =
            prescan_kernel(*p.truth, c.prescan_stride, p.noise_sd, derive_seed(c.session.seed, kPrescanSeedTag));
    }

    if (c.source_mode != SourceMode::None && uses_transfer(c.session.strategy)) {
        const GridMap surface = detail::source_surface(c, p.truth, p.domain);
        const KernelParams* kernel = p.session.kernel.automatic ? nullptr : &p.session.kernel.fixed;
        p.source = build_source(c, surface, p.noise_sd, kernel);
    }
    return p;
}

inline SessionState start_session(const Problem& p) { return initialize_session(p.domain, p.session, p.source); }

/// Label grid of one state: x_mm,y_mm,label,measured with U/L/C labels.
inline void write_label_grid(std::ostream& out, const SessionState& s) {
    out << "x_mm,y_mm,label,measured\n";
    for (std::size_t i = 0; i < s.domain.size(); ++i) {
        const Position x = s.domain.point_at(i);
        out << detail::format_double(x.x) << ',' << detail::format_double(x.y) << ','
            << label_char(s.partition.label(i)) << ',' << (s.measured[i] ? 1 : 0) << '\n';
    }
}

inline std::string snapshot_name(std::size_t step) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "snapshot_step_%04zu.csv", step);
    return buf;
}

struct RunSummary {
    std::size_t steps = 0;
    SessionStatus status = SessionStatus::Active;
    std::vector<std::string> files;
};

/// Runs the configured benchmark and writes metrics.csv, measurements.csv,
/// snapshot label grids, final_state.csv and manifest.json into `out_dir`.
/// Every output is a pure function of the configuration.
inline RunSummary cli_run(const RunConfig& c, const std::filesystem::path& out_dir) {
    if (!c.has_truth())
        throw InvalidConfig("a benchmark run needs truth.file or truth.kind");
    const Problem p = materialize(c);
    SessionState state = start_session(p);
    NoisyOracle oracle(*p.truth, p.noise_sd, noise_seed(c));
    const std::vector<char> truth = p.truth->truth(c.session.threshold);

    const std::size_t remaining = p.domain.size();
    const std::size_t budget = c.budget.value_or(std::min(remaining, state.max_iterations));
    if (budget > remaining)
        throw InvalidConfig("budget " + std::to_string(budget) + " exceeds the " + std::to_string(remaining) +
                            " grid points");

    std::filesystem::create_directories(out_dir);
    RunSummary summary;
    auto open = [&](const std::string& name) {
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f)
            throw Error("cannot write " + (out_dir / name).string());
        summary.files.push_back(name);
        return f;
    };

    std::ofstream metrics = open("metrics.csv");
    metrics << kMetricCsvHeader << '\n';
    metrics << metric_csv_row(evaluate(0, 0, state.partition, state.posterior.mean, truth)) << '\n';
    std::ofstream log = open("measurements.csv");
    log << "step,index,x_mm,y_mm,value\n";

    std::vector<std::size_t> snaps = c.snapshot_steps;
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
    auto maybe_snapshot = [&](const SessionState& s) {
        if (std::binary_search(snaps.begin(), snaps.end(), s.step)) {
            std::ofstream f = open(snapshot_name(s.step));
            write_label_grid(f, s);
        }
    };
    maybe_snapshot(state);

    state = run_batch(
        std::move(state), [&](std::size_t i) { return oracle.query(i); }, budget,
        [&](const SessionState& s) {
            const MeasurementRecord& m = s.log.back();
            const Position x = s.domain.point_at(m.index);
            log << s.step << ',' << m.index << ',' << detail::format_double(x.x) << ','
                << detail::format_double(x.y) << ',' << detail::format_double(m.value) << '\n';
            metrics << metric_csv_row(evaluate(s.step, s.measured_count(), s.partition, s.posterior.mean, truth))
                    << '\n';
            maybe_snapshot(s);
        });

    {
        std::ofstream f = open("final_state.csv");
        write_label_grid(f, state);
    }

    nlohmann::ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["tool"] = "lsemap";
    manifest["version"] = kVersion;
    manifest["config"] = describe(c);
    manifest["seed"] = c.session.seed;
    manifest["grid"] = {{"cols", p.domain.cols()},
                        {"rows", p.domain.rows()},
                        {"spacing_x", p.domain.spacing_x()},
                        {"spacing_y", p.domain.spacing_y()},
                        {"origin_x", p.domain.origin().x},
                        {"origin_y", p.domain.origin().y},
                        {"n_points", p.domain.size()}};
    manifest["noise_sd"] = p.noise_sd;
    manifest["kernel"] = {{"amplitude", state.params.amplitude},
                          {"length_scale", state.params.length_scale},
                          {"noise_variance", state.params.noise_variance}};
    if (p.source)
        manifest["source_points"] = p.source->size();
    manifest["steps"] = state.step;
    manifest["status"] = status_name(state.status);
    manifest["final_counts"] = {{"upper", state.partition.upper_count()},
                                {"lower", state.partition.lower_count()},
                                {"undetermined", state.partition.undetermined_count()}};
    summary.files.push_back("manifest.json");
    std::sort(summary.files.begin(), summary.files.end());
    manifest["files"] = summary.files;
    {
        std::ofstream f(out_dir / "manifest.json", std::ios::binary);
        if (!f)
            throw Error("cannot write " + (out_dir / "manifest.json").string());
        f << manifest.dump(2) << '\n';
    }
    summary.steps = state.step;
    summary.status = state.status;
    return summary;
}

}  // namespace lsemap

#endif  // LSEMAP_RUNNER_HPP
