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

#ifndef LSEMAP_SESSION_HPP
#define LSEMAP_SESSION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsemap/baselines.hpp"
#include "lsemap/error.hpp"
#include "lsemap/gp.hpp"
#include "lsemap/grid.hpp"
#include "lsemap/level_set.hpp"
#include "lsemap/transfer.hpp"

namespace lsemap {

enum class Strategy { Al, Atl, LssAtl, Random, NonAdaptive };

inline Strategy parse_strategy(std::string_view s) {
    if (s == "al")
        return Strategy::Al;
    if (s == "atl")
        return Strategy::Atl;
    if (s == "lss-atl")
        return Strategy::LssAtl;
    if (s == "random")
        return Strategy::Random;
    if (s == "non-adaptive")
        return Strategy::NonAdaptive;
    throw InvalidConfig("unknown strategy '" + std::string(s) + "' (expected al, atl, lss-atl, random, non-adaptive)");
}

inline const char* strategy_name(Strategy s) {
    switch (s) {
    case Strategy::Al: return "al";
    case Strategy::Atl: return "atl";
    case Strategy::LssAtl: return "lss-atl";
    case Strategy::Random: return "random";
    default: return "non-adaptive";
    }
}

inline bool uses_transfer(Strategy s) { return s == Strategy::Atl || s == Strategy::LssAtl; }

/// Points measured before the strategy takes over. An explicit list wins
/// over random_k.
struct InitDesign {
    std::size_t random_k = 3;
    std::optional<std::vector<std::size_t>> points;
};

struct KernelSettings {
    /// Select hyperparameters by marginal likelihood; otherwise use `fixed`.
    bool automatic = true;
    KernelParams fixed{};
    std::size_t refit_every = 10;
};

struct SessionConfig {
    Strategy strategy = Strategy::Al;
    double threshold = 2.0;
    double margin = 0.0;
    /// Iteration cap T; 0 means the grid size.
    std::size_t max_iterations = 0;
    std::uint64_t seed = 0;
    InitDesign init;
    KernelSettings kernel;
    /// Once determined, a point keeps its label.
    bool sticky_classification = true;
    LssBase lss_base = LssBase::Shifted;
};

enum class SessionStatus { Active, Converged, Exhausted };

inline const char* status_name(SessionStatus s) {
    switch (s) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Converged: return "converged";
    default: return "exhausted";
    }
}

struct MeasurementRecord {
    std::size_t index = 0;
    double value = 0.0;

    friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

/// Everything the active-learning loop carries between steps.
struct SessionState {
    SessionConfig config;
    GridDomain domain;
    std::shared_ptr<const SourceDataset> source;
    std::shared_ptr<const std::vector<std::size_t>> nonadaptive_order;
    std::vector<std::size_t> init_queue;

    std::vector<MeasurementRecord> log;
    std::vector<char> measured;
    LabeledDataset data;

    KernelParams params{};
    bool params_selected = false;
    std::size_t params_selected_at = 0;

    std::optional<GpPosterior> model;
    GridPosterior posterior;
    LevelSetPartition partition;
    std::optional<TransformedDataset> transfer;

    std::size_t step = 0;
    std::size_t max_iterations = 0;
    SessionStatus status = SessionStatus::Active;

    std::size_t measured_count() const { return log.size(); }
    bool is_measured(std::size_t i) const { return measured.at(i) != 0; }
};

namespace detail {

inline void refresh_status(SessionState& s) {
    if (s.step > 0 && s.partition.converged())
        s.status = SessionStatus::Converged;
    else if (s.step >= s.max_iterations || s.measured_count() >= s.domain.size())
        s.status = SessionStatus::Exhausted;
    else
        s.status = SessionStatus::Active;
}

inline std::vector<std::size_t> random_distinct(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace detail

/// Fresh session: every grid index undetermined, no model until data arrives.
inline SessionState initialize_session(const GridDomain& domain, const SessionConfig& config,
                                       std::shared_ptr<const SourceDataset> source = nullptr) {
    if (!std::isfinite(config.threshold))
        throw InvalidConfig("threshold must be finite");
    if (!(config.margin >= 0.0) || !std::isfinite(config.margin))
        throw InvalidConfig("margin must be finite and non-negative");
    if (config.kernel.refit_every == 0)
        throw InvalidConfig("kernel refit interval must be at least 1");
    if (!config.kernel.automatic)
        config.kernel.fixed.validate();
    if (uses_transfer(config.strategy) && !source)
        throw InvalidConfig(std::string("strategy ") + strategy_name(config.strategy) + " requires a source dataset");

    SessionState s;
    s.config = config;
    s.domain = domain;
    if (uses_transfer(config.strategy))
        s.source = std::move(source);
    s.measured.assign(domain.size(), 0);
    s.partition = LevelSetPartition(domain.size(), config.threshold, config.margin);
    s.max_iterations = config.max_iterations == 0 ? domain.size() : config.max_iterations;

    if (config.strategy == Strategy::NonAdaptive) {
        s.nonadaptive_order = std::make_shared<const std::vector<std::size_t>>(nonadaptive_order(domain));
    } else if (config.init.points) {
        std::vector<char> seen(domain.size(), 0);
        for (std::size_t i : *config.init.points) {
            if (i >= domain.size())
                throw InvalidConfig("initial point " + std::to_string(i) + " is off the grid");
            if (!seen[i])
                s.init_queue.push_back(i);
            seen[i] = 1;
        }
    } else {
        if (config.init.random_k > domain.size())
            throw InvalidConfig("initial design asks for " + std::to_string(config.init.random_k) +
                                " points on a grid of " + std::to_string(domain.size()));
        s.init_queue = detail::random_distinct(domain.size(), config.init.random_k, config.seed);
    }

    s.params = config.kernel.automatic ? default_kernel_params({}, domain.diagonal()) : config.kernel.fixed;
    s.posterior = prior_grid(s.params, domain);
    detail::refresh_status(s);
    return s;
}

/// Next index to measure. Stable until the next measurement is ingested.
inline std::size_t suggest(const SessionState& s) {
    if (s.measured_count() >= s.domain.size())
        throw Exhausted("every grid point has been measured");
    for (std::size_t i : s.init_queue)
        if (!s.measured[i])
            return i;
    switch (s.config.strategy) {
    case Strategy::NonAdaptive:
        for (std::size_t i : *s.nonadaptive_order)
            if (!s.measured[i])
                return i;
        throw Exhausted("every grid point has been measured");
    case Strategy::Random: {
        std::seed_seq seq{static_cast<std::uint32_t>(s.config.seed), static_cast<std::uint32_t>(s.config.seed >> 32),
                          static_cast<std::uint32_t>(s.measured_count()), 0x52414e44u};
        std::mt19937_64 rng(seq);
        return random_next(s.domain, s.measured, rng);
    }
    default:
        if (s.measured_count() == 0) {
            const std::size_t c = s.domain.center_index();
            return c;
        }
        return select_next(s.posterior.mean, s.posterior.sd, s.measured, s.config.threshold);
    }
}

/// Adds one observation, refits the model and reclassifies. On error the
/// state is left untouched.
inline SessionState ingest_measurement(SessionState&& s, std::size_t index, double value) {
    if (index >= s.domain.size())
        throw OffGridIndex("grid index " + std::to_string(index) + " is outside [0, " +
                           std::to_string(s.domain.size()) + ")");
    if (!std::isfinite(value))
        throw ValueNotFinite("measurement value must be finite");
    if (s.measured[index])
        throw DuplicateMeasurement("grid index " + std::to_string(index) + " was already measured");
    if (s.status != SessionStatus::Active)
        throw SessionClosed(std::string("session is ") + status_name(s.status));

    LabeledDataset data = s.data;
    data.add(s.domain.point_at(index), value);

    const double diag = s.domain.diagonal();
    KernelParams params = s.params;
    bool selected = s.params_selected;
    std::size_t selected_at = s.params_selected_at;
    if (s.config.kernel.automatic) {
        if (data.size() >= 2 && (!selected || data.size() - selected_at >= s.config.kernel.refit_every)) {
            const auto grid = default_search_grid(data.values, diag);
            params = select_hyperparameters(data, grid);
            selected = true;
            selected_at = data.size();
        } else if (!selected) {
            params = default_kernel_params(data.values, diag);
        }
    }

    std::optional<TransformedDataset> transfer;
    LabeledDataset training;
    switch (s.config.strategy) {
    case Strategy::Atl:
        transfer = diff_gp_transform(data, *s.source, params);
        training = augment(data, *transfer);
        break;
    case Strategy::LssAtl:
        transfer = lss_diff_gp_transform(data, *s.source, params, s.config.lss_base);
        training = augment(data, *transfer);
        break;
    default:
        training = data;
    }
    GpPosterior model = fit(params, training);
    GridPosterior posterior = predict_grid(model, s.domain);

    LevelSetPartition partition = std::move(s.partition);
    if (!s.config.sticky_classification)
        partition.reset();
    partition = classify_all(posterior.mean, posterior.sd, std::move(partition));

    // Commit.
    s.data = std::move(data);
    s.params = params;
    s.params_selected = selected;
    s.params_selected_at = selected_at;
    s.transfer = std::move(transfer);
    s.model = std::move(model);
    s.posterior = std::move(posterior);
    s.partition = std::move(partition);
    s.measured[index] = 1;
    s.log.push_back({index, value});
    s.step += 1;
    detail::refresh_status(s);
    return std::move(s);
}

inline SessionState ingest_measurement(const SessionState& s, std::size_t index, double value) {
    SessionState copy = s;
    return ingest_measurement(std::move(copy), index, value);
}

using StepObserver = std::function<void(const SessionState&)>;

/// Suggest, query, ingest until converged, exhausted or `budget` more
/// measurements were taken. The observer sees every post-step state.
template <class Oracle>
SessionState run_batch(SessionState state, Oracle&& oracle, std::size_t budget, const StepObserver& observer) {
    const std::size_t remaining = state.domain.size() - state.measured_count();
    if (budget > remaining)
        throw InvalidConfig("budget " + std::to_string(budget) + " exceeds the " + std::to_string(remaining) +
                            " unmeasured grid points");
    for (std::size_t k = 0; k < budget && state.status == SessionStatus::Active; ++k) {
        const std::size_t i = suggest(state);
        const double y = oracle(i);
        state = ingest_measurement(std::move(state), i, y);
        if (observer)
            observer(state);
    }
    return state;
}

/// Trajectory of snapshots, starting with the initial state.
template <class Oracle>
std::vector<SessionState> run_batch(SessionState state, Oracle&& oracle, std::size_t budget) {
    std::vector<SessionState> trajectory{state};
    run_batch(std::move(state), std::forward<Oracle>(oracle), budget,
              [&](const SessionState& s) { trajectory.push_back(s); });
    return trajectory;
}

/// Rebuilds a session by feeding a measurement log through the engine.
inline SessionState replay(const GridDomain& domain, const SessionConfig& config,
                           std::shared_ptr<const SourceDataset> source, std::span<const MeasurementRecord> log) {
    SessionState s = initialize_session(domain, config, std::move(source));
    for (const auto& m : log)
        s = ingest_measurement(std::move(s), m.index, m.value);
    return s;
}

}  // namespace lsemap

#endif  // LSEMAP_SESSION_HPP
