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

#ifndef LSEMAP_SERVICE_HPP
#define LSEMAP_SERVICE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lsemap/config.hpp"
#include "lsemap/error.hpp"
#include "lsemap/metrics.hpp"
#include "lsemap/runner.hpp"
#include "lsemap/session.hpp"

namespace lsemap {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

struct ServiceResponse {
    int status = 200;
    Json body;
};

struct ServiceOptions {
    /// Empty keeps sessions in memory only.
    std::filesystem::path data_dir;
    /// A full snapshot.json is written every this many measurements.
    std::size_t snapshot_every = 25;
    /// Timestamp source for log entries.
    std::function<std::string()> clock;
    /// Called with the session id while a mutation holds the session lock.
    std::function<void(const std::string&)> on_mutation;
};

/// UTC time with millisecond resolution, e.g. 2026-01-31T12:00:00.123Z.
inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

struct LogEntry {
    std::size_t step = 0;
    std::size_t index = 0;
    double value = 0.0;
    std::string timestamp;
    bool deviation = false;
};

/// Immutable view of one session after a given step; readers share it.
struct SessionSnapshot {
    SessionState state;
    std::vector<LogEntry> log;
    std::vector<MetricRecord> metrics;
    std::optional<std::size_t> suggestion;
};

/// Live measurement sessions behind the JSON endpoints. Mutations of one
/// session are exclusive (a concurrent second one is rejected); reads work
/// on the latest published snapshot.
class SessionService {
public:
    explicit SessionService(ServiceOptions options = {}) : opt_(std::move(options)) {
        if (!opt_.clock)
            opt_.clock = utc_timestamp;
        if (opt_.snapshot_every == 0)
            opt_.snapshot_every = 1;
        if (!opt_.data_dir.empty()) {
            std::filesystem::create_directories(opt_.data_dir);
            recover();
        }
    }

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    // JSON endpoints. Each returns a status code and body; errors are mapped
    // to {error, message}.

    ServiceResponse create_session(const std::string& body) {
        return guarded([&] {
            const Json cfg = parse_body(body);
            const std::string id = create(cfg);
            auto snap = find(id)->snapshot();
            Json out = envelope(id);
            out["status"] = status_name(snap->state.status);
            out["n_points"] = snap->state.domain.size();
            return ServiceResponse{201, out};
        });
    }

    ServiceResponse get_suggestion(const std::string& id) {
        return guarded([&] { return ServiceResponse{200, suggestion_json(id)}; });
    }

    ServiceResponse post_measurement(const std::string& id, const std::string& body) {
        return guarded([&] {
            const Json req = parse_body(body);
            if (!req.is_object() || !req.contains("index") || !req.contains("value"))
                throw ParseError("measurement body needs 'index' and 'value'");
            const Json& ji = req["index"];
            if (!ji.is_number_integer())
                throw ParseError("'index' must be an integer");
            if (ji.is_number_unsigned() == false && ji.get<std::int64_t>() < 0)
                throw OffGridIndex("grid index " + ji.dump() + " is negative");
            const std::size_t index = ji.get<std::size_t>();
            const Json& jv = req["value"];
            double value = 0.0;
            if (jv.is_number())
                value = jv.get<double>();
            else if (jv.is_string() && detail::parse_double(jv.get<std::string>(), value))
                ;
            else if (jv.is_null())
                value = std::nan("");
            else
                throw ParseError("'value' must be a number");
            return ServiceResponse{200, measure(id, index, value)};
        });
    }

    ServiceResponse get_state(const std::string& id) {
        return guarded([&] { return ServiceResponse{200, state_json(id)}; });
    }

    ServiceResponse get_metrics(const std::string& id) {
        return guarded([&] { return ServiceResponse{200, metrics_json(id)}; });
    }

    // Typed API.

    /// Creates a session from a flat or nested JSON configuration; returns its id.
    std::string create(const Json& config) {
        auto live = std::make_shared<Live>();
        const std::string id = next_id();
        live->id = id;
        build(*live, config);
        if (!opt_.data_dir.empty()) {
            const auto dir = opt_.data_dir / id;
            std::filesystem::create_directories(dir);
            Json rec;
            rec["schema_version"] = kSchemaVersion;
            rec["id"] = id;
            rec["created"] = opt_.clock();
            rec["config"] = config;
            write_atomic(dir / "session.json", rec.dump(2) + "\n");
            std::ofstream(dir / "log.jsonl", std::ios::app);
        }
        std::unique_lock lk(sessions_mu_);
        sessions_[id] = live;
        return id;
    }

    Json suggestion_json(const std::string& id) const {
        auto snap = find(id)->snapshot();
        const SessionState& s = snap->state;
        if (!snap->suggestion)
            throw SessionClosed(std::string("session is ") + status_name(s.status));
        const std::size_t i = *snap->suggestion;
        const Position x = s.domain.point_at(i);
        const GridCell c = s.domain.cell(i);
        const double mu = s.posterior.mean[i], sd = s.posterior.sd[i];
        Json out = envelope(id);
        out["step"] = s.step;
        out["index"] = i;
        out["row"] = c.row;
        out["col"] = c.col;
        out["x_mm"] = x.x;
        out["y_mm"] = x.y;
        out["straddle"] = straddle(CredibleInterval::from_posterior(mu, sd), s.config.threshold);
        out["mean"] = mu;
        out["sd"] = sd;
        out["status"] = status_name(s.status);
        return out;
    }

    Json measure(const std::string& id, std::size_t index, double value) {
        auto live = find(id);
        std::unique_lock lk(live->mutate, std::try_to_lock);
        if (!lk.owns_lock())
            throw ConflictingConcurrentPost("another measurement on session " + id + " is in progress");
        if (opt_.on_mutation)
            opt_.on_mutation(id);
        auto prev = live->snapshot();
        auto next = std::make_shared<SessionSnapshot>();
        next->state = ingest_measurement(prev->state, index, value);
        next->log = prev->log;
        next->metrics = prev->metrics;
        LogEntry e{next->state.step, index, value, opt_.clock(), !prev->suggestion || *prev->suggestion != index};
        next->log.push_back(e);
        if (!live->truth.empty())
            next->metrics.push_back(evaluate(next->state.step, next->state.measured_count(), next->state.partition,
                                             next->state.posterior.mean, live->truth));
        next->suggestion = next_suggestion(next->state);
        if (!opt_.data_dir.empty())
            persist(*live, *next, e);
        live->publish(next);

        const SessionState& s = next->state;
        Json out = envelope(id);
        out["step"] = s.step;
        out["index"] = index;
        out["deviation"] = e.deviation;
        out["counts"] = counts_json(s.partition);
        out["converged"] = s.status == SessionStatus::Converged;
        out["status"] = status_name(s.status);
        return out;
    }

    Json state_json(const std::string& id) const {
        auto live = find(id);
        auto snap = live->snapshot();
        const SessionState& s = snap->state;
        Json out = envelope(id);
        out["status"] = status_name(s.status);
        out["step"] = s.step;
        out["n_measured"] = s.measured_count();
        out["strategy"] = strategy_name(s.config.strategy);
        out["threshold"] = s.config.threshold;
        out["epsilon"] = s.config.margin;
        out["grid"] = {{"cols", s.domain.cols()},         {"rows", s.domain.rows()},
                       {"spacing_x", s.domain.spacing_x()}, {"spacing_y", s.domain.spacing_y()},
                       {"origin_x", s.domain.origin().x},   {"origin_y", s.domain.origin().y}};
        out["kernel"] = {{"amplitude", s.params.amplitude},
                         {"length_scale", s.params.length_scale},
                         {"noise_variance", s.params.noise_variance}};
        out["counts"] = counts_json(s.partition);
        out["has_ground_truth"] = !live->truth.empty();
        out["mean"] = s.posterior.mean;
        out["sd"] = s.posterior.sd;
        std::string labels(s.domain.size(), 'C');
        for (std::size_t i = 0; i < labels.size(); ++i)
            labels[i] = label_char(s.partition.label(i));
        out["labels"] = labels;
        Json log = Json::array();
        for (const LogEntry& e : snap->log) {
            const Position x = s.domain.point_at(e.index);
            log.push_back({{"step", e.step},
                           {"index", e.index},
                           {"x_mm", x.x},
                           {"y_mm", x.y},
                           {"value", e.value},
                           {"timestamp", e.timestamp},
                           {"deviation", e.deviation}});
        }
        out["log"] = std::move(log);
        return out;
    }

    Json metrics_json(const std::string& id) const {
        auto live = find(id);
        if (live->truth.empty())
            throw MetricsUnavailable("session " + id + " was created without a ground-truth map");
        auto snap = live->snapshot();
        Json out = envelope(id);
        out["header"] = kMetricCsvHeader;
        Json rows = Json::array();
        for (const MetricRecord& r : snap->metrics) {
            auto m = [](const Metric& v) -> Json { return v ? Json(*v) : Json(nullptr); };
            rows.push_back({{"step", r.step},
                            {"n_measured", r.n_measured},
                            {"sens_risk", m(r.risk.sensitivity)},
                            {"spec_risk", m(r.risk.specificity)},
                            {"f1_risk", m(r.risk.f1)},
                            {"auc_risk", m(r.auc_risk)},
                            {"sens_cost", m(r.cost.sensitivity)},
                            {"spec_cost", m(r.cost.specificity)},
                            {"f1_cost", m(r.cost.f1)},
                            {"auc_cost", m(r.auc_cost)}});
        }
        out["rows"] = std::move(rows);
        return out;
    }

    /// Latest published state of a session.
    std::shared_ptr<const SessionSnapshot> snapshot(const std::string& id) const { return find(id)->snapshot(); }

    std::vector<std::string> session_ids() const {
        std::shared_lock lk(sessions_mu_);
        std::vector<std::string> ids;
        for (const auto& [id, _] : sessions_)
            ids.push_back(id);
        return ids;
    }

    /// Raised when metrics are requested for a session without ground truth.
    class MetricsUnavailable : public Error {
    public:
        using Error::Error;
    };

    static ServiceResponse error_response(const std::exception& e) {
        auto make = [&](int status, const char* name) {
            Json body;
            body["schema_version"] = kSchemaVersion;
            body["error"] = name;
            body["message"] = e.what();
            return ServiceResponse{status, body};
        };
        if (dynamic_cast<const UnknownSession*>(&e))
            return make(404, "UnknownSession");
        if (dynamic_cast<const MetricsUnavailable*>(&e))
            return make(404, "MetricsUnavailable");
        if (dynamic_cast<const DuplicateMeasurement*>(&e))
            return make(409, "DuplicateMeasurement");
        if (dynamic_cast<const ConflictingConcurrentPost*>(&e))
            return make(409, "ConflictingConcurrentPost");
        if (dynamic_cast<const SessionClosed*>(&e))
            return make(409, "SessionClosed");
        if (dynamic_cast<const Exhausted*>(&e))
            return make(409, "Exhausted");
        if (dynamic_cast<const ValueNotFinite*>(&e))
            return make(400, "ValueNotFinite");
        if (dynamic_cast<const OffGridIndex*>(&e))
            return make(400, "OffGridIndex");
        if (dynamic_cast<const ParseError*>(&e))
            return make(400, "ParseError");
        if (dynamic_cast<const InvalidConfig*>(&e))
            return make(400, "InvalidConfig");
        if (dynamic_cast<const IncompleteLattice*>(&e))
            return make(400, "IncompleteLattice");
        if (dynamic_cast<const NonUniformSpacing*>(&e))
            return make(400, "NonUniformSpacing");
        if (dynamic_cast<const FactorizationFailure*>(&e))
            return make(500, "FactorizationFailure");
        return make(500, "InternalError");
    }

private:
    struct Live {
        std::string id;
        Json config;
        Problem problem;
        std::vector<char> truth;
        std::mutex mutate;
        mutable std::mutex snap_mu;
        std::shared_ptr<const SessionSnapshot> snap;

        std::shared_ptr<const SessionSnapshot> snapshot() const {
            std::lock_guard lk(snap_mu);
            return snap;
        }
        void publish(std::shared_ptr<const SessionSnapshot> s) {
            std::lock_guard lk(snap_mu);
            snap = std::move(s);
        }
    };

    template <class F>
    static ServiceResponse guarded(F&& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            return error_response(e);
        }
    }

    static Json parse_body(const std::string& body) {
        try {
            return Json::parse(body.empty() ? std::string("{}") : body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("request body is not valid JSON: ") + e.what());
        }
    }

    static Json envelope(const std::string& id) {
        Json j;
        j["schema_version"] = kSchemaVersion;
        j["id"] = id;
        return j;
    }

    static Json counts_json(const LevelSetPartition& p) {
        return {{"upper", p.upper_count()}, {"lower", p.lower_count()}, {"undetermined", p.undetermined_count()}};
    }

    static std::optional<std::size_t> next_suggestion(const SessionState& s) {
        if (s.status != SessionStatus::Active)
            return std::nullopt;
        return suggest(s);
    }

    static void build(Live& live, const Json& config) {
        const nlohmann::json plain = nlohmann::json::parse(config.dump());
        const RunConfig rc = build_run_config(config_entries_from_json(plain, "session config"));
        live.config = config;
        live.problem = materialize(rc);
        if (live.problem.truth)
            live.truth = live.problem.truth->truth(rc.session.threshold);
        auto snap = std::make_shared<SessionSnapshot>();
        snap->state = start_session(live.problem);
        if (!live.truth.empty())
            snap->metrics.push_back(
                evaluate(0, 0, snap->state.partition, snap->state.posterior.mean, live.truth));
        snap->suggestion = next_suggestion(snap->state);
        live.snap = std::move(snap);
    }

    std::shared_ptr<Live> find(const std::string& id) const {
        std::shared_lock lk(sessions_mu_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw UnknownSession("no session with id '" + id + "'");
        return it->second;
    }

    std::string next_id() {
        std::lock_guard lk(id_mu_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(++last_id_));
        return buf;
    }

    static void write_atomic(const std::filesystem::path& path, const std::string& text) {
        const auto tmp = path.string() + ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f)
                throw Error("cannot write " + tmp);
            f << text;
            if (!f.flush())
                throw Error("cannot write " + tmp);
        }
        std::filesystem::rename(tmp, path);
    }

    static Json log_line(const LogEntry& e) {
        return {{"step", e.step},
                {"index", e.index},
                {"value", e.value},
                {"timestamp", e.timestamp},
                {"deviation", e.deviation}};
    }

    void persist(const Live& live, const SessionSnapshot& snap, const LogEntry& e) const {
        const auto dir = opt_.data_dir / live.id;
        {
            std::ofstream f(dir / "log.jsonl", std::ios::app | std::ios::binary);
            f << log_line(e).dump() << '\n';
            if (!f.flush())
                throw Error("cannot append to " + (dir / "log.jsonl").string());
        }
        if (snap.state.step % opt_.snapshot_every == 0 || snap.state.status != SessionStatus::Active)
            write_atomic(dir / "snapshot.json", snapshot_record(snap).dump() + "\n");
    }

    static Json snapshot_record(const SessionSnapshot& snap) {
        const SessionState& s = snap.state;
        std::string labels(s.domain.size(), 'C');
        for (std::size_t i = 0; i < labels.size(); ++i)
            labels[i] = label_char(s.partition.label(i));
        Json j;
        j["schema_version"] = kSchemaVersion;
        j["step"] = s.step;
        j["status"] = status_name(s.status);
        j["labels"] = labels;
        return j;
    }

    /// Rebuilds every session under data_dir by replaying its log. A trailing
    /// partial line from an interrupted append is dropped.
    void recover() {
        std::vector<std::filesystem::path> dirs;
        for (const auto& entry : std::filesystem::directory_iterator(opt_.data_dir))
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "session.json"))
                dirs.push_back(entry.path());
        std::sort(dirs.begin(), dirs.end());
        for (const auto& dir : dirs) {
            const std::string id = dir.filename().string();
            std::ifstream in(dir / "session.json");
            const Json rec = Json::parse(in);
            auto live = std::make_shared<Live>();
            live->id = id;
            build(*live, rec.at("config"));

            std::optional<Json> checkpoint;
            if (std::filesystem::exists(dir / "snapshot.json")) {
                std::ifstream sf(dir / "snapshot.json");
                checkpoint = Json::parse(sf);
            }

            std::ifstream log(dir / "log.jsonl");
            std::string line;
            auto snap = std::make_shared<SessionSnapshot>(*live->snap);
            while (std::getline(log, line)) {
                if (line.empty())
                    continue;
                Json j;
                try {
                    j = Json::parse(line);
                } catch (const nlohmann::json::parse_error&) {
                    if (log.peek() == EOF)
                        break;
                    throw ParseError((dir / "log.jsonl").string() + ": corrupt log line");
                }
                LogEntry e{j.at("step").get<std::size_t>(), j.at("index").get<std::size_t>(),
                           j.at("value").get<double>(), j.at("timestamp").get<std::string>(),
                           j.at("deviation").get<bool>()};
                snap->state = ingest_measurement(std::move(snap->state), e.index, e.value);
                if (snap->state.step != e.step)
                    throw Error("session " + id + ": log step " + std::to_string(e.step) + " out of sequence");
                snap->log.push_back(e);
                if (!live->truth.empty())
                    snap->metrics.push_back(evaluate(snap->state.step, snap->state.measured_count(),
                                                     snap->state.partition, snap->state.posterior.mean, live->truth));
                if (checkpoint && checkpoint->at("step").get<std::size_t>() == snap->state.step &&
                    snapshot_record(*snap).at("labels") != checkpoint->at("labels"))
                    throw Error("session " + id + ": replay diverged from snapshot at step " +
                                std::to_string(snap->state.step));
            }
            snap->suggestion = next_suggestion(snap->state);
            live->snap = std::move(snap);

            unsigned long long n = 0;
            if (id.size() > 1 && id[0] == 's' && std::sscanf(id.c_str() + 1, "%llu", &n) == 1)
                last_id_ = std::max<std::uint64_t>(last_id_, n);
            sessions_[id] = std::move(live);
        }
    }

    ServiceOptions opt_;
    mutable std::shared_mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Live>> sessions_;
    std::mutex id_mu_;
    std::uint64_t last_id_ = 0;
};

}  // namespace lsemap

#endif  // LSEMAP_SERVICE_HPP
