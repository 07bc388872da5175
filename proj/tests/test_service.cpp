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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <thread>

#include "lsemap/http_server.hpp"
#include "lsemap/runner.hpp"
#include "support.hpp"

using namespace lsemap;
namespace fs = std::filesystem;

namespace {

Json small_config(const std::string& strategy = "al") {
    return Json::parse(R"({"strategy":")" + strategy + R"(","seed":3,
        "grid":{"cols":10,"rows":10,"spacing":2},
        "truth":{"kind":"edge_band","band_mm":4},
        "kernel":"fixed","kernel.amplitude":4,"kernel.length_scale":5,"kernel.noise_variance":0.0001})");
}

ServiceOptions fixed_clock(const fs::path& dir = {}) {
    ServiceOptions o;
    o.data_dir = dir;
    o.clock = [] { return std::string("2026-01-01T00:00:00.000Z"); };
    return o;
}

// Drives `n` suggest/measure rounds against the noiseless truth of the session.
void drive(SessionService& svc, const std::string& id, std::size_t n) {
    const auto snap = svc.snapshot(id);
    const GridMap truth = synth_map(SynthKind::EdgeBand, snap->state.domain, [] {
        SynthParams p;
        p.band_mm = 4;
        return p;
    }(), 0);
    for (std::size_t k = 0; k < n && svc.snapshot(id)->suggestion; ++k) {
        const auto s = svc.suggestion_json(id);
        const std::size_t i = s["index"];
        svc.measure(id, i, truth.values[i]);
    }
}

}  // namespace

TEST(Service, CreateAndSuggestIsIdempotent) {
    SessionService svc(fixed_clock());
    const auto r = svc.create_session(small_config().dump());
    ASSERT_EQ(r.status, 201) << r.body.dump();
    const std::string id = r.body["id"];
    EXPECT_EQ(id, "s000001");
    EXPECT_EQ(r.body["n_points"], 100);
    const auto a = svc.get_suggestion(id), b = svc.get_suggestion(id);
    EXPECT_EQ(a.status, 200);
    EXPECT_EQ(a.body, b.body);
    EXPECT_EQ(a.body["step"], 0);
}

TEST(Service, MeasurementsMatchReplay) {
    SessionService svc(fixed_clock());
    const std::string id = svc.create(small_config());
    drive(svc, id, 12);
    const auto state = svc.get_state(id);
    ASSERT_EQ(state.status, 200);
    EXPECT_EQ(state.body["step"], 12);
    EXPECT_EQ(state.body["log"].size(), 12u);
    EXPECT_EQ(state.body["has_ground_truth"], true);
    EXPECT_FALSE(state.body["log"][0]["deviation"].get<bool>());

    const auto snap = svc.snapshot(id);
    std::vector<MeasurementRecord> log;
    for (const auto& e : state.body["log"])
        log.push_back({e["index"].get<std::size_t>(), e["value"].get<double>()});
    const SessionState again = replay(snap->state.domain, snap->state.config, nullptr, log);
    EXPECT_EQ(again.posterior.mean, snap->state.posterior.mean);
    EXPECT_EQ(state.body["mean"].get<std::vector<double>>(), again.posterior.mean);
    std::string labels;
    for (std::size_t i = 0; i < again.domain.size(); ++i)
        labels += label_char(again.partition.label(i));
    EXPECT_EQ(state.body["labels"], labels);
}

TEST(Service, DeviationIsFlagged) {
    SessionService svc(fixed_clock());
    const std::string id = svc.create(small_config());
    const std::size_t s = svc.suggestion_json(id)["index"];
    const auto r = svc.measure(id, s == 0 ? 1 : 0, 1.0);
    EXPECT_TRUE(r["deviation"].get<bool>());
}

TEST(Service, ErrorStatuses) {
    SessionService svc(fixed_clock());
    const std::string id = svc.create(small_config());
    EXPECT_EQ(svc.get_state("nope").status, 404);
    EXPECT_EQ(svc.get_state("nope").body["error"], "UnknownSession");
    EXPECT_EQ(svc.post_measurement(id, R"({"index":500,"value":1})").status, 400);
    EXPECT_EQ(svc.post_measurement(id, R"({"index":-1,"value":1})").status, 400);
    EXPECT_EQ(svc.post_measurement(id, R"({"index":3,"value":null})").body["error"], "ValueNotFinite");
    EXPECT_EQ(svc.post_measurement(id, R"({"index":3})").body["error"], "ParseError");
    EXPECT_EQ(svc.post_measurement(id, "{not json").status, 400);
    EXPECT_EQ(svc.post_measurement(id, R"({"index":3,"value":"2.5"})").status, 200);
    const auto dup = svc.post_measurement(id, R"({"index":3,"value":1})");
    EXPECT_EQ(dup.status, 409);
    EXPECT_EQ(dup.body["error"], "DuplicateMeasurement");
    EXPECT_EQ(svc.create_session(R"({"strategy":"zigzag"})").status, 400);
    EXPECT_EQ(svc.create_session(R"({"bogus":1})").body["error"], "ParseError");
    EXPECT_EQ(svc.create_session(R"({"strategy":"atl"})").body["error"], "InvalidConfig");
}

TEST(Service, MetricsNeedGroundTruth) {
    SessionService svc(fixed_clock());
    const std::string with = svc.create(small_config());
    drive(svc, with, 3);
    const auto m = svc.get_metrics(with);
    ASSERT_EQ(m.status, 200);
    EXPECT_EQ(m.body["rows"].size(), 4u);
    EXPECT_EQ(m.body["rows"][3]["step"], 3);
    EXPECT_TRUE(m.body["rows"][0].contains("auc_cost"));
    const std::string without = svc.create(Json::parse(R"({"grid":{"cols":4,"rows":4}})"));
    EXPECT_EQ(svc.get_metrics(without).status, 404);
    EXPECT_EQ(svc.get_metrics(without).body["error"], "MetricsUnavailable");
    EXPECT_EQ(svc.get_state(without).body["has_ground_truth"], false);
}

TEST(Service, ConcurrentSecondPostIsRejected) {
    std::string other_status;
    SessionService* self = nullptr;
    ServiceOptions o = fixed_clock();
    bool fired = false;
    o.on_mutation = [&](const std::string& id) {
        if (fired)
            return;
        fired = true;
        auto f = std::async(std::launch::async, [&] { return self->post_measurement(id, R"({"index":7,"value":1})"); });
        const ServiceResponse r = f.get();
        other_status = std::to_string(r.status) + " " + r.body["error"].get<std::string>();
    };
    SessionService svc(o);
    self = &svc;
    const std::string id = svc.create(small_config());
    EXPECT_EQ(svc.post_measurement(id, R"({"index":5,"value":1})").status, 200);
    EXPECT_EQ(other_status, "409 ConflictingConcurrentPost");
    EXPECT_EQ(svc.snapshot(id)->state.measured_count(), 1u);
}

TEST(Service, ConcurrentReadersSeeConsistentSnapshots) {
    SessionService svc(fixed_clock());
    const std::string id = svc.create(small_config());
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::thread reader([&] {
        while (!done) {
            const auto st = svc.state_json(id);
            if (st["log"].size() != st["step"].get<std::size_t>())
                ++bad;
        }
    });
    drive(svc, id, 15);
    done = true;
    reader.join();
    EXPECT_EQ(bad, 0);
}

TEST(Service, ClosedSessionReportsConflict) {
    SessionService svc(fixed_clock());
    Json c = small_config();
    c["max_iterations"] = 2;
    const std::string id = svc.create(c);
    drive(svc, id, 2);
    EXPECT_EQ(svc.get_suggestion(id).status, 409);
    EXPECT_EQ(svc.post_measurement(id, R"({"index":99,"value":1})").body["error"], "SessionClosed");
}

TEST(Service, PersistsAndRecoversAcrossRestart) {
    const auto dir = lsemap::testing::scratch_dir("service_persist");
    std::string id;
    Json before_state, before_suggestion;
    {
        ServiceOptions o = fixed_clock(dir);
        o.snapshot_every = 4;
        SessionService svc(o);
        id = svc.create(small_config());
        drive(svc, id, 9);
        before_state = svc.state_json(id);
        before_suggestion = svc.suggestion_json(id);
    }
    EXPECT_TRUE(fs::exists(dir / id / "session.json"));
    EXPECT_TRUE(fs::exists(dir / id / "snapshot.json"));
    const auto snap = nlohmann::json::parse(lsemap::testing::read_file(dir / id / "snapshot.json"));
    EXPECT_EQ(snap["step"], 8);

    // A torn trailing append is dropped on recovery.
    {
        std::ofstream f(dir / id / "log.jsonl", std::ios::app);
        f << R"({"step":10,"ind)";
    }
    ServiceOptions o = fixed_clock(dir);
    SessionService svc(o);
    EXPECT_EQ(svc.state_json(id), before_state);
    EXPECT_EQ(svc.suggestion_json(id), before_suggestion);
    EXPECT_EQ(svc.create(small_config()), "s000002");
}

TEST(Service, TransferSessionsDifferFromPlain) {
    SessionService svc(fixed_clock());
    Json t = small_config("lss-atl");
    t["source"] = "truth";
    const std::string a = svc.create(small_config()), b = svc.create(t);
    drive(svc, a, 4);
    drive(svc, b, 4);
    EXPECT_NE(svc.state_json(a)["mean"], svc.state_json(b)["mean"]);
}

TEST(Http, EndToEndOverLocalhost) {
    SessionService svc(fixed_clock());
    httplib::Server server;
    mount(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    auto created = cli.Post("/sessions", small_config().dump(), "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 201);
    const std::string id = Json::parse(created->body)["id"];

    auto sug = cli.Get("/sessions/" + id + "/suggestion");
    ASSERT_TRUE(sug);
    const std::size_t index = Json::parse(sug->body)["index"];
    auto post = cli.Post("/sessions/" + id + "/measurements",
                         Json{{"index", index}, {"value", 3.0}}.dump(), "application/json");
    ASSERT_TRUE(post);
    EXPECT_EQ(post->status, 200);
    auto state = cli.Get("/sessions/" + id + "/state");
    EXPECT_EQ(Json::parse(state->body)["step"], 1);
    auto metrics = cli.Get("/sessions/" + id + "/metrics");
    EXPECT_EQ(metrics->status, 200);
    auto missing = cli.Get("/sessions/zzz/state");
    EXPECT_EQ(missing->status, 404);
    auto nowhere = cli.Get("/elsewhere");
    EXPECT_EQ(nowhere->status, 404);
    EXPECT_EQ(Json::parse(nowhere->body)["error"], "NotFound");

    server.stop();
    th.join();
}
