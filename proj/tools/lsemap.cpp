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

// lsemap: batch benchmark runner and live measurement-session server.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lsemap/lsemap.hpp"

#include "CLI11.hpp"
#include "lsemap/http_server.hpp"

namespace {

void override_entry(std::vector<lsemap::ConfigEntry>& entries, const std::string& key, const std::string& value) {
    std::erase_if(entries, [&](const lsemap::ConfigEntry& e) { return e.key == key; });
    entries.push_back({key, value, "command line"});
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active-learning level-set estimation for surface defect mapping"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a seeded benchmark and write metric curves and snapshots");
    std::string config_path, out_dir, strategy, snapshot_steps;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    run->add_option("--config", config_path, "Flat key = value configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("--out-dir", out_dir, "Output directory")->required();
    auto* strategy_opt = run->add_option("--strategy", strategy, "al | atl | lss-atl | random | non-adaptive");
    auto* seed_opt = run->add_option("--seed", seed, "Run seed");
    auto* budget_opt = run->add_option("--budget", budget, "Number of measurements to take");
    auto* snap_opt = run->add_option("--snapshot-steps", snapshot_steps, "Comma-separated steps for label-grid snapshots");

    auto* serve = app.add_subcommand("serve", "Serve live measurement sessions over HTTP/JSON");
    const char* env_port = std::getenv("LSEMAP_PORT");
    const char* env_dir = std::getenv("LSEMAP_DATA_DIR");
    const char* env_host = std::getenv("LSEMAP_HOST");
    int port = env_port ? std::atoi(env_port) : 8080;
    std::string data_dir = env_dir ? env_dir : "lsemap-data";
    std::string host = env_host ? env_host : "127.0.0.1";
    std::size_t snapshot_every = 25;
    serve->add_option("--port", port, "Port (env LSEMAP_PORT)")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "Session storage (env LSEMAP_DATA_DIR)")->capture_default_str();
    serve->add_option("--host", host, "Bind address (env LSEMAP_HOST)")->capture_default_str();
    serve->add_option("--snapshot-every", snapshot_every, "Measurements between full snapshots")->capture_default_str();

    auto* synth = app.add_subcommand("synth", "Write a synthetic ground-truth grid CSV");
    std::string kind = "edge_band", out_file;
    std::size_t cols = 40, rows = 40;
    double spacing = 2.0;
    std::uint64_t synth_seed = 0;
    std::vector<std::string> params;
    synth->add_option("--kind", kind, "edge_band | sinusoid_ridge | gp_draw")->capture_default_str();
    synth->add_option("--cols", cols)->capture_default_str();
    synth->add_option("--rows", rows)->capture_default_str();
    synth->add_option("--spacing", spacing, "Lattice spacing in mm")->capture_default_str();
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("--param", params, "Surface parameter as name=value, e.g. band_mm=10");
    synth->add_option("--out", out_file, "Output CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            std::ifstream in(config_path);
            auto entries = lsemap::parse_config_entries(in, config_path);
            if (*strategy_opt)
                override_entry(entries, "strategy", strategy);
            if (*seed_opt)
                override_entry(entries, "seed", std::to_string(seed));
            if (*budget_opt)
                override_entry(entries, "budget", std::to_string(budget));
            if (*snap_opt)
                override_entry(entries, "snapshot_steps", snapshot_steps);
            const auto config =
                lsemap::build_run_config(entries, std::filesystem::path(config_path).parent_path());
            const auto summary = lsemap::cli_run(config, out_dir);
            std::cout << "steps " << summary.steps << ", status " << lsemap::status_name(summary.status) << ", wrote "
                      << summary.files.size() << " files to " << out_dir << '\n';
            return 0;
        }
        if (*serve) {
            lsemap::ServiceOptions opt;
            opt.data_dir = data_dir;
            opt.snapshot_every = snapshot_every;
            lsemap::SessionService service(opt);
            httplib::Server server;
            lsemap::mount(server, service);
            g_server = &server;
            std::signal(SIGINT, [](int) { g_server->stop(); });
            std::signal(SIGTERM, [](int) { g_server->stop(); });
            std::cerr << "lsemap serving on " << host << ':' << port << ", data in " << data_dir << " ("
                      << service.session_ids().size() << " sessions restored)\n";
            if (!server.listen(host, port)) {
                std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
                return 1;
            }
            return 0;
        }
        if (*synth) {
            const auto k = lsemap::parse_synth_kind(kind);
            std::vector<lsemap::ConfigEntry> entries{{"truth.kind", kind, "command line"},
                                                     {"truth.seed", std::to_string(synth_seed), "command line"},
                                                     {"grid.cols", std::to_string(cols), "command line"},
                                                     {"grid.rows", std::to_string(rows), "command line"}};
            for (const auto& p : params) {
                const auto eq = p.find('=');
                if (eq == std::string::npos)
                    throw lsemap::ParseError("--param " + p + ": expected name=value");
                entries.push_back({"truth." + p.substr(0, eq), p.substr(eq + 1), "--param"});
            }
            auto config = lsemap::build_run_config(entries);
            config.spacing_x = config.spacing_y = spacing;
            const lsemap::GridDomain domain(config.origin, spacing, spacing, cols, rows);
            lsemap::write_grid_csv(out_file, lsemap::synth_map(k, domain, config.truth_params, synth_seed));
            std::cout << "wrote " << domain.size() << " points to " << out_file << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
