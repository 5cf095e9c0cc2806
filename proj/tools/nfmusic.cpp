// SPDX-License-Identifier: Apache-2.0
//
// nfmusic: near-field / far-field MUSIC mismatch simulator
// Copyright (C) 2026 The nfmusic authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
// Command line front end: sweeps, single configs, spectrum dumps and plots.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure,
// 3 a claim checked by --assert does not hold.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "nfmusic/harness.hpp"

namespace
{
    using namespace nfmusic;

    constexpr int exit_config = 1;
    constexpr int exit_runtime = 2;
    constexpr int exit_assert = 3;

    struct Overrides
    {
        std::vector<std::string> scenarios;
        std::string out;
        std::optional<std::uint64_t> seed;
        std::optional<int> trials;
        std::optional<int> workers;
        bool assert_claims = false;
        bool no_plots = false;
        bool quiet = false;
    };

    void add_overrides(CLI::App *cmd, Overrides &o)
    {
        cmd->add_option("--scenario", o.scenarios, "Restrict to these scenarios (NF/NF, ANM-on-NF, FF-on-NF, FF/FF)");
        cmd->add_option("--out", o.out, "Output directory");
        cmd->add_option("--seed", o.seed, "Seed base (u64)");
        cmd->add_option("--trials", o.trials, "Monte Carlo trials per case")->check(CLI::PositiveNumber);
        cmd->add_option("--workers", o.workers, "Worker threads (0: one per hardware thread)")->check(CLI::NonNegativeNumber);
        cmd->add_flag("--assert", o.assert_claims, "Exit with status 3 when a checked claim does not hold");
        cmd->add_flag("--no-plots", o.no_plots, "Skip SVG output");
        cmd->add_flag("--quiet", o.quiet, "No per-case progress on stderr");
    }

    void apply(ExperimentConfig &cfg, const Overrides &o)
    {
        if (!o.scenarios.empty())
        {
            cfg.scenarios.clear();
            for (const auto &s : o.scenarios)
            {
                try
                {
                    cfg.scenarios.push_back(Scenario::parse(s));
                }
                catch (const InvalidArgument &e)
                {
                    throw ConfigError(std::string("--scenario: ") + e.what());
                }
            }
        }
        if (!o.out.empty())
            cfg.output_dir = o.out;
        if (o.seed)
            cfg.seed_base = *o.seed;
        if (o.trials)
            cfg.n_trials = *o.trials;
        if (o.workers)
            cfg.workers = *o.workers;
        cfg.validate();
    }

    std::string plot_name(const MismatchResult &r, Metric m)
    {
        char buf[128];
        std::snprintf(buf, sizeof buf, "fc%gGHz_nu%d_snr%gdB_%s.svg", r.key.carrier_frequency_hz / 1e9, r.key.n_elements,
                      r.key.snr_db, std::string(to_string(m)).c_str());
        return buf;
    }

    void write_plots(const std::filesystem::path &dir, const std::vector<MismatchResult> &results)
    {
        std::map<std::tuple<double, int, double>, std::vector<MismatchResult>> panels;
        for (const auto &r : results)
            panels[{r.key.carrier_frequency_hz, r.key.n_elements, r.key.snr_db}].push_back(r);
        std::filesystem::create_directories(dir);
        for (const auto &[key, rows] : panels)
            for (const Metric m : {Metric::AzimuthRms, Metric::ElevationRms, Metric::RangeRelRms})
            {
                bool any = false;
                for (const auto &r : rows)
                    any = any || metric_value(r, m).has_value();
                if (any)
                    emit_plot(dir / plot_name(rows.front(), m), rows, PlotSpec{m, false, ""});
            }
    }

    int report_claims(const std::vector<MismatchResult> &results)
    {
        bool ok = true;
        for (const auto &c : check_claims(results))
        {
            const char *tag = c.status == ClaimStatus::Pass ? "PASS" : c.status == ClaimStatus::Fail ? "FAIL" : "SKIP";
            std::cout << tag << ' ' << c.name << ": " << c.detail << '\n';
            ok = ok && c.status != ClaimStatus::Fail;
        }
        return ok ? 0 : exit_assert;
    }

    int execute(ExperimentConfig cfg, const Overrides &o)
    {
        apply(cfg, o);
        const int largest = *std::max_element(cfg.n_elements.begin(), cfg.n_elements.end());
        if (cfg.n_snapshots < largest)
            std::fprintf(stderr, "warning: %d snapshots < N_U = %d; the sample covariance is rank deficient\n",
                         cfg.n_snapshots, largest);
        const auto start = std::chrono::steady_clock::now();
        ProgressFn progress;
        if (!o.quiet)
            progress = [&](const MismatchResult &r, std::size_t done, std::size_t total)
            {
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                std::fprintf(stderr, "[%zu/%zu] %s  az %.4g el %.4g deg", done, total, r.key.to_string().c_str(),
                             r.azimuth_rms_deg, r.elevation_rms_deg);
                if (r.range_rel_rms)
                    std::fprintf(stderr, " range rel %.4g", *r.range_rel_rms);
                if (r.n_failed)
                    std::fprintf(stderr, " failed %d/%d", r.n_failed, r.n_trials);
                if (!r.error.empty())
                    std::fprintf(stderr, " ERROR %s", r.error.c_str());
                std::fprintf(stderr, "  (%.1f s)\n", secs);
            };

        std::filesystem::create_directories(cfg.output_dir);
        {
            std::ofstream snapshot(cfg.output_dir / "config.json", std::ios::trunc);
            snapshot << config_to_json(cfg);
        }
        const auto results = run_sweep(cfg, progress);
        if (!o.no_plots)
            write_plots(cfg.output_dir / "plots", results);
        std::cout << "wrote " << (cfg.output_dir / "results.csv").string() << " (" << results.size() << " cases)\n";

        int status = 0;
        for (const auto &r : results)
            if (!r.error.empty())
            {
                std::cerr << "case " << r.key.to_string() << " aborted: " << r.error << '\n';
                status = exit_runtime;
            }
        if (o.assert_claims)
        {
            const int claims = report_claims(results);
            if (status == 0)
                status = claims;
        }
        return status;
    }

    int spectrum_dump(const std::string &config_path, const std::string &case_text, int trial, const std::string &out,
                      const std::string &snapshots)
    {
        const ExperimentConfig cfg = load_config(config_path);
        const CaseKey key = CaseKey::parse(case_text);
        const TrialSetup setup = trial_setup(cfg, key, trial);
        setup.scene.check_against(setup.geometry);
        const SnapshotBlock block = generate(setup.geometry, setup.scene, key.scenario.signal_kind(), setup.sim);
        if (!snapshots.empty())
            write_snapshot_dump(snapshots, block);
        const NoiseSubspace ns = noise_subspace(sample_covariance(block), setup.scene.size());
        const CoarseSpectrum spectrum = coarse_spectrum(ns, setup.geometry, key.scenario.beamformer_kind(), setup.grid);
        const std::filesystem::path path = out.empty() ? std::filesystem::path("spectrum.csv") : std::filesystem::path(out);
        write_spectrum_csv(path, spectrum);
        std::cout << "wrote " << path.string() << " (" << spectrum.values.size() << " grid points)\n";

        const auto estimates = search(ns, setup.geometry, key.scenario.beamformer_kind(), setup.grid, setup.scene.size());
        for (const auto &e : estimates)
        {
            std::printf("peak az %.4f el %.4f", e.azimuth_deg, e.elevation_deg);
            if (e.range)
                std::printf(" range %.4f", *e.range);
            std::printf(" value %.6g\n", e.spectrum_value);
        }
        return 0;
    }

    struct PlotArgs
    {
        std::string in, x = "distance", y = "azimuth_rms", out, title;
        std::optional<double> fc, snr;
        std::optional<int> n_u;
        std::vector<std::string> scenarios;
        bool log_y = false;
    };

    int plot(const PlotArgs &a)
    {
        if (a.x != "distance")
            throw ConfigError("--x: only 'distance' is supported");
        PlotSpec spec;
        try
        {
            spec.y = parse_metric(a.y);
        }
        catch (const InvalidArgument &e)
        {
            throw ConfigError(std::string("--y: ") + e.what());
        }
        spec.log_y = a.log_y;
        spec.title = a.title;

        std::vector<MismatchResult> rows;
        for (const auto &r : read_results_csv(a.in))
        {
            if (a.fc && r.key.carrier_frequency_hz != *a.fc)
                continue;
            if (a.n_u && r.key.n_elements != *a.n_u)
                continue;
            if (a.snr && r.key.snr_db != *a.snr)
                continue;
            bool keep = a.scenarios.empty();
            for (const auto &s : a.scenarios)
                keep = keep || r.key.scenario.label() == s;
            if (keep)
                rows.push_back(r);
        }
        if (rows.empty())
            throw ConfigError("no rows of " + a.in + " match the filters");

        // Without filters a multi-panel CSV is reduced to its first panel.
        const CaseKey first = rows.front().key;
        std::vector<MismatchResult> panel;
        for (const auto &r : rows)
            if (r.key.carrier_frequency_hz == first.carrier_frequency_hz && r.key.n_elements == first.n_elements &&
                r.key.snr_db == first.snr_db)
                panel.push_back(r);
        if (panel.size() != rows.size())
            std::cerr << "note: plotting f_c=" << first.carrier_frequency_hz << " N_U=" << first.n_elements
                      << " SNR=" << first.snr_db << "; use --fc, --n-u and --snr to pick another panel\n";
        emit_plot(a.out, panel, spec);
        std::cout << "wrote " << a.out << '\n';
        return 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Near-field / far-field MUSIC mismatch simulator"};
    app.require_subcommand(1);

    Overrides run_o;
    std::string run_config;
    auto *run = app.add_subcommand("run", "Sweep the cases of a JSON config");
    run->add_option("--config", run_config, "Config file")->required()->check(CLI::ExistingFile);
    add_overrides(run, run_o);

    Overrides sweep_o;
    bool default_flag = false;
    auto *sweep = app.add_subcommand("sweep", "Sweep the built-in default matrix");
    sweep->add_flag("--paper-default", default_flag, "Use the built-in default matrix")->required();
    add_overrides(sweep, sweep_o);

    std::string dump_config, dump_case, dump_out, dump_snapshots;
    int dump_trial = 0;
    auto *dump = app.add_subcommand("spectrum-dump", "Write the coarse pseudospectrum of one trial as CSV");
    dump->add_option("--config", dump_config, "Config file")->required()->check(CLI::ExistingFile);
    dump->add_option("--case", dump_case, "label,fc_hz,n_u,snr_db,distance_m")->required();
    dump->add_option("--trial", dump_trial, "Trial index")->check(CLI::NonNegativeNumber);
    dump->add_option("--out", dump_out, "Spectrum CSV path (default spectrum.csv)");
    dump->add_option("--snapshots", dump_snapshots, "Also write the binary snapshot dump here");

    PlotArgs plot_a;
    auto *plot_cmd = app.add_subcommand("plot", "Render one error curve family from a results CSV as SVG");
    plot_cmd->add_option("--in", plot_a.in, "results.csv")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--x", plot_a.x, "x axis (distance)");
    plot_cmd->add_option("--y", plot_a.y, "azimuth_rms, elevation_rms, range_rms or range_rel_rms");
    plot_cmd->add_option("--out", plot_a.out, "SVG path")->required();
    plot_cmd->add_option("--fc", plot_a.fc, "Carrier frequency filter (Hz)");
    plot_cmd->add_option("--n-u", plot_a.n_u, "Array size filter");
    plot_cmd->add_option("--snr", plot_a.snr, "SNR filter (dB)");
    plot_cmd->add_option("--scenario", plot_a.scenarios, "Scenario filter");
    plot_cmd->add_option("--title", plot_a.title, "Plot title");
    plot_cmd->add_flag("--log-y", plot_a.log_y, "Logarithmic y axis");

    auto *config_cmd = app.add_subcommand("config", "Print the built-in default config as JSON");
    bool config_default = false;
    config_cmd->add_flag("--paper-default", config_default, "The built-in default matrix")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try
    {
        if (*run)
            return execute(load_config(run_config), run_o);
        if (*sweep)
            return execute(ExperimentConfig::default_sweep(), sweep_o);
        if (*dump)
            return spectrum_dump(dump_config, dump_case, dump_trial, dump_out, dump_snapshots);
        if (*plot_cmd)
            return plot(plot_a);
        if (*config_cmd)
        {
            std::cout << config_to_json(ExperimentConfig::default_sweep());
            return 0;
        }
    }
    catch (const ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_runtime;
}
