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
#include "nfmusic/harness.hpp"

#include "format.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "nfmusic/rng.hpp"

namespace nfmusic
{
    // ---------------------------------------------------------------- Scenario

    namespace
    {
        constexpr std::array<std::string_view, 4> scenario_labels{"NF/NF", "ANM-on-NF", "FF-on-NF", "FF/FF"};

        int scenario_ordinal(ModelKind signal, ModelKind beamformer)
        {
            if (signal == ModelKind::NearField)
            {
                switch (beamformer)
                {
                case ModelKind::NearField:
                    return 0;
                case ModelKind::ApproxNearField:
                    return 1;
                case ModelKind::FarField:
                    return 2;
                }
            }
            if (signal == ModelKind::FarField && beamformer == ModelKind::FarField)
                return 3;
            return -1;
        }
    }

    Scenario::Scenario(ModelKind signal_kind, ModelKind beamformer_kind) : signal_(signal_kind), beamformer_(beamformer_kind)
    {
        if (scenario_ordinal(signal_kind, beamformer_kind) < 0)
            throw InvalidArgument("Scenario: unsupported pairing of " + std::string(to_string(beamformer_kind)) +
                                  " beamformer with " + std::string(to_string(signal_kind)) + " signal");
    }

    const std::array<Scenario, 4> &Scenario::all()
    {
        static const std::array<Scenario, 4> scenarios{
            Scenario{ModelKind::NearField, ModelKind::NearField},
            Scenario{ModelKind::NearField, ModelKind::ApproxNearField},
            Scenario{ModelKind::NearField, ModelKind::FarField},
            Scenario{ModelKind::FarField, ModelKind::FarField},
        };
        return scenarios;
    }

    Scenario Scenario::parse(std::string_view label)
    {
        for (std::size_t i = 0; i < scenario_labels.size(); ++i)
            if (label == scenario_labels[i])
                return all()[i];
        throw InvalidArgument("unknown scenario '" + std::string(label) + "' (expected NF/NF, ANM-on-NF, FF-on-NF or FF/FF)");
    }

    int Scenario::ordinal() const { return scenario_ordinal(signal_, beamformer_); }

    std::string_view Scenario::label() const { return scenario_labels[static_cast<std::size_t>(ordinal())]; }

    // ------------------------------------------------------------------ Config

    void ExperimentConfig::validate() const
    {
        auto fail = [](const std::string &field, const std::string &why) { throw ConfigError(field + ": " + why); };

        if (carrier_frequencies_hz.empty())
            fail("carrier_frequencies_hz", "must not be empty");
        for (const double fc : carrier_frequencies_hz)
            if (!std::isfinite(fc) || fc <= 0.0)
                fail("carrier_frequencies_hz", "entries must be positive");

        if (n_elements.empty())
            fail("n_elements", "must not be empty");
        for (const int n : n_elements)
        {
            const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(std::max(n, 0)))));
            if (n < 4 || side * side != n)
                fail("n_elements", "entries must be perfect squares >= 4, got " + std::to_string(n));
        }

        if (snr_db.empty())
            fail("snr_db", "must not be empty");
        for (const double s : snr_db)
            if (!std::isfinite(s))
                fail("snr_db", "entries must be finite");

        if (distances_m.empty())
            fail("distances_m", "must not be empty");
        for (std::size_t i = 0; i < distances_m.size(); ++i)
        {
            if (!std::isfinite(distances_m[i]) || distances_m[i] <= 0.0)
                fail("distances_m", "entries must be positive");
            if (i > 0 && distances_m[i] <= distances_m[i - 1])
                fail("distances_m", "entries must be strictly ascending");
        }

        if (angles.empty())
            fail("angles_deg", "must not be empty");
        for (const auto &a : angles)
        {
            if (!std::isfinite(a.azimuth_deg) || !std::isfinite(a.elevation_deg))
                fail("angles_deg", "entries must be finite");
            // The planar array cannot tell el from 180 - el and the search
            // covers the upper hemisphere only.
            if (a.elevation_deg < 0.0 || a.elevation_deg > 90.0)
                fail("angles_deg", "elevation must lie in [0, 90]");
        }
        const int min_n = *std::min_element(n_elements.begin(), n_elements.end());
        if (static_cast<int>(angles.size()) >= min_n)
            fail("angles_deg", "needs fewer sources than the smallest array has elements");

        if (scenarios.empty())
            fail("scenarios", "must not be empty");
        for (std::size_t i = 0; i < scenarios.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (scenarios[i] == scenarios[j])
                    fail("scenarios", "duplicate entry " + std::string(scenarios[i].label()));

        if (n_trials < 1)
            fail("n_trials", "must be positive");
        if (n_snapshots < 1)
            fail("n_snapshots", "must be positive");
        if (!centroid.allFinite())
            fail("centroid_m", "must be finite");
        if (refine_levels < 0 || refine_levels > 20)
            fail("refine_levels", "must lie in [0, 20]");
        if (range_points < 2)
            fail("range_points", "must be at least 2");
        if (!(range_min_m > 0.0) || !std::isfinite(range_min_m))
            fail("range_min_m", "must be positive");
        if (!(range_max_factor > 0.0) || !std::isfinite(range_max_factor))
            fail("range_max_factor", "must be positive");
        if (workers < 0)
            fail("workers", "must be non-negative");

        for (const double fc : carrier_frequencies_hz)
            for (const int n : n_elements)
            {
                const double df = fraunhofer_distance(build_half_wavelength_upa(n, fc, centroid), fraunhofer);
                if (range_min_m >= range_max_factor * df)
                    fail("range_min_m", "must be below range_max_factor * d_f for every (f_c, N_U)");
                try
                {
                    for (const auto &s : scenarios)
                        grid_for(*this, s.beamformer_kind(), df).validate(s.beamformer_kind());
                }
                catch (const InvalidArgument &e)
                {
                    fail("angle_step_deg", e.what());
                }
            }
    }

    ExperimentConfig ExperimentConfig::default_sweep()
    {
        ExperimentConfig cfg;
        cfg.carrier_frequencies_hz = {3e9, 80e9};
        cfg.n_elements = {64, 100, 144, 256};
        cfg.snr_db = {30.0};
        cfg.distances_m = {0.2, 0.25, 0.3, 0.8, 1.5, 3.0, 8.0, 10.0, 30.0};
        cfg.angles = {{35.0, 63.0}, {39.0, 14.0}};
        return cfg;
    }

    namespace
    {
        using nlohmann::json;

        std::string_view convention_name(FraunhoferConvention c)
        {
            return c == FraunhoferConvention::ElementCountLambda ? "n_u_lambda" : "aperture_2d2";
        }

        FraunhoferConvention parse_convention(const std::string &s)
        {
            if (s == "n_u_lambda")
                return FraunhoferConvention::ElementCountLambda;
            if (s == "aperture_2d2")
                return FraunhoferConvention::Aperture2D2;
            throw ConfigError("fraunhofer: expected \"n_u_lambda\" or \"aperture_2d2\", got \"" + s + "\"");
        }

        template <typename T>
        T get_as(const json &value, const std::string &key)
        {
            try
            {
                return value.get<T>();
            }
            catch (const json::exception &e)
            {
                throw ConfigError(key + ": " + e.what());
            }
        }
    }

    ExperimentConfig parse_config(std::string_view json_text)
    {
        json doc;
        try
        {
            doc = json::parse(json_text);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!doc.is_object())
            throw ConfigError("config must be a JSON object");

        ExperimentConfig cfg;
        for (const auto &[key, value] : doc.items())
        {
            if (key == "carrier_frequencies_hz")
                cfg.carrier_frequencies_hz = get_as<std::vector<double>>(value, key);
            else if (key == "n_elements")
                cfg.n_elements = get_as<std::vector<int>>(value, key);
            else if (key == "snr_db")
                cfg.snr_db = get_as<std::vector<double>>(value, key);
            else if (key == "distances_m")
                cfg.distances_m = get_as<std::vector<double>>(value, key);
            else if (key == "angles_deg")
            {
                cfg.angles.clear();
                for (const auto &pair : get_as<std::vector<std::array<double, 2>>>(value, key))
                    cfg.angles.push_back({pair[0], pair[1]});
            }
            else if (key == "scenarios")
            {
                cfg.scenarios.clear();
                for (const auto &label : get_as<std::vector<std::string>>(value, key))
                {
                    try
                    {
                        cfg.scenarios.push_back(Scenario::parse(label));
                    }
                    catch (const InvalidArgument &e)
                    {
                        throw ConfigError(key + ": " + e.what());
                    }
                }
            }
            else if (key == "n_trials")
                cfg.n_trials = get_as<int>(value, key);
            else if (key == "n_snapshots")
                cfg.n_snapshots = get_as<int>(value, key);
            else if (key == "centroid_m")
            {
                const auto c = get_as<std::array<double, 3>>(value, key);
                cfg.centroid = Position3(c[0], c[1], c[2]);
            }
            else if (key == "angle_step_deg")
                cfg.angle_step_deg = get_as<double>(value, key);
            else if (key == "refine_levels")
                cfg.refine_levels = get_as<int>(value, key);
            else if (key == "range_points")
                cfg.range_points = get_as<int>(value, key);
            else if (key == "range_min_m")
                cfg.range_min_m = get_as<double>(value, key);
            else if (key == "range_max_factor")
                cfg.range_max_factor = get_as<double>(value, key);
            else if (key == "fraunhofer")
                cfg.fraunhofer = parse_convention(get_as<std::string>(value, key));
            else if (key == "output_dir")
                cfg.output_dir = get_as<std::string>(value, key);
            else if (key == "seed_base")
                cfg.seed_base = get_as<std::uint64_t>(value, key);
            else if (key == "workers")
                cfg.workers = get_as<int>(value, key);
            else
                throw ConfigError("unknown config key '" + key + "'");
        }
        cfg.validate();
        return cfg;
    }

    ExperimentConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config " + path.string());
        std::ostringstream text;
        text << in.rdbuf();
        try
        {
            return parse_config(text.str());
        }
        catch (const ConfigError &e)
        {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }

    std::string config_to_json(const ExperimentConfig &cfg)
    {
        json doc = json::object();
        doc["carrier_frequencies_hz"] = cfg.carrier_frequencies_hz;
        doc["n_elements"] = cfg.n_elements;
        doc["snr_db"] = cfg.snr_db;
        doc["distances_m"] = cfg.distances_m;
        json angles = json::array();
        for (const auto &a : cfg.angles)
            angles.push_back({a.azimuth_deg, a.elevation_deg});
        doc["angles_deg"] = angles;
        json scenarios = json::array();
        for (const auto &s : cfg.scenarios)
            scenarios.push_back(std::string(s.label()));
        doc["scenarios"] = scenarios;
        doc["n_trials"] = cfg.n_trials;
        doc["n_snapshots"] = cfg.n_snapshots;
        doc["centroid_m"] = {cfg.centroid.x(), cfg.centroid.y(), cfg.centroid.z()};
        doc["angle_step_deg"] = cfg.angle_step_deg;
        doc["refine_levels"] = cfg.refine_levels;
        doc["range_points"] = cfg.range_points;
        doc["range_min_m"] = cfg.range_min_m;
        doc["range_max_factor"] = cfg.range_max_factor;
        doc["fraunhofer"] = std::string(convention_name(cfg.fraunhofer));
        doc["output_dir"] = cfg.output_dir.string();
        doc["seed_base"] = cfg.seed_base;
        doc["workers"] = cfg.workers;
        return doc.dump(2) + "\n";
    }

    // ----------------------------------------------------------------- CaseKey

    std::string CaseKey::to_string() const
    {
        return std::string(scenario.label()) + "," + detail::format_number(carrier_frequency_hz) + "," +
               std::to_string(n_elements) + "," + detail::format_number(snr_db) + "," + detail::format_number(distance_m);
    }

    CaseKey CaseKey::parse(std::string_view text)
    {
        const std::vector<std::string> parts = detail::split(text, ',');
        if (parts.size() != 5)
            throw ConfigError("case key '" + std::string(text) + "' must have the form label,fc_hz,n_u,snr_db,distance_m");
        try
        {
            CaseKey key;
            key.scenario = Scenario::parse(parts[0]);
            key.carrier_frequency_hz = detail::parse_double(parts[1]);
            const double n = detail::parse_double(parts[2]);
            if (n != std::floor(n) || n < 1 || n > 1e6)
                throw InvalidArgument("n_u must be a positive integer");
            key.n_elements = static_cast<int>(n);
            key.snr_db = detail::parse_double(parts[3]);
            key.distance_m = detail::parse_double(parts[4]);
            return key;
        }
        catch (const InvalidArgument &e)
        {
            throw ConfigError("case key '" + std::string(text) + "': " + e.what());
        }
    }

    bool operator<(const CaseKey &a, const CaseKey &b)
    {
        return std::make_tuple(a.scenario.ordinal(), a.carrier_frequency_hz, a.n_elements, a.snr_db, a.distance_m) <
               std::make_tuple(b.scenario.ordinal(), b.carrier_frequency_hz, b.n_elements, b.snr_db, b.distance_m);
    }

    // ----------------------------------------------------------------- Results

    double MismatchResult::angular_rms_deg() const { return std::hypot(azimuth_rms_deg, elevation_rms_deg); }

    bool MismatchResult::failed() const
    {
        return !error.empty() || n_trials == 0 || 5 * n_failed > n_trials;
    }

    // ------------------------------------------------------------------ Runner

    std::uint64_t trial_seed(std::uint64_t seed_base, const CaseKey &key, int trial)
    {
        const std::string text = std::string(to_string(key.scenario.signal_kind())) + "|" +
                                 detail::format_number(key.carrier_frequency_hz) + "|" + std::to_string(key.n_elements) +
                                 "|" + detail::format_number(key.snr_db) + "|" + detail::format_number(key.distance_m) +
                                 "|" + std::to_string(trial);
        return seed_base ^ splitmix64(fnv1a(text));
    }

    SourceScene scene_for(const ExperimentConfig &cfg, double distance_m)
    {
        std::vector<Source> sources;
        for (const auto &a : cfg.angles)
            sources.push_back({Direction::from_degrees(a.azimuth_deg, a.elevation_deg), distance_m});
        return SourceScene(std::move(sources));
    }

    SearchGrid grid_for(const ExperimentConfig &cfg, ModelKind beamformer_kind, double fraunhofer_m)
    {
        SearchGrid grid = SearchGrid::defaults(beamformer_kind, fraunhofer_m);
        grid.azimuth.step = cfg.angle_step_deg;
        grid.elevation.step = cfg.angle_step_deg;
        grid.refine_levels = cfg.refine_levels;
        grid.final_angle_step = std::ldexp(cfg.angle_step_deg, -cfg.refine_levels);
        if (grid.range)
        {
            grid.range->lo = cfg.range_min_m;
            grid.range->hi = cfg.range_max_factor * fraunhofer_m;
            grid.range->n_points = cfg.range_points;
        }
        return grid;
    }

    TrialSetup trial_setup(const ExperimentConfig &cfg, const CaseKey &key, int trial)
    {
        ArrayGeometry geom = build_half_wavelength_upa(key.n_elements, key.carrier_frequency_hz, cfg.centroid);
        const double df = fraunhofer_distance(geom, cfg.fraunhofer);
        SimConfig sim;
        sim.n_snapshots = cfg.n_snapshots;
        sim.snr_db = key.snr_db;
        sim.seed = trial_seed(cfg.seed_base, key, trial);
        return TrialSetup{std::move(geom), scene_for(cfg, key.distance_m), sim,
                          grid_for(cfg, key.scenario.beamformer_kind(), df), df};
    }

    namespace
    {
        // Cases that share one simulated signal: same signal model and
        // (f_c, N_U, SNR, distance), differing only in the beamformer.
        struct SignalGroup
        {
            std::vector<CaseKey> cases;
        };

        struct Accumulator
        {
            double az_sq = 0.0, el_sq = 0.0, range_sq = 0.0, rel_sq = 0.0;
            int ok = 0;
            int failed = 0;
            std::string error;
        };

        std::vector<MismatchResult> run_group(const ExperimentConfig &cfg, const SignalGroup &group)
        {
            const CaseKey &first = group.cases.front();
            const std::size_t n_cases = group.cases.size();
            std::vector<Accumulator> acc(n_cases);
            double df = 0.0;

            try
            {
                const TrialSetup base = trial_setup(cfg, first, 0);
                df = base.fraunhofer_m;
                base.scene.check_against(base.geometry);
                std::vector<SearchGrid> grids;
                for (const auto &key : group.cases)
                    grids.push_back(grid_for(cfg, key.scenario.beamformer_kind(), df));
                const double k_sources = static_cast<double>(base.scene.size());

                for (int trial = 0; trial < cfg.n_trials; ++trial)
                {
                    SimConfig sim = base.sim;
                    sim.seed = trial_seed(cfg.seed_base, first, trial);
                    const SnapshotBlock block = generate(base.geometry, base.scene, first.scenario.signal_kind(), sim);
                    const NoiseSubspace ns = noise_subspace(sample_covariance(block), base.scene.size());

                    for (std::size_t c = 0; c < n_cases; ++c)
                    {
                        Accumulator &a = acc[c];
                        if (!a.error.empty())
                            continue;
                        const ModelKind bf = group.cases[c].scenario.beamformer_kind();
                        try
                        {
                            const auto estimates = search(ns, base.geometry, bf, grids[c], base.scene.size());
                            const auto errors = match_and_score(estimates, base.scene);
                            double az = 0.0, el = 0.0, rng = 0.0, rel = 0.0;
                            for (const auto &e : errors)
                            {
                                az += e.azimuth_deg;
                                el += e.elevation_deg;
                                rng += e.range_m.value_or(0.0);
                                rel += e.range_rel.value_or(0.0);
                            }
                            az /= k_sources;
                            el /= k_sources;
                            rng /= k_sources;
                            rel /= k_sources;
                            a.az_sq += az * az;
                            a.el_sq += el * el;
                            a.range_sq += rng * rng;
                            a.rel_sq += rel * rel;
                            ++a.ok;
                        }
                        catch (const InsufficientPeaks &)
                        {
                            ++a.failed;
                        }
                        catch (const std::exception &e)
                        {
                            a.error = e.what();
                        }
                    }
                }
            }
            catch (const std::exception &e)
            {
                for (auto &a : acc)
                    if (a.error.empty())
                        a.error = e.what();
            }

            std::vector<MismatchResult> out;
            for (std::size_t c = 0; c < n_cases; ++c)
            {
                const Accumulator &a = acc[c];
                MismatchResult r;
                r.key = group.cases[c];
                r.fraunhofer_m = df;
                r.n_trials = cfg.n_trials;
                r.error = a.error;
                const double nan = std::numeric_limits<double>::quiet_NaN();
                const bool usable = a.error.empty() && a.ok > 0;
                r.n_failed = a.error.empty() ? a.failed : cfg.n_trials;
                r.azimuth_rms_deg = usable ? std::sqrt(a.az_sq / a.ok) : nan;
                r.elevation_rms_deg = usable ? std::sqrt(a.el_sq / a.ok) : nan;
                if (has_range(r.key.scenario.beamformer_kind()))
                {
                    r.range_rms_m = usable ? std::sqrt(a.range_sq / a.ok) : nan;
                    r.range_rel_rms = usable ? std::sqrt(a.rel_sq / a.ok) : nan;
                }
                out.push_back(std::move(r));
            }
            return out;
        }

        std::vector<SignalGroup> make_groups(const std::vector<CaseKey> &keys)
        {
            std::map<std::tuple<int, double, int, double, double>, std::size_t> index;
            std::vector<SignalGroup> groups;
            for (const auto &key : keys)
            {
                const auto signal = std::make_tuple(static_cast<int>(key.scenario.signal_kind()), key.carrier_frequency_hz,
                                                    key.n_elements, key.snr_db, key.distance_m);
                const auto [it, inserted] = index.try_emplace(signal, groups.size());
                if (inserted)
                    groups.emplace_back();
                groups[it->second].cases.push_back(key);
            }
            return groups;
        }
    }

    MismatchResult run_case(const ExperimentConfig &cfg, const CaseKey &key)
    {
        cfg.validate();
        return run_group(cfg, SignalGroup{{key}}).front();
    }

    std::vector<CaseKey> sweep_keys(const ExperimentConfig &cfg)
    {
        std::vector<CaseKey> keys;
        for (const auto &s : cfg.scenarios)
            for (const double fc : cfg.carrier_frequencies_hz)
                for (const int n : cfg.n_elements)
                    for (const double snr : cfg.snr_db)
                        for (const double d : cfg.distances_m)
                            keys.push_back(CaseKey{s, fc, n, snr, d});
        std::sort(keys.begin(), keys.end());
        return keys;
    }

    std::vector<MismatchResult> run_sweep(const ExperimentConfig &cfg, const ProgressFn &progress)
    {
        cfg.validate();
        const std::vector<CaseKey> keys = sweep_keys(cfg);
        const std::vector<SignalGroup> groups = make_groups(keys);

        const bool write_files = !cfg.output_dir.empty();
        const std::filesystem::path partial_path = cfg.output_dir / "results.partial.csv";
        std::ofstream partial;
        if (write_files)
        {
            std::error_code ec;
            std::filesystem::create_directories(cfg.output_dir, ec);
            if (ec)
                throw IoError("cannot create " + cfg.output_dir.string() + ": " + ec.message());
            partial.open(partial_path, std::ios::trunc);
            if (!partial)
                throw IoError("cannot write " + partial_path.string());
            partial << results_csv_header << '\n' << std::flush;
        }

        std::vector<std::vector<MismatchResult>> per_group(groups.size());
        std::mutex sink_mutex;
        std::exception_ptr sink_error;
        std::size_t done = 0;
        std::atomic<std::size_t> next{0};

        auto worker = [&]
        {
            for (std::size_t g = next++; g < groups.size(); g = next++)
            {
                per_group[g] = run_group(cfg, groups[g]);
                const std::lock_guard lock(sink_mutex);
                for (const auto &r : per_group[g])
                {
                    ++done;
                    if (write_files && !sink_error)
                    {
                        partial << csv_row(r) << '\n' << std::flush;
                        if (!partial)
                            sink_error = std::make_exception_ptr(IoError("write failed: " + partial_path.string()));
                    }
                    if (progress)
                        progress(r, done, keys.size());
                }
            }
        };

        unsigned n_workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers) : std::thread::hardware_concurrency();
        n_workers = std::clamp<unsigned>(n_workers, 1, static_cast<unsigned>(groups.size()));
        if (n_workers == 1)
            worker();
        else
        {
            std::vector<std::jthread> pool;
            for (unsigned i = 0; i < n_workers; ++i)
                pool.emplace_back(worker);
        }
        if (sink_error)
            std::rethrow_exception(sink_error);

        std::vector<MismatchResult> results;
        for (auto &g : per_group)
            std::move(g.begin(), g.end(), std::back_inserter(results));
        std::sort(results.begin(), results.end(), [](const auto &a, const auto &b) { return a.key < b.key; });

        if (write_files)
        {
            partial.close();
            write_results_csv(cfg.output_dir / "results.csv", results);
            std::filesystem::remove(partial_path);
        }
        return results;
    }
}
