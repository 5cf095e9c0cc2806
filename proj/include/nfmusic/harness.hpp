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
#ifndef NFMUSIC_HARNESS_HPP
#define NFMUSIC_HARNESS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nfmusic/geometry.hpp"
#include "nfmusic/music.hpp"
#include "nfmusic/signal_sim.hpp"

namespace nfmusic
{
    // A (signal model, beamformer model) pairing. Only four pairings are
    // constructible:
    //   NF/NF      near-field signal, near-field beamformer
    //   ANM-on-NF  near-field signal, Fresnel beamformer
    //   FF-on-NF   near-field signal, plane-wave beamformer
    //   FF/FF      far-field signal, plane-wave beamformer
    class Scenario
    {
    public:
        // Throws InvalidArgument for any other pairing.
        Scenario(ModelKind signal_kind, ModelKind beamformer_kind);

        static Scenario parse(std::string_view label); // throws InvalidArgument
        static const std::array<Scenario, 4> &all();

        ModelKind signal_kind() const { return signal_; }
        ModelKind beamformer_kind() const { return beamformer_; }
        std::string_view label() const;
        int ordinal() const; // position in all()

        bool operator==(const Scenario &) const = default;

    private:
        ModelKind signal_;
        ModelKind beamformer_;
    };

    struct SceneAngle
    {
        double azimuth_deg = 0.0;
        double elevation_deg = 0.0;
    };

    struct ExperimentConfig
    {
        std::vector<double> carrier_frequencies_hz;
        std::vector<int> n_elements;
        std::vector<double> snr_db;
        std::vector<double> distances_m; // every source sits at this range
        std::vector<SceneAngle> angles;  // one entry per source
        std::vector<Scenario> scenarios{Scenario::all().begin(), Scenario::all().end()};
        int n_trials = 25;
        int n_snapshots = 1280;
        Position3 centroid{6.0, 8.0, 5.0};

        double angle_step_deg = 1.0;
        int refine_levels = 4;
        int range_points = 64;
        double range_min_m = 0.05;
        double range_max_factor = 4.0; // range axis ends at this multiple of d_f
        FraunhoferConvention fraunhofer = FraunhoferConvention::ElementCountLambda;

        std::filesystem::path output_dir = "out";
        std::uint64_t seed_base = 0;
        int workers = 0; // 0: one per hardware thread

        // Throws ConfigError naming the first offending field.
        void validate() const;

        // f_c in {3, 80} GHz, N_U in {64, 100, 144, 256}, 30 dB, nine
        // distances from 0.2 m to 30 m, sources at (35, 63) and (39, 14) deg.
        static ExperimentConfig default_sweep();
    };

    // JSON object with one key per field above; absent keys keep their
    // defaults, unknown keys are rejected. Throws ConfigError.
    ExperimentConfig parse_config(std::string_view json_text);
    ExperimentConfig load_config(const std::filesystem::path &path);
    std::string config_to_json(const ExperimentConfig &cfg);

    struct CaseKey
    {
        Scenario scenario{ModelKind::NearField, ModelKind::NearField};
        double carrier_frequency_hz = 0.0;
        int n_elements = 0;
        double snr_db = 0.0;
        double distance_m = 0.0;

        // "label,fc_hz,n_u,snr_db,distance_m", e.g. "FF-on-NF,3e9,64,30,0.2".
        std::string to_string() const;
        static CaseKey parse(std::string_view text); // throws ConfigError
    };

    // Orders by scenario, then f_c, N_U, SNR and distance.
    bool operator<(const CaseKey &a, const CaseKey &b);

    struct MismatchResult
    {
        CaseKey key;
        double fraunhofer_m = 0.0;
        // RMS over successful trials of the per-trial mean over sources of
        // the absolute error. NaN when no trial succeeded.
        double azimuth_rms_deg = 0.0;
        double elevation_rms_deg = 0.0;
        std::optional<double> range_rms_m;   // beamformers with a range only
        std::optional<double> range_rel_rms; // |range error| / true range
        int n_trials = 0;
        int n_failed = 0;
        std::string error; // non-empty when the case aborted

        // sqrt(az^2 + el^2) of the two RMS values.
        double angular_rms_deg() const;
        // More than 20% of trials failed, or the case aborted.
        bool failed() const;
    };

    // Per-trial RNG seed: seed_base XOR a hash of the signal side of the key
    // (signal model, f_c, N_U, SNR, distance) and the trial index. Scenarios
    // sharing a signal model therefore see the same snapshots.
    std::uint64_t trial_seed(std::uint64_t seed_base, const CaseKey &key, int trial);

    SourceScene scene_for(const ExperimentConfig &cfg, double distance_m);
    SearchGrid grid_for(const ExperimentConfig &cfg, ModelKind beamformer_kind, double fraunhofer_m);

    // Everything one trial needs, for callers that want to inspect the
    // intermediate products (spectrum dumps, tests).
    struct TrialSetup
    {
        ArrayGeometry geometry;
        SourceScene scene;
        SimConfig sim;
        SearchGrid grid;
        double fraunhofer_m;
    };
    TrialSetup trial_setup(const ExperimentConfig &cfg, const CaseKey &key, int trial);

    MismatchResult run_case(const ExperimentConfig &cfg, const CaseKey &key);

    using ProgressFn = std::function<void(const MismatchResult &, std::size_t done, std::size_t total)>;

    // Every case of the config's Cartesian product, sorted by key. Each case
    // is appended to <output_dir>/results.partial.csv as soon as it finishes;
    // once all are done, the sorted results.csv replaces the partial file.
    // Pass an empty output_dir to skip file output.
    std::vector<MismatchResult> run_sweep(const ExperimentConfig &cfg, const ProgressFn &progress = {});

    std::vector<CaseKey> sweep_keys(const ExperimentConfig &cfg);

    inline constexpr std::string_view results_csv_header =
        "scenario,fc_hz,n_u,snr_db,distance_m,fraunhofer_m,az_rms_deg,el_rms_deg,range_rms_m,range_rel_rms,n_trials,n_failed";

    std::string csv_row(const MismatchResult &r);
    void write_results_csv(const std::filesystem::path &path, const std::vector<MismatchResult> &results);
    std::vector<MismatchResult> read_results_csv(const std::filesystem::path &path);

    enum class Metric
    {
        AzimuthRms,
        ElevationRms,
        RangeRms,
        RangeRelRms
    };
    std::string_view to_string(Metric m); // "azimuth_rms", ...
    Metric parse_metric(std::string_view text);
    std::optional<double> metric_value(const MismatchResult &r, Metric m);

    struct PlotSpec
    {
        Metric y = Metric::AzimuthRms;
        bool log_y = false;
        std::string title;
    };

    // Error against distance on a log x axis, one series per scenario and a
    // dashed vertical line at the Fraunhofer distance. All results must share
    // f_c, N_U and SNR. Throws InvalidArgument or IoError.
    void emit_plot(const std::filesystem::path &path, const std::vector<MismatchResult> &results, const PlotSpec &spec);
    std::string render_plot(const std::vector<MismatchResult> &results, const PlotSpec &spec);

    enum class ClaimStatus
    {
        Pass,
        Fail,
        Skipped // the results do not contain the cases the claim needs
    };

    struct ClaimCheck
    {
        std::string name;
        ClaimStatus status = ClaimStatus::Skipped;
        std::string detail;
    };

    // Sweep-level claims at 30 dB:
    //   matched_near_field   NF/NF at 3 GHz, N_U 64: az and el RMS <= 0.125 deg at every distance
    //   matched_far_field    FF/FF at 3 GHz, every N_U: same bound; below d_f it also beats FF-on-NF
    //   mismatch_convergence FF-on-NF at the largest distance within 2x of NF/NF
    //   near_field_penalty   FF-on-NF at the smallest distance >= 10x NF/NF
    //   range_regime_flip    NF/NF range rel RMS <= 5% below d_f and, at the largest
    //                        distance, >= 5x the worst sub-d_f value
    //   anm_ordering         ANM-on-NF >= NF/NF at the smallest distance (angle and
    //                        range), within 2x at the largest
    std::vector<ClaimCheck> check_claims(const std::vector<MismatchResult> &results);
}

#endif
