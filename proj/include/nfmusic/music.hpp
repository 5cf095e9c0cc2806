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
#ifndef NFMUSIC_MUSIC_HPP
#define NFMUSIC_MUSIC_HPP

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <vector>

#include "nfmusic/channel.hpp"
#include "nfmusic/subspace.hpp"

namespace nfmusic
{
    // Values returned when the candidate is numerically orthogonal to the
    // noise subspace: |E_n^H h|^2 < pseudospectrum_floor * |h|^2.
    inline constexpr double pseudospectrum_cap = 1e18;
    inline constexpr double pseudospectrum_floor = 1e-18;

    // |h|^2 / |E_n^H h|^2. For steering vectors |h|^2 = N_U, so a candidate
    // lying entirely in the noise subspace scores 1 and larger values are
    // closer to the signal subspace.
    double pseudospectrum(const NoiseSubspace &ns, const Eigen::VectorXcd &h);

    inline double pseudospectrum(const NoiseSubspace &ns, const SteeringVector &h)
    {
        return pseudospectrum(ns, h.entries);
    }

    // Angular axis in degrees. An azimuth axis spanning exactly 360 deg is
    // periodic and excludes hi; all other axes include both ends.
    struct AngleAxis
    {
        double lo = 0.0;
        double hi = 0.0;
        double step = 1.0;

        bool periodic() const;
        std::vector<double> points() const;
    };

    struct RangeAxis
    {
        double lo = 0.05; // m
        double hi = 1.0;  // m
        int n_points = 64;
        bool log_spaced = true;

        std::vector<double> points() const;
    };

    struct SearchGrid
    {
        AngleAxis azimuth{0.0, 360.0, 1.0};
        // A planar array cannot tell el from 180 - el, so one hemisphere is searched.
        AngleAxis elevation{0.0, 90.0, 1.0};
        std::optional<RangeAxis> range; // present iff the beamformer has a range
        int refine_levels = 4;
        double final_angle_step = 0.0625; // coarse step / 2^refine_levels

        // Throws InvalidArgument when an axis is malformed, the refinement
        // settings disagree, or the range axis does not match kind.
        void validate(ModelKind kind) const;

        // 1 deg coarse cells, 4 halvings, and for range-capable kinds 64
        // log-spaced ranges over [0.05 m, 4 * fraunhofer_m].
        static SearchGrid defaults(ModelKind kind, double fraunhofer_m);
    };

    struct PeakEstimate
    {
        double azimuth_deg = 0.0;
        double elevation_deg = 0.0;
        std::optional<double> range;
        double spectrum_value = 0.0;
    };

    // Pseudospectrum sampled on the coarse grid. value(ia, ie, ir) is stored
    // with range fastest, then azimuth, then elevation.
    struct CoarseSpectrum
    {
        std::vector<double> azimuth_deg;
        std::vector<double> elevation_deg;
        std::vector<double> range_m; // empty for FarField
        std::vector<double> values;
        bool azimuth_periodic = true;

        std::size_t n_ranges() const { return range_m.empty() ? 1 : range_m.size(); }
        std::size_t index(std::size_t ia, std::size_t ie, std::size_t ir) const
        {
            return (ie * azimuth_deg.size() + ia) * n_ranges() + ir;
        }
        double value(std::size_t ia, std::size_t ie, std::size_t ir = 0) const { return values[index(ia, ie, ir)]; }
    };

    // Evaluates the coarse grid. Candidate phases use single precision for
    // throughput and projections use double precision.
    CoarseSpectrum coarse_spectrum(const NoiseSubspace &ns, const ArrayGeometry &geom, ModelKind kind, const SearchGrid &grid);

    // CSV with header phi_deg,theta_deg,range_m,value; range_m is empty for FarField.
    void write_spectrum_csv(const std::filesystem::path &path, const CoarseSpectrum &spectrum);

    // Coarse pass, selection of the n_sources best local maxima that lie at
    // least two coarse cells apart on some angular axis, then refine_levels
    // rounds of step halving around each. Estimates are sorted by descending
    // spectrum value. Throws InsufficientPeaks when the coarse grid has too
    // few separated maxima.
    std::vector<PeakEstimate> search(const NoiseSubspace &ns, const ArrayGeometry &geom, ModelKind kind,
                                     const SearchGrid &grid, Eigen::Index n_sources);

    struct SourceError
    {
        double azimuth_deg = 0.0;   // wrapped to [0, 180]
        double elevation_deg = 0.0;
        std::optional<double> range_m;
        std::optional<double> range_rel;
    };

    // Great-circle distance between two directions, degrees.
    double angular_distance_deg(double az1_deg, double el1_deg, double az2_deg, double el2_deg);

    // Assigns estimates to sources by minimum total great-circle distance
    // (exhaustive over permutations, at most 8 sources) and reports per-source
    // errors in scene order.
    std::vector<SourceError> match_and_score(const std::vector<PeakEstimate> &estimates, const SourceScene &scene);
}

#endif
