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
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "coarse_kernel.hpp"
#include "nfmusic/music.hpp"
#include "nfmusic/signal_sim.hpp"

using namespace nfmusic;

namespace
{
    const Position3 centroid(6.0, 8.0, 5.0);

    NoiseSubspace subspace_of(const ArrayGeometry &g, const SourceScene &scene, ModelKind kind, double snr_db,
                              std::uint64_t seed, int snapshots = 1280)
    {
        SimConfig cfg;
        cfg.n_snapshots = snapshots;
        cfg.snr_db = snr_db;
        cfg.seed = seed;
        return noise_subspace(sample_covariance(generate(g, scene, kind, cfg)), scene.size());
    }

    Eigen::MatrixXcd random_hermitian(Eigen::Index n, std::mt19937_64 &rng)
    {
        std::normal_distribution<double> g;
        Eigen::MatrixXcd a(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                a(i, j) = {g(rng), g(rng)};
        return a * a.adjoint();
    }

    Eigen::VectorXcd random_gaussian(Eigen::Index n, std::mt19937_64 &rng)
    {
        std::normal_distribution<double> g;
        Eigen::VectorXcd v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v[i] = {g(rng), g(rng)};
        return v;
    }
}

// ------------------------------------------------------------ pseudospectrum

TEST(Pseudospectrum, CappedForExactSignalVectors)
{
    const ArrayGeometry g = build_half_wavelength_upa(16, 3e9, centroid);
    const Direction dir = Direction::from_degrees(35.0, 63.0);
    const Eigen::VectorXcd h = steering_near_field(g, dir, 0.4).entries;
    const NoiseSubspace ns = noise_subspace(Eigen::MatrixXcd(h * h.adjoint()), 1);
    EXPECT_EQ(pseudospectrum(ns, h), pseudospectrum_cap);
}

TEST(Pseudospectrum, NoiseEigenvectorScoresOne)
{
    std::mt19937_64 rng(1);
    const NoiseSubspace ns = noise_subspace(random_hermitian(8, rng), 3);
    for (Eigen::Index c = 0; c < ns.basis.cols(); ++c)
        EXPECT_NEAR(pseudospectrum(ns, Eigen::VectorXcd(ns.basis.col(c))), 1.0, 1e-12);
    // Normalization: scaling h leaves the value unchanged.
    EXPECT_NEAR(pseudospectrum(ns, Eigen::VectorXcd(5.0 * ns.basis.col(0))), 1.0, 1e-12);
}

TEST(Pseudospectrum, BothRoutesAgree)
{
    // N_K = 2 < N_U - N_K takes the signal-subspace route; compare with the
    // direct definition.
    std::mt19937_64 rng(2);
    const NoiseSubspace ns = noise_subspace(random_hermitian(16, rng), 2);
    for (int i = 0; i < 100; ++i)
    {
        const Eigen::VectorXcd h = random_gaussian(16, rng);
        const double direct = h.squaredNorm() / (ns.basis.adjoint() * h).squaredNorm();
        EXPECT_NEAR(pseudospectrum(ns, h), direct, 1e-10 * direct);
    }
    // Near-signal vector where the subtraction would cancel.
    const Eigen::VectorXcd s = ns.signal_basis.col(1) + 1e-5 * ns.basis.col(0);
    const double direct = s.squaredNorm() / (ns.basis.adjoint() * s).squaredNorm();
    EXPECT_NEAR(pseudospectrum(ns, s), direct, 1e-6 * direct);
}

TEST(Pseudospectrum, GlobalPhaseInvariant)
{
    const ArrayGeometry g = build_half_wavelength_upa(64, 3e9, centroid);
    const SourceScene scene({{Direction::from_degrees(35.0, 63.0), 3.0}, {Direction::from_degrees(39.0, 14.0), 3.0}});
    const NoiseSubspace ns = subspace_of(g, scene, ModelKind::NearField, 30.0, 4);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi);
    for (int i = 0; i < 50; ++i)
    {
        const Eigen::VectorXcd h = steering_near_field(g, Direction::from_degrees(360 * ang(rng) / 7, 10 + i), 2.0).entries;
        const double v = pseudospectrum(ns, h);
        EXPECT_NEAR(pseudospectrum(ns, Eigen::VectorXcd(std::polar(1.0, ang(rng)) * h)), v, 1e-12 * v);
    }
}

TEST(Pseudospectrum, MedianOfIsotropicVectors)
{
    // For h isotropic in C^N and a one-dimensional noise subspace,
    // |e_n^H h|^2 / |h|^2 ~ Beta(1, N - 1), so the pseudospectrum median is
    // 1 / (1 - 2^(-1 / (N - 1))). With N - 1 noise dimensions the median
    // is 2^(1 / (N - 1)). The empirical fraction below each median must be
    // close to one half.
    std::mt19937_64 rng(17);
    const int n = 8, draws = 4000;
    const NoiseSubspace one_noise = noise_subspace(random_hermitian(n, rng), n - 1);
    const NoiseSubspace one_signal = noise_subspace(random_hermitian(n, rng), 1);
    const double median_a = 1.0 / (1.0 - std::pow(2.0, -1.0 / (n - 1)));
    const double median_b = std::pow(2.0, 1.0 / (n - 1));
    int below_a = 0, below_b = 0;
    for (int i = 0; i < draws; ++i)
    {
        const Eigen::VectorXcd h = random_gaussian(n, rng);
        below_a += pseudospectrum(one_noise, h) < median_a;
        below_b += pseudospectrum(one_signal, h) < median_b;
    }
    EXPECT_NEAR(below_a / static_cast<double>(draws), 0.5, 0.04);
    EXPECT_NEAR(below_b / static_cast<double>(draws), 0.5, 0.04);
}

TEST(Pseudospectrum, LengthMismatch)
{
    std::mt19937_64 rng(3);
    const NoiseSubspace ns = noise_subspace(random_hermitian(8, rng), 2);
    EXPECT_THROW(pseudospectrum(ns, Eigen::VectorXcd::Ones(7)), InvalidArgument);
}

// --------------------------------------------------------------------- grid

TEST(SearchGrid, AxisPoints)
{
    const AngleAxis az{0.0, 360.0, 1.0};
    EXPECT_TRUE(az.periodic());
    const auto pa = az.points();
    EXPECT_EQ(pa.size(), 360u);
    EXPECT_EQ(pa.back(), 359.0);
    const AngleAxis el{0.0, 90.0, 1.0};
    EXPECT_FALSE(el.periodic());
    EXPECT_EQ(el.points().size(), 91u);

    const RangeAxis r{0.05, 25.6, 64, true};
    const auto pr = r.points();
    ASSERT_EQ(pr.size(), 64u);
    EXPECT_DOUBLE_EQ(pr.front(), 0.05);
    EXPECT_NEAR(pr.back(), 25.6, 1e-12);
    EXPECT_NEAR(pr[1] / pr[0], pr[63] / pr[62], 1e-12);
    const RangeAxis lin{1.0, 2.0, 5, false};
    EXPECT_NEAR(lin.points()[1], 1.25, 1e-15);
}

TEST(SearchGrid, DefaultsAndValidation)
{
    const SearchGrid nf = SearchGrid::defaults(ModelKind::NearField, 6.4);
    ASSERT_TRUE(nf.range.has_value());
    EXPECT_DOUBLE_EQ(nf.range->hi, 25.6);
    EXPECT_EQ(nf.range->n_points, 64);
    EXPECT_EQ(nf.final_angle_step, 0.0625);
    EXPECT_NO_THROW(nf.validate(ModelKind::NearField));
    EXPECT_NO_THROW(nf.validate(ModelKind::ApproxNearField));
    EXPECT_THROW(nf.validate(ModelKind::FarField), InvalidArgument);

    const SearchGrid ff = SearchGrid::defaults(ModelKind::FarField, 6.4);
    EXPECT_FALSE(ff.range.has_value());
    EXPECT_THROW(ff.validate(ModelKind::NearField), InvalidArgument);

    SearchGrid bad = ff;
    bad.final_angle_step = 0.1;
    EXPECT_THROW(bad.validate(ModelKind::FarField), InvalidArgument);
    bad = ff;
    bad.elevation = {10.0, 5.0, 1.0};
    EXPECT_THROW(bad.validate(ModelKind::FarField), InvalidArgument);
    bad = ff;
    bad.azimuth = {0.0, 400.0, 1.0};
    EXPECT_THROW(bad.validate(ModelKind::FarField), InvalidArgument);
    bad = nf;
    bad.range->lo = 0.0;
    EXPECT_THROW(bad.validate(ModelKind::NearField), InvalidArgument);
}

// ----------------------------------------------------------- coarse kernel

TEST(CoarseKernel, SinCosAccuracy)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<float> x(-8000.0f, 8000.0f);
    std::vector<float> in(100000), s(in.size()), c(in.size());
    for (auto &v : in)
        v = x(rng);
    in[0] = 0.0f;
    in[1] = static_cast<float>(std::numbers::pi / 2);
    detail::sincos_block(in.data(), s.data(), c.data(), static_cast<Eigen::Index>(in.size()));
    double worst = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i)
    {
        const double xd = in[i];
        worst = std::max({worst, std::abs(s[i] - std::sin(xd)), std::abs(c[i] - std::cos(xd))});
    }
    EXPECT_LT(worst, 2e-7);
    EXPECT_EQ(s[0], 0.0f);
    EXPECT_EQ(c[0], 1.0f);
}

TEST(CoarseSpectrum, AgreesWithDoublePrecision)
{
    for (const ModelKind kind : {ModelKind::NearField, ModelKind::ApproxNearField, ModelKind::FarField})
    {
        const ArrayGeometry g = build_half_wavelength_upa(64, 80e9, centroid);
        const double df = fraunhofer_distance(g, FraunhoferConvention::ElementCountLambda);
        const SourceScene scene({{Direction::from_degrees(35.0, 63.0), 0.3}, {Direction::from_degrees(39.0, 14.0), 0.3}});
        const NoiseSubspace ns = subspace_of(g, scene, ModelKind::NearField, 30.0, 9);
        SearchGrid grid = SearchGrid::defaults(kind, df);
        grid.azimuth = {0.0, 360.0, 6.0};
        grid.elevation = {0.0, 90.0, 6.0};
        grid.refine_levels = 0;
        grid.final_angle_step = 6.0;
        if (grid.range)
            grid.range->n_points = 16;
        const CoarseSpectrum s = coarse_spectrum(ns, g, kind, grid);
        ASSERT_EQ(s.values.size(), s.azimuth_deg.size() * s.elevation_deg.size() * s.n_ranges());
        double worst = 0.0;
        for (std::size_t ie = 0; ie < s.elevation_deg.size(); ++ie)
            for (std::size_t ia = 0; ia < s.azimuth_deg.size(); ++ia)
                for (std::size_t ir = 0; ir < s.n_ranges(); ++ir)
                {
                    const Direction dir = Direction::from_degrees(s.azimuth_deg[ia], s.elevation_deg[ie]);
                    const double range = s.range_m.empty() ? 1.0 : s.range_m[ir];
                    const double exact = pseudospectrum(ns, steering(g, kind, dir, range));
                    worst = std::max(worst, std::abs(s.value(ia, ie, ir) - exact) / exact);
                }
        EXPECT_LT(worst, 1e-3) << to_string(kind);
    }
}

TEST(CoarseSpectrum, CsvLayout)
{
    const ArrayGeometry g = build_half_wavelength_upa(16, 3e9, centroid);
    const SourceScene scene({{Direction::from_degrees(35.0, 63.0), 2.0}});
    const NoiseSubspace ns = subspace_of(g, scene, ModelKind::NearField, 30.0, 1, 64);
    SearchGrid grid = SearchGrid::defaults(ModelKind::NearField, 1.6);
    grid.azimuth = {0.0, 360.0, 30.0};
    grid.elevation = {0.0, 90.0, 30.0};
    grid.refine_levels = 0;
    grid.final_angle_step = 30.0;
    grid.range->n_points = 3;
    const CoarseSpectrum s = coarse_spectrum(ns, g, ModelKind::NearField, grid);
    const auto path = std::filesystem::temp_directory_path() / "nfmusic_test_spectrum.csv";
    write_spectrum_csv(path, s);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "phi_deg,theta_deg,range_m,value");
    int rows = 0;
    while (std::getline(in, line))
        ++rows;
    EXPECT_EQ(rows, 12 * 4 * 3);
    std::filesystem::remove(path);
}

// ------------------------------------------------------------------ search

TEST(Search, NoiselessOnGridSourceIsExact)
{
    const ArrayGeometry g = build_half_wavelength_upa(16, 3e9, centroid);
    const double df = fraunhofer_distance(g, FraunhoferConvention::ElementCountLambda);
    SearchGrid grid = SearchGrid::defaults(ModelKind::NearField, df);
    const double on_grid_range = grid.range->points()[20];
    const SourceScene scene({{Direction::from_degrees(35.0, 63.0), on_grid_range}});
    const NoiseSubspace ns = subspace_of(g, scene, ModelKind::NearField, std::numeric_limits<double>::infinity(), 2, 64);
    const auto est = search(ns, g, ModelKind::NearField, grid, 1);
    ASSERT_EQ(est.size(), 1u);
    EXPECT_EQ(est[0].azimuth_deg, 35.0);
    EXPECT_EQ(est[0].elevation_deg, 63.0);
    ASSERT_TRUE(est[0].range.has_value());
    EXPECT_NEAR(*est[0].range, on_grid_range, 1e-12);
    EXPECT_GT(est[0].spectrum_value, 1e10);
}

TEST(Search, MatchedTwoSourceScene)
{
    const ArrayGeometry g = build_half_wavelength_upa(64, 3e9, centroid);
    const double df = fraunhofer_distance(g, FraunhoferConvention::ElementCountLambda);
    const SourceScene scene({{Direction::from_degrees(35.0, 63.0), 1.5}, {Direction::from_degrees(39.0, 14.0), 1.5}});
    const NoiseSubspace ns = subspace_of(g, scene, ModelKind::NearField, 30.0, 3);
    const SearchGrid grid = SearchGrid::defaults(ModelKind::NearField, df);
    const auto est = search(ns, g, ModelKind::NearField, grid, 2);
    ASSERT_EQ(est.size(), 2u);
    EXPECT_GE(est[0].spectrum_value, est[1].spectrum_value);
    for (const auto &e : match_and_score(est, scene))
    {
        EXPECT_LE(e.azimuth_deg, grid.final_angle_step);
        EXPECT_LE(e.elevation_deg, grid.final_angle_step);
        ASSERT_TRUE(e.range_rel.has_value());
        EXPECT_LT(*e.range_rel, 0.05);
    }
}

TEST(Search, PeakToFloorRatio)
{
    // Matched near-field, 30 dB, T = 1280: the spectrum at the truth exceeds
    // the median over the coarse grid by at least 1e6.
    const ArrayGeometry g = build_half_wavelength_upa(64, 3e9, centroid);
    const double df = fraunhofer_distance(g, FraunhoferConvention::ElementCountLambda);
    const SourceScene scene({{Direction::from_degrees(35.0, 63.0), 3.0}, {Direction::from_degrees(39.0, 14.0), 3.0}});
    const NoiseSubspace ns = subspace_of(g, scene, ModelKind::NearField, 30.0, 5);
    SearchGrid grid = SearchGrid::defaults(ModelKind::NearField, df);
    grid.range->n_points = 8;
    CoarseSpectrum s = coarse_spectrum(ns, g, ModelKind::NearField, grid);
    std::nth_element(s.values.begin(), s.values.begin() + s.values.size() / 2, s.values.end());
    const double floor = s.values[s.values.size() / 2];
    for (const auto &src : scene.sources())
        EXPECT_GE(pseudospectrum(ns, steering_near_field(g, src.direction, src.range)), 1e6 * floor);
}

TEST(Search, FarFieldIgnoresRange)
{
    const ArrayGeometry g = build_half_wavelength_upa(16, 3e9, centroid);
    const SourceScene scene({{Direction::from_degrees(120.0, 40.0), 5.0}});
    const NoiseSubspace ns = subspace_of(g, scene, ModelKind::FarField, 30.0, 6, 256);
    const auto est = search(ns, g, ModelKind::FarField, SearchGrid::defaults(ModelKind::FarField, 1.6), 1);
    ASSERT_EQ(est.size(), 1u);
    EXPECT_FALSE(est[0].range.has_value());
    EXPECT_LE(angular_distance_deg(est[0].azimuth_deg, est[0].elevation_deg, 120.0, 40.0), 0.0625);
}

TEST(Search, CovarianceScalingKeepsEstimates)
{
    const ArrayGeometry g = build_half_wavelength_upa(16, 3e9, centroid);
    const SourceScene scene({{Direction::from_degrees(200.0, 30.0), 1.0}, {Direction::from_degrees(20.0, 70.0), 1.0}});
    SimConfig cfg;
    cfg.n_snapshots = 256;
    cfg.snr_db = 20.0;
    const Eigen::MatrixXcd r = sample_covariance(generate(g, scene, ModelKind::FarField, cfg));
    const SearchGrid grid = SearchGrid::defaults(ModelKind::FarField, 1.6);
    const auto a = search(noise_subspace(r, 2), g, ModelKind::FarField, grid, 2);
    const Eigen::MatrixXcd scaled = 37.0 * r;
    const auto b = search(noise_subspace(scaled, 2), g, ModelKind::FarField, grid, 2);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        EXPECT_EQ(a[i].azimuth_deg, b[i].azimuth_deg);
        EXPECT_EQ(a[i].elevation_deg, b[i].elevation_deg);
    }
}

TEST(Search, PoleSourceReportsSinglePeak)
{
    // A source at zenith: every azimuth on the pole row is the same point.
    const ArrayGeometry g = build_half_wavelength_upa(16, 3e9, centroid);
    const SourceScene scene({{Direction::from_degrees(0.0, 0.0), 5.0}, {Direction::from_degrees(90.0, 60.0), 5.0}});
    const NoiseSubspace ns = subspace_of(g, scene, ModelKind::FarField, 30.0, 8, 256);
    const auto est = search(ns, g, ModelKind::FarField, SearchGrid::defaults(ModelKind::FarField, 1.6), 2);
    const auto err = match_and_score(est, scene);
    EXPECT_LE(angular_distance_deg(0.0, 0.0, est[0].azimuth_deg, est[0].elevation_deg) *
                  angular_distance_deg(0.0, 0.0, est[1].azimuth_deg, est[1].elevation_deg),
              0.0625 * 90.0);
    EXPECT_LE(err[1].elevation_deg, 0.0625);
}

TEST(Search, Errors)
{
    const ArrayGeometry g = build_half_wavelength_upa(16, 3e9, centroid);
    const SourceScene scene({{Direction::from_degrees(35.0, 63.0), 2.0}});
    const NoiseSubspace ns = subspace_of(g, scene, ModelKind::FarField, 30.0, 1, 64);
    const SearchGrid ff = SearchGrid::defaults(ModelKind::FarField, 1.6);
    EXPECT_THROW(search(ns, g, ModelKind::FarField, ff, 0), InvalidArgument);
    EXPECT_THROW(search(ns, g, ModelKind::NearField, ff, 1), InvalidArgument);
    // A coarse grid with a single cell cannot hold two separated maxima.
    SearchGrid tiny = ff;
    tiny.azimuth = {0.0, 1.0, 1.0};
    tiny.elevation = {10.0, 11.0, 1.0};
    EXPECT_THROW(search(ns, g, ModelKind::FarField, tiny, 2), InsufficientPeaks);
    const ArrayGeometry other = build_half_wavelength_upa(9, 3e9, centroid);
    EXPECT_THROW(search(ns, other, ModelKind::FarField, ff, 1), InvalidArgument);
}

// ----------------------------------------------------------------- scoring

TEST(MatchAndScore, SwappedOrderGivesZeroError)
{
    const SourceScene scene({{Direction::from_degrees(35.0, 63.0), 3.0}, {Direction::from_degrees(39.0, 14.0), 3.0}});
    const std::vector<PeakEstimate> est{{39.0, 14.0, 3.0, 1.0}, {35.0, 63.0, 3.0, 2.0}};
    for (const auto &e : match_and_score(est, scene))
    {
        EXPECT_NEAR(e.azimuth_deg, 0.0, 1e-12);
        EXPECT_NEAR(e.elevation_deg, 0.0, 1e-12);
        EXPECT_NEAR(*e.range_m, 0.0, 1e-12);
    }
}

TEST(MatchAndScore, AzimuthOffsetAndWrap)
{
    const SourceScene one({{Direction::from_degrees(10.0, 50.0), 2.0}});
    EXPECT_NEAR(match_and_score({{10.5, 50.0, std::nullopt, 1.0}}, one)[0].azimuth_deg, 0.5, 1e-12);
    EXPECT_FALSE(match_and_score({{10.5, 50.0, std::nullopt, 1.0}}, one)[0].range_m.has_value());

    const SourceScene wrap({{Direction::from_degrees(0.5, 50.0), 2.0}});
    const auto e = match_and_score({{359.5, 50.0, 2.5, 1.0}}, wrap)[0];
    EXPECT_NEAR(e.azimuth_deg, 1.0, 1e-9);
    EXPECT_NEAR(*e.range_m, 0.5, 1e-12);
    EXPECT_NEAR(*e.range_rel, 0.25, 1e-12);
}

TEST(MatchAndScore, CountMismatch)
{
    const SourceScene one({{Direction::from_degrees(10.0, 50.0), 2.0}});
    EXPECT_THROW(match_and_score({}, one), InvalidArgument);
}

TEST(AngularDistance, KnownValues)
{
    EXPECT_NEAR(angular_distance_deg(0.0, 90.0, 90.0, 90.0), 90.0, 1e-12);
    EXPECT_NEAR(angular_distance_deg(123.0, 0.0, 250.0, 0.0), 0.0, 1e-12);
    EXPECT_NEAR(angular_distance_deg(10.0, 40.0, 10.0, 40.0 + 1e-7), 1e-7, 1e-12);
}
