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
#include "nfmusic/music.hpp"

#include "coarse_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

namespace nfmusic
{
    double pseudospectrum(const NoiseSubspace &ns, const Eigen::VectorXcd &h)
    {
        if (h.size() != ns.dimension())
            throw InvalidArgument("pseudospectrum: steering length " + std::to_string(h.size()) + " does not match subspace dimension " +
                                  std::to_string(ns.dimension()));

        const double norm_sq = h.squaredNorm();
        double residual = -1.0;
        if (ns.signal_basis.cols() > 0 && ns.signal_basis.cols() < ns.basis.cols())
        {
            // |E_n^H h|^2 = |h|^2 - |E_s^H h|^2, cheaper when N_K < N_U - N_K.
            residual = norm_sq - (ns.signal_basis.adjoint() * h).squaredNorm();
            if (residual < 1e-6 * norm_sq)
                residual = -1.0; // cancellation: fall back to the direct route
        }
        if (residual < 0.0)
            residual = (ns.basis.adjoint() * h).squaredNorm();

        if (!(residual >= pseudospectrum_floor * norm_sq))
            return pseudospectrum_cap;
        return norm_sq / residual;
    }

    bool AngleAxis::periodic() const
    {
        return std::abs((hi - lo) - 360.0) < 1e-9;
    }

    std::vector<double> AngleAxis::points() const
    {
        std::vector<double> out;
        const double span = hi - lo;
        const auto n_steps = static_cast<long>(std::floor(span / step + 1e-9));
        const long count = periodic() ? static_cast<long>(std::ceil(span / step - 1e-9)) : n_steps + 1;
        out.reserve(static_cast<std::size_t>(count));
        for (long i = 0; i < count; ++i)
            out.push_back(lo + static_cast<double>(i) * step);
        return out;
    }

    std::vector<double> RangeAxis::points() const
    {
        std::vector<double> out(static_cast<std::size_t>(n_points));
        if (n_points == 1)
        {
            out[0] = lo;
            return out;
        }
        for (int i = 0; i < n_points; ++i)
        {
            const double t = static_cast<double>(i) / (n_points - 1);
            out[static_cast<std::size_t>(i)] = log_spaced ? lo * std::pow(hi / lo, t) : lo + t * (hi - lo);
        }
        return out;
    }

    void SearchGrid::validate(ModelKind kind) const
    {
        const auto check_axis = [](const AngleAxis &a, const char *name) {
            if (!(a.lo < a.hi) || !(a.step > 0.0) || !std::isfinite(a.lo) || !std::isfinite(a.hi))
                throw InvalidArgument(std::string("SearchGrid: malformed ") + name + " axis");
        };
        check_axis(azimuth, "azimuth");
        check_axis(elevation, "elevation");
        if (azimuth.hi - azimuth.lo > 360.0 + 1e-9)
            throw InvalidArgument("SearchGrid: azimuth span exceeds 360 deg");
        if (elevation.lo < 0.0 || elevation.hi > 180.0)
            throw InvalidArgument("SearchGrid: elevation must stay within [0, 180] deg");
        if (refine_levels < 0)
            throw InvalidArgument("SearchGrid: refine_levels must be non-negative");
        const double scale = std::ldexp(1.0, -refine_levels);
        if (std::abs(azimuth.step * scale - final_angle_step) > 1e-9 || std::abs(elevation.step * scale - final_angle_step) > 1e-9)
            throw InvalidArgument("SearchGrid: final_angle_step must equal coarse step / 2^refine_levels");

        if (has_range(kind) != range.has_value())
            throw InvalidArgument(std::string("SearchGrid: range axis must be ") + (has_range(kind) ? "present" : "absent") +
                                  " for a " + std::string(to_string(kind)) + " beamformer");
        if (range)
        {
            if (!(range->lo > 0.0) || !(range->lo < range->hi) || range->n_points < 2)
                throw InvalidArgument("SearchGrid: malformed range axis");
        }
    }

    SearchGrid SearchGrid::defaults(ModelKind kind, double fraunhofer_m)
    {
        SearchGrid grid;
        if (has_range(kind))
            grid.range = RangeAxis{0.05, 4.0 * fraunhofer_m, 64, true};
        return grid;
    }

    namespace
    {
        Eigen::Vector3d direction_vector(double az_deg, double el_deg)
        {
            return unit_vector(Direction{deg2rad(az_deg), deg2rad(el_deg)});
        }

        // Exact double-precision pseudospectrum of one candidate, global phase dropped.
        class PointEvaluator
        {
        public:
            PointEvaluator(const NoiseSubspace &ns, const ArrayGeometry &geom, ModelKind kind)
                : ns_(ns), geom_(geom), kind_(kind), q_(geom.offsets().colwise().squaredNorm().transpose().array())
            {
            }

            double operator()(double az_deg, double el_deg, double range) const
            {
                const Eigen::ArrayXd p = (geom_.offsets().transpose() * direction_vector(az_deg, el_deg)).array();
                Eigen::ArrayXd path;
                switch (kind_)
                {
                case ModelKind::NearField:
                    path = near_field_excess(p, q_, range);
                    break;
                case ModelKind::ApproxNearField:
                    path = fresnel_excess(p, q_, range);
                    break;
                case ModelKind::FarField:
                    path = p;
                    break;
                }
                const double k = geom_.wavenumber();
                Eigen::VectorXcd h(path.size());
                for (Eigen::Index u = 0; u < path.size(); ++u)
                    h[u] = std::polar(1.0, -k * path[u]);
                return pseudospectrum(ns_, h);
            }

        private:
            const NoiseSubspace &ns_;
            const ArrayGeometry &geom_;
            ModelKind kind_;
            Eigen::ArrayXd q_;
        };

        // Strict total order on cells: larger value first, then the
        // lexicographically smaller (azimuth, elevation, range) key.
        struct Cell
        {
            double value;
            double az, el, range;
        };

        bool better(const Cell &a, const Cell &b)
        {
            if (a.value != b.value)
                return a.value > b.value;
            return std::tie(a.az, a.el, a.range) < std::tie(b.az, b.el, b.range);
        }

        bool is_pole(double el_deg) { return el_deg == 0.0 || el_deg == 180.0; }
    }

    CoarseSpectrum coarse_spectrum(const NoiseSubspace &ns, const ArrayGeometry &geom, ModelKind kind, const SearchGrid &grid)
    {
        grid.validate(kind);
        if (ns.dimension() != geom.size())
            throw InvalidArgument("coarse_spectrum: subspace dimension does not match the array");

        CoarseSpectrum out;
        out.azimuth_deg = grid.azimuth.points();
        out.elevation_deg = grid.elevation.points();
        out.azimuth_periodic = grid.azimuth.periodic();
        if (grid.range)
            out.range_m = grid.range->points();
        const std::size_t n_az = out.azimuth_deg.size();
        const std::size_t n_el = out.elevation_deg.size();
        const std::size_t n_r = out.n_ranges();
        out.values.assign(n_az * n_el * n_r, 0.0);

        const Eigen::Matrix3Xd &offsets = geom.offsets();
        const Eigen::ArrayXf q = offsets.colwise().squaredNorm().transpose().array().cast<float>();
        detail::CoarseKernel kernel(ns, geom.wavenumber());

        if (kind == ModelKind::FarField)
        {
            // One batch per elevation row: path(ia, u) = dir(ia)' s_u.
            const Eigen::Index m = static_cast<Eigen::Index>(n_az);
            Eigen::ArrayXf dx(m), dy(m);
            for (std::size_t ie = 0; ie < n_el; ++ie)
            {
                const double el = deg2rad(out.elevation_deg[ie]);
                for (std::size_t ia = 0; ia < n_az; ++ia)
                {
                    const double az = deg2rad(out.azimuth_deg[ia]);
                    dx[static_cast<Eigen::Index>(ia)] = static_cast<float>(std::cos(az) * std::sin(el));
                    dy[static_cast<Eigen::Index>(ia)] = static_cast<float>(std::sin(az) * std::sin(el));
                }
                const float dz = static_cast<float>(std::cos(el));
                kernel.evaluate(
                    m,
                    [&](Eigen::Index u, Eigen::ArrayXf &path) {
                        path = static_cast<float>(offsets(0, u)) * dx + static_cast<float>(offsets(1, u)) * dy +
                               static_cast<float>(offsets(2, u)) * dz;
                    },
                    &out.values[out.index(0, ie, 0)]);
            }
            return out;
        }

        // Batches of whole range profiles for a run of azimuths in one row;
        // candidate index = cell * n_r + range index.
        const std::size_t chunk = std::max<std::size_t>(1, 1024 / n_r);
        const Eigen::Index n_r_i = static_cast<Eigen::Index>(n_r);
        Eigen::ArrayXf ranges_tiled, range_sq_tiled, inv_two_range_tiled, p_tiled;
        Eigen::MatrixXf p_cells; // cells x N_U
        for (std::size_t ie = 0; ie < n_el; ++ie)
            for (std::size_t ia0 = 0; ia0 < n_az; ia0 += chunk)
            {
                const Eigen::Index n_cells = static_cast<Eigen::Index>(std::min(chunk, n_az - ia0));
                const Eigen::Index m = n_cells * n_r_i;
                if (ranges_tiled.size() != m)
                {
                    ranges_tiled.resize(m);
                    for (Eigen::Index c = 0; c < n_cells; ++c)
                        for (Eigen::Index ir = 0; ir < n_r_i; ++ir)
                            ranges_tiled[c * n_r_i + ir] = static_cast<float>(out.range_m[static_cast<std::size_t>(ir)]);
                    range_sq_tiled = ranges_tiled.square();
                    inv_two_range_tiled = 0.5f / ranges_tiled;
                    p_tiled.resize(m);
                }
                Eigen::Matrix3Xd dirs(3, n_cells);
                for (Eigen::Index c = 0; c < n_cells; ++c)
                    dirs.col(c) = direction_vector(out.azimuth_deg[ia0 + static_cast<std::size_t>(c)], out.elevation_deg[ie]);
                p_cells = (dirs.transpose() * offsets).cast<float>();

                kernel.evaluate(
                    m,
                    [&](Eigen::Index u, Eigen::ArrayXf &path) {
                        for (Eigen::Index c = 0; c < n_cells; ++c)
                            p_tiled.segment(c * n_r_i, n_r_i).setConstant(p_cells(c, u));
                        const float qu = q[u];
                        if (kind == ModelKind::NearField)
                        {
                            // |r dir + s| - r in the cancellation-free form
                            const auto two_r_p = 2.0f * ranges_tiled * p_tiled;
                            path = (two_r_p + qu) / ((range_sq_tiled + two_r_p + qu).max(0.0f).sqrt() + ranges_tiled);
                        }
                        else
                            path = p_tiled + (qu - p_tiled.square()) * inv_two_range_tiled;
                    },
                    &out.values[out.index(ia0, ie, 0)]);
            }
        return out;
    }

    void write_spectrum_csv(const std::filesystem::path &path, const CoarseSpectrum &spectrum)
    {
        std::ofstream os(path, std::ios::trunc);
        if (!os)
            throw IoError("cannot open '" + path.string() + "' for writing");
        os << "phi_deg,theta_deg,range_m,value\n";
        char line[160];
        for (std::size_t ie = 0; ie < spectrum.elevation_deg.size(); ++ie)
            for (std::size_t ia = 0; ia < spectrum.azimuth_deg.size(); ++ia)
                for (std::size_t ir = 0; ir < spectrum.n_ranges(); ++ir)
                {
                    if (spectrum.range_m.empty())
                        std::snprintf(line, sizeof(line), "%.6g,%.6g,,%.10g\n", spectrum.azimuth_deg[ia], spectrum.elevation_deg[ie],
                                      spectrum.value(ia, ie, ir));
                    else
                        std::snprintf(line, sizeof(line), "%.6g,%.6g,%.8g,%.10g\n", spectrum.azimuth_deg[ia], spectrum.elevation_deg[ie],
                                      spectrum.range_m[ir], spectrum.value(ia, ie, ir));
                    os << line;
                }
        if (!os)
            throw IoError("write to '" + path.string() + "' failed");
    }

    namespace
    {
        struct Index3
        {
            std::size_t ia, ie, ir;
        };

        // Local maxima of the coarse grid under the strict cell order. On a
        // pole row every azimuth is the same point, so only ia == 0 there is
        // a candidate and it neighbors the whole adjacent ring.
        std::vector<Index3> local_maxima(const CoarseSpectrum &s)
        {
            const long n_az = static_cast<long>(s.azimuth_deg.size());
            const long n_el = static_cast<long>(s.elevation_deg.size());
            const long n_r = static_cast<long>(s.n_ranges());
            const auto cell = [&](long ia, long ie, long ir) {
                return Cell{s.value(static_cast<std::size_t>(ia), static_cast<std::size_t>(ie), static_cast<std::size_t>(ir)),
                            s.azimuth_deg[static_cast<std::size_t>(ia)], s.elevation_deg[static_cast<std::size_t>(ie)],
                            s.range_m.empty() ? 0.0 : s.range_m[static_cast<std::size_t>(ir)]};
            };

            std::vector<Index3> out;
            for (long ie = 0; ie < n_el; ++ie)
            {
                const bool pole = is_pole(s.elevation_deg[static_cast<std::size_t>(ie)]);
                for (long ia = 0; ia < n_az; ++ia)
                {
                    if (pole && ia != 0)
                        continue;
                    for (long ir = 0; ir < n_r; ++ir)
                    {
                        const Cell c = cell(ia, ie, ir);
                        bool is_max = true;
                        for (long de = -1; de <= 1 && is_max; ++de)
                        {
                            const long je = ie + de;
                            if (je < 0 || je >= n_el)
                                continue;
                            const bool ring = pole || is_pole(s.elevation_deg[static_cast<std::size_t>(je)]);
                            for (long da = ring ? -n_az : -1; da <= (ring ? n_az : 1) && is_max; ++da)
                            {
                                long ja = ring ? da : ia + da;
                                if (ring && (ja < 0 || ja >= n_az))
                                    continue;
                                if (!ring)
                                {
                                    if (s.azimuth_periodic)
                                        ja = (ja + n_az) % n_az;
                                    else if (ja < 0 || ja >= n_az)
                                        continue;
                                }
                                for (long dr = -1; dr <= 1; ++dr)
                                {
                                    const long jr = ir + dr;
                                    if (jr < 0 || jr >= n_r || (ja == ia && je == ie && jr == ir))
                                        continue;
                                    if (better(cell(ja, je, jr), c))
                                    {
                                        is_max = false;
                                        break;
                                    }
                                }
                            }
                        }
                        if (is_max)
                            out.push_back({static_cast<std::size_t>(ia), static_cast<std::size_t>(ie), static_cast<std::size_t>(ir)});
                    }
                }
            }
            return out;
        }

        double wrap360(double deg)
        {
            double w = std::fmod(deg, 360.0);
            if (w < 0.0)
                w += 360.0;
            return w;
        }

        PeakEstimate refine(const PointEvaluator &eval, const SearchGrid &grid, bool ranged, Cell start)
        {
            const bool periodic = grid.azimuth.periodic();
            double az_step = grid.azimuth.step;
            double el_step = grid.elevation.step;
            double range_factor = 1.0, range_step = 0.0;
            if (ranged)
            {
                const RangeAxis &ax = *grid.range;
                if (ax.log_spaced)
                    range_factor = std::pow(ax.hi / ax.lo, 1.0 / (ax.n_points - 1));
                else
                    range_step = (ax.hi - ax.lo) / (ax.n_points - 1);
            }

            Cell best = start;
            best.value = eval(best.az, best.el, best.range);
            constexpr int half_window = 2;
            constexpr int max_moves = 16;

            for (int level = 0; level < grid.refine_levels; ++level)
            {
                az_step *= 0.5;
                el_step *= 0.5;
                range_factor = std::sqrt(range_factor);
                range_step *= 0.5;

                for (int move = 0; move < max_moves; ++move)
                {
                    const Cell center = best;
                    bool on_edge = false;
                    std::array<int, 3> best_offset{0, 0, 0};
                    const int r_half = ranged ? half_window : 0;
                    for (int i = -half_window; i <= half_window; ++i)
                    {
                        double az = center.az + i * az_step;
                        if (periodic)
                            az = wrap360(az - grid.azimuth.lo) + grid.azimuth.lo;
                        else if (az < grid.azimuth.lo || az > grid.azimuth.hi)
                            continue;
                        for (int j = -half_window; j <= half_window; ++j)
                        {
                            const double el = center.el + j * el_step;
                            if (el < grid.elevation.lo || el > grid.elevation.hi)
                                continue;
                            for (int m = -r_half; m <= r_half; ++m)
                            {
                                if (i == 0 && j == 0 && m == 0)
                                    continue;
                                double range = 0.0;
                                if (ranged)
                                {
                                    range = grid.range->log_spaced ? center.range * std::pow(range_factor, m) : center.range + m * range_step;
                                    if (range < grid.range->lo * (1 - 1e-12) || range > grid.range->hi * (1 + 1e-12))
                                        continue;
                                }
                                const Cell c{eval(az, el, range), az, el, range};
                                if (better(c, best))
                                {
                                    best = c;
                                    best_offset = {i, j, m};
                                }
                            }
                        }
                    }
                    for (const int o : best_offset)
                        on_edge = on_edge || std::abs(o) == half_window;
                    if (!on_edge)
                        break;
                }
            }
            return {best.az, best.el, ranged ? std::optional<double>(best.range) : std::nullopt, best.value};
        }
    }

    std::vector<PeakEstimate> search(const NoiseSubspace &ns, const ArrayGeometry &geom, ModelKind kind, const SearchGrid &grid,
                                     Eigen::Index n_sources)
    {
        if (n_sources < 1)
            throw InvalidArgument("search: at least one source required");
        const CoarseSpectrum coarse = coarse_spectrum(ns, geom, kind, grid);

        std::vector<Index3> maxima = local_maxima(coarse);
        const auto cell_of = [&](const Index3 &i) {
            return Cell{coarse.value(i.ia, i.ie, i.ir), coarse.azimuth_deg[i.ia], coarse.elevation_deg[i.ie],
                        coarse.range_m.empty() ? 0.0 : coarse.range_m[i.ir]};
        };
        std::sort(maxima.begin(), maxima.end(), [&](const Index3 &a, const Index3 &b) { return better(cell_of(a), cell_of(b)); });

        const long n_az = static_cast<long>(coarse.azimuth_deg.size());
        const auto adjacent = [&](const Index3 &a, const Index3 &b) {
            long da = std::abs(static_cast<long>(a.ia) - static_cast<long>(b.ia));
            if (coarse.azimuth_periodic)
                da = std::min(da, n_az - da);
            const long de = std::abs(static_cast<long>(a.ie) - static_cast<long>(b.ie));
            return da < 2 && de < 2;
        };

        std::vector<Index3> chosen;
        for (const Index3 &m : maxima)
        {
            if (static_cast<Eigen::Index>(chosen.size()) == n_sources)
                break;
            if (std::none_of(chosen.begin(), chosen.end(), [&](const Index3 &c) { return adjacent(c, m); }))
                chosen.push_back(m);
        }
        if (static_cast<Eigen::Index>(chosen.size()) < n_sources)
            throw InsufficientPeaks("search: found " + std::to_string(chosen.size()) + " separated coarse maxima, need " +
                                    std::to_string(n_sources));

        const PointEvaluator eval(ns, geom, kind);
        std::vector<PeakEstimate> out;
        for (const Index3 &c : chosen)
            out.push_back(refine(eval, grid, has_range(kind), cell_of(c)));

        std::sort(out.begin(), out.end(), [](const PeakEstimate &a, const PeakEstimate &b) {
            return better(Cell{a.spectrum_value, a.azimuth_deg, a.elevation_deg, a.range.value_or(0.0)},
                          Cell{b.spectrum_value, b.azimuth_deg, b.elevation_deg, b.range.value_or(0.0)});
        });
        return out;
    }

    double angular_distance_deg(double az1_deg, double el1_deg, double az2_deg, double el2_deg)
    {
        const Eigen::Vector3d a = direction_vector(az1_deg, el1_deg);
        const Eigen::Vector3d b = direction_vector(az2_deg, el2_deg);
        // atan2 form stays accurate for nearly parallel vectors.
        return rad2deg(std::atan2(a.cross(b).norm(), a.dot(b)));
    }

    std::vector<SourceError> match_and_score(const std::vector<PeakEstimate> &estimates, const SourceScene &scene)
    {
        const std::size_t n = static_cast<std::size_t>(scene.size());
        if (estimates.size() != n)
            throw InvalidArgument("match_and_score: " + std::to_string(estimates.size()) + " estimates for " + std::to_string(n) + " sources");
        if (n > 8)
            throw InvalidArgument("match_and_score: at most 8 sources supported");

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<std::size_t> best_perm = perm;
        double best_cost = std::numeric_limits<double>::infinity();
        do
        {
            double cost = 0.0;
            for (std::size_t k = 0; k < n; ++k)
            {
                const Direction &d = scene[k].direction;
                const PeakEstimate &e = estimates[perm[k]];
                cost += angular_distance_deg(e.azimuth_deg, e.elevation_deg, d.azimuth_deg(), d.elevation_deg());
            }
            if (cost < best_cost)
            {
                best_cost = cost;
                best_perm = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));

        std::vector<SourceError> out(n);
        for (std::size_t k = 0; k < n; ++k)
        {
            const Source &src = scene[k];
            const PeakEstimate &e = estimates[best_perm[k]];
            const double daz = std::abs(wrap360(e.azimuth_deg - src.direction.azimuth_deg()));
            out[k].azimuth_deg = std::min(daz, 360.0 - daz);
            out[k].elevation_deg = std::abs(e.elevation_deg - src.direction.elevation_deg());
            if (e.range)
            {
                out[k].range_m = std::abs(*e.range - src.range);
                out[k].range_rel = *out[k].range_m / src.range;
            }
        }
        return out;
    }
}
