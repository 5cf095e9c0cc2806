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
#ifndef NFMUSIC_GEOMETRY_HPP
#define NFMUSIC_GEOMETRY_HPP

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "nfmusic/errors.hpp"

namespace nfmusic
{
    inline constexpr double speed_of_light = 299792458.0; // m/s

    template <typename Scalar>
    using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

    using Position3 = Eigen::Vector3d;

    constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
    constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

    // Propagation direction of a source as seen by the array.
    // Azimuth in [0, 2pi), elevation measured from +z in [0, pi].
    struct Direction
    {
        double azimuth = 0.0;
        double elevation = 0.0;

        // Wraps the azimuth into [0, 360) deg; throws InvalidArgument for an
        // elevation outside [0, 180] deg or non-finite input.
        static Direction from_degrees(double azimuth_deg, double elevation_deg);

        double azimuth_deg() const { return rad2deg(azimuth); }
        double elevation_deg() const { return rad2deg(elevation); }
    };

    // [cos(az) sin(el), sin(az) sin(el), cos(el)]
    template <typename Scalar = double>
    Vector3<Scalar> unit_vector(const Direction &d)
    {
        const Scalar az = static_cast<Scalar>(d.azimuth);
        const Scalar el = static_cast<Scalar>(d.elevation);
        using std::cos;
        using std::sin;
        return Vector3<Scalar>(cos(az) * sin(el), sin(az) * sin(el), cos(el));
    }

    // Receive array: centroid in global coordinates plus per-element offsets
    // relative to it (columns of a 3 x N_U matrix). The offsets are centered.
    class ArrayGeometry
    {
    public:
        ArrayGeometry(const Position3 &centroid, Eigen::Matrix3Xd offsets, double carrier_frequency);

        const Position3 &centroid() const { return centroid_; }
        const Eigen::Matrix3Xd &offsets() const { return offsets_; }
        Eigen::Index size() const { return offsets_.cols(); }
        double carrier_frequency() const { return carrier_frequency_; }
        double wavelength() const { return wavelength_; }
        double wavenumber() const { return 2.0 * std::numbers::pi / wavelength_; }

        // Global position of element u.
        Position3 element_position(Eigen::Index u) const { return centroid_ + offsets_.col(u); }

        double max_offset_norm() const;
        // Largest distance between any two elements.
        double aperture_diameter() const;

    private:
        Position3 centroid_;
        Eigen::Matrix3Xd offsets_;
        double carrier_frequency_;
        double wavelength_;
    };

    // Square uniform planar array in the local x-y plane, sqrt(n) x sqrt(n),
    // centered on the centroid. Element u = row * side + col.
    ArrayGeometry build_upa(int n_elements, double carrier_frequency, const Position3 &centroid, double spacing);

    // build_upa with half-wavelength spacing.
    ArrayGeometry build_half_wavelength_upa(int n_elements, double carrier_frequency, const Position3 &centroid);

    struct Source
    {
        Direction direction;
        double range = 1.0; // m
    };

    class SourceScene
    {
    public:
        explicit SourceScene(std::vector<Source> sources);

        const std::vector<Source> &sources() const { return sources_; }
        Eigen::Index size() const { return static_cast<Eigen::Index>(sources_.size()); }
        const Source &operator[](std::size_t k) const { return sources_[k]; }

        // Throws TooManySources unless size() < geom.size().
        void check_against(const ArrayGeometry &geom) const;

    private:
        std::vector<Source> sources_;
    };

    // Global source position. The direction points from the source towards
    // the centroid, so p_source = p_centroid - range * unit_vector(direction).
    Position3 source_position(const ArrayGeometry &geom, const Source &src);

    // Line-of-sight propagation delay in seconds.
    double exact_delay(const Position3 &source_pos, const Position3 &element_pos);

    enum class FraunhoferConvention
    {
        Aperture2D2,        // 2 D^2 / lambda, D = largest element separation
        ElementCountLambda // N_U * lambda
    };

    double fraunhofer_distance(const ArrayGeometry &geom, FraunhoferConvention convention);
}

#endif
