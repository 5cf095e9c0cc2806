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
#include "nfmusic/geometry.hpp"

#include <string>

namespace nfmusic
{
    Direction Direction::from_degrees(double azimuth_deg, double elevation_deg)
    {
        if (!std::isfinite(azimuth_deg) || !std::isfinite(elevation_deg))
            throw InvalidArgument("Direction: non-finite angle");
        if (elevation_deg < 0.0 || elevation_deg > 180.0)
            throw InvalidArgument("Direction: elevation " + std::to_string(elevation_deg) + " deg outside [0, 180]");

        double az = std::fmod(azimuth_deg, 360.0);
        if (az < 0.0)
            az += 360.0;
        if (az >= 360.0)
            az = 0.0;
        return Direction{deg2rad(az), deg2rad(elevation_deg)};
    }

    ArrayGeometry::ArrayGeometry(const Position3 &centroid, Eigen::Matrix3Xd offsets, double carrier_frequency)
        : centroid_(centroid), offsets_(std::move(offsets)), carrier_frequency_(carrier_frequency),
          wavelength_(speed_of_light / carrier_frequency)
    {
        if (!(carrier_frequency > 0.0) || !std::isfinite(carrier_frequency))
            throw InvalidArgument("ArrayGeometry: carrier frequency must be positive");
        if (offsets_.cols() < 2)
            throw InvalidArgument("ArrayGeometry: at least two elements required");
        if (!centroid_.allFinite() || !offsets_.allFinite())
            throw InvalidArgument("ArrayGeometry: non-finite coordinates");

        const Eigen::Vector3d mean = offsets_.rowwise().mean();
        const double scale = std::max(1.0, offsets_.cwiseAbs().maxCoeff());
        if (mean.norm() > 1e-12 * scale)
            throw InvalidArgument("ArrayGeometry: element offsets are not centered on the centroid");
    }

    double ArrayGeometry::max_offset_norm() const
    {
        return offsets_.colwise().norm().maxCoeff();
    }

    double ArrayGeometry::aperture_diameter() const
    {
        double best = 0.0;
        for (Eigen::Index a = 0; a < offsets_.cols(); ++a)
            for (Eigen::Index b = a + 1; b < offsets_.cols(); ++b)
                best = std::max(best, (offsets_.col(a) - offsets_.col(b)).norm());
        return best;
    }

    ArrayGeometry build_upa(int n_elements, double carrier_frequency, const Position3 &centroid, double spacing)
    {
        if (n_elements < 1)
            throw NotPerfectSquare("build_upa: element count must be positive");
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_elements))));
        if (side * side != n_elements)
            throw NotPerfectSquare("build_upa: " + std::to_string(n_elements) + " is not a perfect square");
        if (!(spacing > 0.0))
            throw InvalidArgument("build_upa: spacing must be positive");

        Eigen::Matrix3Xd offsets(3, n_elements);
        const double half = 0.5 * (side - 1);
        for (int row = 0; row < side; ++row)
            for (int col = 0; col < side; ++col)
                offsets.col(row * side + col) << (col - half) * spacing, (row - half) * spacing, 0.0;

        return ArrayGeometry(centroid, std::move(offsets), carrier_frequency);
    }

    ArrayGeometry build_half_wavelength_upa(int n_elements, double carrier_frequency, const Position3 &centroid)
    {
        return build_upa(n_elements, carrier_frequency, centroid, 0.5 * speed_of_light / carrier_frequency);
    }

    SourceScene::SourceScene(std::vector<Source> sources) : sources_(std::move(sources))
    {
        if (sources_.empty())
            throw InvalidArgument("SourceScene: at least one source required");
        for (const auto &s : sources_)
        {
            if (!(s.range > 0.0) || !std::isfinite(s.range))
                throw InvalidArgument("SourceScene: source ranges must be positive and finite");
            if (s.direction.elevation < 0.0 || s.direction.elevation > std::numbers::pi)
                throw InvalidArgument("SourceScene: elevation outside [0, pi]");
        }
    }

    void SourceScene::check_against(const ArrayGeometry &geom) const
    {
        if (size() >= geom.size())
            throw TooManySources("SourceScene: " + std::to_string(size()) + " sources need more than " +
                                 std::to_string(geom.size()) + " elements");
    }

    Position3 source_position(const ArrayGeometry &geom, const Source &src)
    {
        return geom.centroid() - src.range * unit_vector(src.direction);
    }

    double exact_delay(const Position3 &source_pos, const Position3 &element_pos)
    {
        return (element_pos - source_pos).norm() / speed_of_light;
    }

    double fraunhofer_distance(const ArrayGeometry &geom, FraunhoferConvention convention)
    {
        switch (convention)
        {
        case FraunhoferConvention::Aperture2D2:
        {
            const double d = geom.aperture_diameter();
            return 2.0 * d * d / geom.wavelength();
        }
        case FraunhoferConvention::ElementCountLambda:
            return static_cast<double>(geom.size()) * geom.wavelength();
        }
        return 0.0;
    }
}
