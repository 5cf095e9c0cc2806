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
#include "nfmusic/channel.hpp"

#include <string>

namespace nfmusic
{
    std::string_view to_string(ModelKind kind)
    {
        switch (kind)
        {
        case ModelKind::NearField:
            return "NF";
        case ModelKind::ApproxNearField:
            return "ANM";
        case ModelKind::FarField:
            return "FF";
        }
        return "?";
    }

    ModelKind parse_model_kind(std::string_view text)
    {
        if (text == "NF" || text == "NearField")
            return ModelKind::NearField;
        if (text == "ANM" || text == "ApproxNearField")
            return ModelKind::ApproxNearField;
        if (text == "FF" || text == "FarField")
            return ModelKind::FarField;
        throw InvalidArgument("unknown model kind '" + std::string(text) + "'");
    }

    namespace
    {
        struct OffsetProjections
        {
            Eigen::ArrayXd p; // dir' * s_u
            Eigen::ArrayXd q; // |s_u|^2
        };

        OffsetProjections project(const ArrayGeometry &geom, const Direction &dir)
        {
            const Eigen::Vector3d delta = unit_vector(dir);
            return {(geom.offsets().transpose() * delta).array(), geom.offsets().colwise().squaredNorm().transpose().array()};
        }

        void check_range(const ArrayGeometry &geom, const Direction &dir, double range)
        {
            if (!(range > 0.0) || !std::isfinite(range))
                throw RangeTooSmall("steering: range must be positive, got " + std::to_string(range));
            // Distance between the source and the nearest element, formed
            // directly so that it does not cancel when the two coincide.
            const Eigen::Vector3d source = -range * unit_vector(dir);
            const double min_dist = (geom.offsets().colwise() - source).colwise().norm().minCoeff();
            if (min_dist <= 1e-9 * geom.wavelength())
                throw RangeTooSmall("steering: source coincides with an array element");
        }

        Eigen::VectorXcd phasors(const Eigen::ArrayXd &path, double k)
        {
            Eigen::VectorXcd out(path.size());
            for (Eigen::Index u = 0; u < path.size(); ++u)
                out[u] = std::polar(1.0, -k * path[u]);
            return out;
        }
    }

    SteeringVector steering_near_field(const ArrayGeometry &geom, const Direction &dir, double range)
    {
        const auto pq = project(geom, dir);
        check_range(geom, dir, range);
        const Eigen::ArrayXd path = range + near_field_excess(pq.p, pq.q, range);
        return {phasors(path, geom.wavenumber()), ModelKind::NearField, dir, range};
    }

    SteeringVector steering_anm(const ArrayGeometry &geom, const Direction &dir, double range)
    {
        const auto pq = project(geom, dir);
        check_range(geom, dir, range);
        const Eigen::ArrayXd path = range + fresnel_excess(pq.p, pq.q, range);
        return {phasors(path, geom.wavenumber()), ModelKind::ApproxNearField, dir, range};
    }

    SteeringVector steering_far_field(const ArrayGeometry &geom, const Direction &dir)
    {
        const auto pq = project(geom, dir);
        return {phasors(pq.p, geom.wavenumber()), ModelKind::FarField, dir, std::nullopt};
    }

    SteeringVector steering(const ArrayGeometry &geom, ModelKind kind, const Direction &dir, double range)
    {
        switch (kind)
        {
        case ModelKind::NearField:
            return steering_near_field(geom, dir, range);
        case ModelKind::ApproxNearField:
            return steering_anm(geom, dir, range);
        case ModelKind::FarField:
            return steering_far_field(geom, dir);
        }
        throw InvalidArgument("steering: bad model kind");
    }

    std::complex<double> bulk_phase(const ArrayGeometry &geom, double range)
    {
        return std::polar(1.0, -geom.wavenumber() * range);
    }

    ChannelMatrix build_channel(const ArrayGeometry &geom, const SourceScene &scene, ModelKind kind)
    {
        scene.check_against(geom);
        ChannelMatrix h{Eigen::MatrixXcd(geom.size(), scene.size()), kind};
        for (Eigen::Index k = 0; k < scene.size(); ++k)
        {
            const Source &src = scene[static_cast<std::size_t>(k)];
            SteeringVector col = steering(geom, kind, src.direction, src.range);
            if (kind == ModelKind::FarField)
                col.entries *= bulk_phase(geom, src.range);
            h.entries.col(k) = col.entries;
        }
        return h;
    }
}
