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
#ifndef NFMUSIC_CHANNEL_HPP
#define NFMUSIC_CHANNEL_HPP

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <string_view>

#include "nfmusic/geometry.hpp"

namespace nfmusic
{
    enum class ModelKind
    {
        NearField,       // exact spherical wavefront
        ApproxNearField, // second-order (Fresnel / parabolic) expansion
        FarField         // plane wave, no range dependence
    };

    std::string_view to_string(ModelKind kind);
    ModelKind parse_model_kind(std::string_view text);

    // Near-field and parabolic beamformers are parameterized by range.
    constexpr bool has_range(ModelKind kind) { return kind != ModelKind::FarField; }

    template <typename Scalar>
    using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

    // Path-length kernels. With p_u = dir' * s_u and q_u = |s_u|^2 they return
    // the element path length minus the centroid range, so the full delay of
    // element u is (range + excess_u) / c.

    // Exact: |range * dir + s| - range, in the cancellation-free form.
    template <typename DerivedP, typename DerivedQ, typename Scalar>
    auto near_field_excess(const Eigen::ArrayBase<DerivedP> &p, const Eigen::ArrayBase<DerivedQ> &q, Scalar range)
    {
        const auto two_r_p = (Scalar(2) * range) * p.derived();
        return (two_r_p + q.derived()) / ((two_r_p + q.derived() + range * range).sqrt() + range);
    }

    // Fresnel: p + (q - p^2) / (2 range).
    template <typename DerivedP, typename DerivedQ, typename Scalar>
    auto fresnel_excess(const Eigen::ArrayBase<DerivedP> &p, const Eigen::ArrayBase<DerivedQ> &q, Scalar range)
    {
        return p.derived() + (q.derived() - p.derived().square()) / (Scalar(2) * range);
    }

    struct SteeringVector
    {
        Eigen::VectorXcd entries;
        ModelKind model = ModelKind::NearField;
        Direction direction;
        std::optional<double> range; // absent for FarField
    };

    // exp(-j k |range * dir + s_u|); throws RangeTooSmall when range <= 0 or
    // the source sits on an element.
    SteeringVector steering_near_field(const ArrayGeometry &geom, const Direction &dir, double range);

    // exp(-j k [range + dir's_u + (|s_u|^2 - (dir's_u)^2) / (2 range)]).
    SteeringVector steering_anm(const ArrayGeometry &geom, const Direction &dir, double range);

    // exp(-j k dir's_u).
    SteeringVector steering_far_field(const ArrayGeometry &geom, const Direction &dir);

    // Dispatches on kind; range is ignored for FarField.
    SteeringVector steering(const ArrayGeometry &geom, ModelKind kind, const Direction &dir, double range);

    // exp(-j 2 pi f_c range / c), the common centroid phase.
    std::complex<double> bulk_phase(const ArrayGeometry &geom, double range);

    struct ChannelMatrix
    {
        Eigen::MatrixXcd entries; // N_U x N_K
        ModelKind model = ModelKind::NearField;
    };

    // Column k is the steering vector of source k. Far-field columns carry
    // the bulk phase of their range so all kinds share a phase reference.
    ChannelMatrix build_channel(const ArrayGeometry &geom, const SourceScene &scene, ModelKind kind);
}

#endif
