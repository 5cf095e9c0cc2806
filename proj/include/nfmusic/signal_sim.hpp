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
#ifndef NFMUSIC_SIGNAL_SIM_HPP
#define NFMUSIC_SIGNAL_SIM_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>

#include "nfmusic/channel.hpp"

namespace nfmusic
{
    enum class SymbolScheme
    {
        GaussianUnitPower
    };

    struct SimConfig
    {
        int n_snapshots = 1280;
        // Per-antenna, per-source receive SNR under unit path gains: 1 / N0.
        double snr_db = 30.0;
        std::uint64_t seed = 0;
        // Forces N0 = 0 (same as snr_db = +inf).
        bool noiseless = false;
        SymbolScheme symbols = SymbolScheme::GaussianUnitPower;

        double noise_power() const;
        void validate() const;
    };

    // Sample covariance needs at least N_U snapshots to be full rank.
    inline bool well_conditioned(const SimConfig &cfg, Eigen::Index n_elements)
    {
        return cfg.n_snapshots >= n_elements;
    }

    struct SnapshotBlock
    {
        Eigen::MatrixXcd y;     // N_U x T received snapshots
        Eigen::MatrixXcd clean; // N_U x T noise-free part H X
        double noise_power = 0.0;
        ModelKind channel_kind = ModelKind::NearField;
        std::uint64_t seed = 0;
        double snr_db = 0.0;
    };

    // Y = H X + N with X ~ CN(0, 1) i.i.d. per source and snapshot and
    // N ~ CN(0, N0) i.i.d. per entry. X and N come from separate substreams of
    // cfg.seed, so equal inputs give a bit-identical block.
    SnapshotBlock generate(const ArrayGeometry &geom, const SourceScene &scene, ModelKind kind, const SimConfig &cfg);

    // (1/T) Y Y^H.
    template <typename Derived>
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
    sample_covariance(const Eigen::MatrixBase<Derived> &y)
    {
        using Scalar = typename Derived::Scalar;
        using Real = typename Eigen::NumTraits<Scalar>::Real;
        using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
        const Eigen::Index n = y.rows();
        Matrix r = Matrix::Zero(n, n);
        if (y.cols() == 0)
            return r;
        r.template selfadjointView<Eigen::Lower>().rankUpdate(y.derived(), Real(1) / Real(y.cols()));
        r.template triangularView<Eigen::StrictlyUpper>() = r.adjoint();
        return r;
    }

    inline Eigen::MatrixXcd sample_covariance(const SnapshotBlock &block)
    {
        return sample_covariance(block.y);
    }

    // Binary snapshot dump, little endian:
    //   char[8]  magic "NFMSNAP1"
    //   uint32   N_U, T, kind (0 NF, 1 ANM, 2 FF)
    //   uint64   seed
    //   float64  snr_db
    //   T x N_U  complex64 (float32 re, float32 im), snapshot-major
    void write_snapshot_dump(const std::filesystem::path &path, const SnapshotBlock &block);

    // Reads a dump; only y, channel_kind, seed and snr_db are restored and y
    // carries complex64 precision.
    SnapshotBlock read_snapshot_dump(const std::filesystem::path &path);
}

#endif
