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
#include "nfmusic/signal_sim.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "nfmusic/rng.hpp"

namespace nfmusic
{
    double SimConfig::noise_power() const
    {
        if (noiseless || snr_db == std::numeric_limits<double>::infinity())
            return 0.0;
        return std::pow(10.0, -snr_db / 10.0);
    }

    void SimConfig::validate() const
    {
        if (n_snapshots < 1)
            throw InvalidArgument("SimConfig: n_snapshots must be positive");
        if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
            throw InvalidArgument("SimConfig: snr_db must be a number");
    }

    SnapshotBlock generate(const ArrayGeometry &geom, const SourceScene &scene, ModelKind kind, const SimConfig &cfg)
    {
        cfg.validate();
        const ChannelMatrix h = build_channel(geom, scene, kind);
        const Eigen::Index n_u = geom.size();
        const Eigen::Index n_k = scene.size();
        const Eigen::Index t = cfg.n_snapshots;

        ComplexGaussian symbols(cfg.seed, Stream::Symbols);
        Eigen::MatrixXcd x(n_k, t);
        for (Eigen::Index col = 0; col < t; ++col)
            for (Eigen::Index k = 0; k < n_k; ++k)
                x(k, col) = symbols(1.0);

        SnapshotBlock block;
        block.clean = h.entries * x;
        block.noise_power = cfg.noise_power();
        block.channel_kind = kind;
        block.seed = cfg.seed;
        block.snr_db = cfg.snr_db;

        block.y = block.clean;
        if (block.noise_power > 0.0)
        {
            ComplexGaussian noise(cfg.seed, Stream::Noise);
            for (Eigen::Index col = 0; col < t; ++col)
                for (Eigen::Index u = 0; u < n_u; ++u)
                    block.y(u, col) += noise(block.noise_power);
        }
        return block;
    }

    namespace
    {
        constexpr std::array<char, 8> dump_magic{'N', 'F', 'M', 'S', 'N', 'A', 'P', '1'};

        template <typename T>
        void put_le(std::ostream &os, T value)
        {
            static_assert(std::is_trivially_copyable_v<T>);
            std::array<unsigned char, sizeof(T)> bytes;
            std::memcpy(bytes.data(), &value, sizeof(T));
            if constexpr (std::endian::native == std::endian::big)
                std::reverse(bytes.begin(), bytes.end());
            os.write(reinterpret_cast<const char *>(bytes.data()), sizeof(T));
        }

        template <typename T>
        T get_le(std::istream &is)
        {
            std::array<unsigned char, sizeof(T)> bytes;
            is.read(reinterpret_cast<char *>(bytes.data()), sizeof(T));
            if constexpr (std::endian::native == std::endian::big)
                std::reverse(bytes.begin(), bytes.end());
            T value;
            std::memcpy(&value, bytes.data(), sizeof(T));
            return value;
        }

        std::uint32_t kind_code(ModelKind kind) { return static_cast<std::uint32_t>(kind); }
    }

    void write_snapshot_dump(const std::filesystem::path &path, const SnapshotBlock &block)
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os)
            throw IoError("cannot open '" + path.string() + "' for writing");

        os.write(dump_magic.data(), dump_magic.size());
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(block.y.rows()));
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(block.y.cols()));
        put_le<std::uint32_t>(os, kind_code(block.channel_kind));
        put_le<std::uint64_t>(os, block.seed);
        put_le<double>(os, block.snr_db);
        for (Eigen::Index t = 0; t < block.y.cols(); ++t)
            for (Eigen::Index u = 0; u < block.y.rows(); ++u)
            {
                put_le<float>(os, static_cast<float>(block.y(u, t).real()));
                put_le<float>(os, static_cast<float>(block.y(u, t).imag()));
            }
        if (!os)
            throw IoError("write to '" + path.string() + "' failed");
    }

    SnapshotBlock read_snapshot_dump(const std::filesystem::path &path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw IoError("cannot open '" + path.string() + "'");

        std::array<char, 8> magic{};
        is.read(magic.data(), magic.size());
        if (!is || magic != dump_magic)
            throw IoError("'" + path.string() + "' is not a snapshot dump");

        const auto n_u = get_le<std::uint32_t>(is);
        const auto t = get_le<std::uint32_t>(is);
        const auto kind = get_le<std::uint32_t>(is);
        SnapshotBlock block;
        block.seed = get_le<std::uint64_t>(is);
        block.snr_db = get_le<double>(is);
        if (!is || kind > 2)
            throw IoError("'" + path.string() + "' has a corrupt header");
        block.channel_kind = static_cast<ModelKind>(kind);

        // Refuse headers that promise more samples than the file holds.
        const std::streamoff payload_start = is.tellg();
        is.seekg(0, std::ios::end);
        const std::streamoff payload = is.tellg() - payload_start;
        is.seekg(payload_start);
        if (static_cast<std::uint64_t>(n_u) * t * 8u > static_cast<std::uint64_t>(payload))
            throw IoError("'" + path.string() + "' is truncated");

        block.y.resize(n_u, t);
        for (std::uint32_t col = 0; col < t; ++col)
            for (std::uint32_t u = 0; u < n_u; ++u)
            {
                const float re = get_le<float>(is);
                const float im = get_le<float>(is);
                block.y(u, col) = {re, im};
            }
        if (!is)
            throw IoError("'" + path.string() + "' is truncated");
        return block;
    }
}
