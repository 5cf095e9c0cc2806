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
#ifndef NFMUSIC_RNG_HPP
#define NFMUSIC_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace nfmusic
{
    // SplitMix64 finalizer, used to derive independent seeds.
    constexpr std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // 64-bit FNV-1a.
    constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
    {
        for (const char c : bytes)
        {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    // Substream identifiers of a snapshot block.
    enum class Stream : std::uint64_t
    {
        Symbols = 1,
        Noise = 2
    };

    // Circularly-symmetric complex Gaussian generator on top of mt19937_64.
    // The engine output is fully specified by the standard, and the uniform
    // and Box-Muller transforms are done here (not by std distributions) so
    // draws are identical across standard library implementations. Substream
    // s of seed x is seeded with splitmix64(x ^ splitmix64(s)).
    class ComplexGaussian
    {
    public:
        ComplexGaussian(std::uint64_t seed, Stream stream)
            : engine_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))))
        {
        }

        // Uniform on [0, 1) with 53 random bits.
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        // CN(0, variance): real and imaginary parts each N(0, variance / 2).
        std::complex<double> operator()(double variance = 1.0)
        {
            const double u1 = 1.0 - uniform(); // (0, 1]
            const double u2 = uniform();
            const double radius = std::sqrt(-variance * std::log(u1));
            const double angle = 2.0 * 3.14159265358979323846 * u2;
            return {radius * std::cos(angle), radius * std::sin(angle)};
        }

    private:
        std::mt19937_64 engine_;
    };
}

#endif
