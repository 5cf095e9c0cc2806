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
#ifndef NFMUSIC_FORMAT_HPP
#define NFMUSIC_FORMAT_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "nfmusic/errors.hpp"

namespace nfmusic::detail
{
    // Shortest text that reads back to the same double; integral values
    // below 1e15 are written without exponent ("3000000000", not "3e+09").
    inline std::string format_number(double v)
    {
        if (std::isnan(v))
            return "nan";
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        if (v == std::floor(v) && std::fabs(v) < 1e15)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.0f", v);
            return buf;
        }
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    }

    inline std::vector<std::string> split(std::string_view text, char sep)
    {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true)
        {
            const std::size_t pos = text.find(sep, start);
            parts.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if (pos == std::string_view::npos)
                return parts;
            start = pos + 1;
        }
    }

    // Whole-string parse; accepts "nan" and "inf". Throws InvalidArgument.
    inline double parse_double(std::string_view text)
    {
        if (text == "nan")
            return std::nan("");
        double v = 0.0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size())
            throw InvalidArgument("not a number: '" + std::string(text) + "'");
        return v;
    }
}

#endif
