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
#ifndef NFMUSIC_ERRORS_HPP
#define NFMUSIC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nfmusic
{
    // Base of every error thrown by the library.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class NotPerfectSquare : public Error
    {
    public:
        using Error::Error;
    };

    // Source placed at a non-positive range or on top of an array element.
    class RangeTooSmall : public Error
    {
    public:
        using Error::Error;
    };

    class NonHermitianInput : public Error
    {
    public:
        using Error::Error;
    };

    class ConvergenceFailure : public Error
    {
    public:
        using Error::Error;
    };

    class TooManySources : public Error
    {
    public:
        using Error::Error;
    };

    // The coarse pseudospectrum grid holds fewer local maxima than sources.
    class InsufficientPeaks : public Error
    {
    public:
        using Error::Error;
    };

    class InvalidArgument : public Error
    {
    public:
        using Error::Error;
    };

    class ConfigError : public Error
    {
    public:
        using Error::Error;
    };

    class IoError : public Error
    {
    public:
        using Error::Error;
    };
}

#endif
