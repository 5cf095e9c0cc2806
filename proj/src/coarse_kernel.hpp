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
#ifndef NFMUSIC_COARSE_KERNEL_HPP
#define NFMUSIC_COARSE_KERNEL_HPP

#include <Eigen/Dense>

#include <cmath>

#include "nfmusic/music.hpp"

namespace nfmusic::detail
{
    // Single-precision sin and cos sharing one Cody-Waite reduction.
    // Absolute error below 1e-7 for |x| < 8192; the loop is branch-free so
    // it auto-vectorizes.
    inline void sincos_block(const float *__restrict x, float *__restrict s, float *__restrict c, Eigen::Index n)
    {
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const float v = x[i];
            const float y = std::nearbyint(v * 0.63661977236758134f);
            const int quadrant = static_cast<int>(y);
            float r = v - y * 1.5703125f;
            r = r - y * 4.837512969970703125e-4f;
            r = r - y * 7.549789948768648e-8f;
            const float z = r * r;
            const float sp = ((-1.9515295891e-4f * z + 8.3321608736e-3f) * z - 1.6666654611e-1f) * z * r + r;
            const float cp = ((2.443315711809948e-5f * z - 1.388731625493765e-3f) * z + 4.166664568298827e-2f) * z * z - 0.5f * z + 1.0f;
            const bool swap = quadrant & 1;
            const float ss = swap ? cp : sp;
            const float cc = swap ? sp : cp;
            s[i] = (quadrant & 2) ? -ss : ss;
            c[i] = ((quadrant + 1) & 2) ? -cc : cc;
        }
    }

    // Pseudospectrum of M candidates at once. Candidate m has steering
    // entries exp(-j k path(m, u)); the caller supplies path one element u
    // at a time as a length-M column. Work is vectorized across candidates.
    // Phases and partial sums are single precision, flushed into double
    // accumulators every few elements, so values near a sharp peak are
    // approximate; the refinement stage re-evaluates in double.
    class CoarseKernel
    {
    public:
        CoarseKernel(const NoiseSubspace &ns, double wavenumber) : wavenumber_(static_cast<float>(wavenumber))
        {
            signal_route_ = ns.signal_basis.cols() < ns.basis.cols();
            const Eigen::MatrixXcd &b = signal_route_ ? ns.signal_basis : ns.basis;
            basis_re_ = b.real().cast<float>();
            basis_im_ = b.imag().cast<float>();
        }

        template <typename FillPath>
        void evaluate(Eigen::Index m, FillPath &&fill_path, double *out)
        {
            const Eigen::Index n_u = basis_re_.rows();
            const Eigen::Index n_b = basis_re_.cols();
            path_.resize(m);
            sin_.resize(m);
            cos_.resize(m);
            part_re_.setZero(m, n_b);
            part_im_.setZero(m, n_b);
            part_norm_.setZero(m);
            acc_re_.setZero(m, n_b);
            acc_im_.setZero(m, n_b);
            acc_norm_.setZero(m);

            constexpr Eigen::Index flush_every = 16;
            const float k = wavenumber_;
            for (Eigen::Index u = 0; u < n_u; ++u)
            {
                fill_path(u, path_);
                float *__restrict ph = path_.data();
                float *__restrict sn = sin_.data();
                float *__restrict cs = cos_.data();
                float *__restrict nrm = part_norm_.data();
                for (Eigen::Index j = 0; j < m; ++j)
                    ph[j] *= k;
                sincos_block(ph, sn, cs, m);
                for (Eigen::Index j = 0; j < m; ++j)
                    nrm[j] += cs[j] * cs[j] + sn[j] * sn[j];

                // conj(b) (c - j s) = (br c - bi s) - j (br s + bi c)
                for (Eigen::Index i = 0; i < n_b; ++i)
                {
                    const float br = basis_re_(u, i);
                    const float bi = basis_im_(u, i);
                    float *__restrict re = part_re_.col(i).data();
                    float *__restrict im = part_im_.col(i).data();
                    for (Eigen::Index j = 0; j < m; ++j)
                    {
                        re[j] += br * cs[j] - bi * sn[j];
                        im[j] += br * sn[j] + bi * cs[j];
                    }
                }

                if ((u + 1) % flush_every == 0 || u + 1 == n_u)
                {
                    acc_re_ += part_re_.cast<double>();
                    acc_im_ += part_im_.cast<double>();
                    acc_norm_ += part_norm_.cast<double>();
                    part_re_.setZero();
                    part_im_.setZero();
                    part_norm_.setZero();
                }
            }

            for (Eigen::Index j = 0; j < m; ++j)
            {
                const double norm_sq = acc_norm_[j];
                const double proj_sq = acc_re_.row(j).square().sum() + acc_im_.row(j).square().sum();
                const double residual = signal_route_ ? norm_sq - proj_sq : proj_sq;
                out[j] = residual >= pseudospectrum_floor * norm_sq ? norm_sq / residual : pseudospectrum_cap;
            }
        }

    private:
        float wavenumber_;
        bool signal_route_ = false;
        Eigen::MatrixXf basis_re_, basis_im_;
        Eigen::ArrayXf path_, sin_, cos_, part_norm_;
        Eigen::ArrayXXf part_re_, part_im_;
        Eigen::ArrayXXd acc_re_, acc_im_;
        Eigen::ArrayXd acc_norm_;
    };
}

#endif
