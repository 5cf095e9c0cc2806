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
#ifndef NFMUSIC_SUBSPACE_HPP
#define NFMUSIC_SUBSPACE_HPP

#include <Eigen/Dense>

#include "nfmusic/errors.hpp"

namespace nfmusic
{
    struct EigenDecomposition
    {
        Eigen::VectorXd eigenvalues;   // ascending
        Eigen::MatrixXcd eigenvectors; // orthonormal columns, same order
    };

    // Full decomposition of a Hermitian matrix. Inputs whose largest
    // asymmetry |R - R^H| exceeds 1e-10 * max(1, max|R|) are rejected with
    // NonHermitianInput; the rest are symmetrized before solving.
    EigenDecomposition eig_hermitian(const Eigen::MatrixXcd &r);

    // Orthonormal basis of the N_U - N_K smallest-eigenvalue eigenvectors,
    // together with its complement (the signal subspace).
    struct NoiseSubspace
    {
        Eigen::MatrixXcd basis;        // N_U x (N_U - N_K)
        Eigen::MatrixXcd signal_basis; // N_U x N_K
        Eigen::Index n_sources_assumed = 0;

        Eigen::Index dimension() const { return basis.rows(); }
    };

    NoiseSubspace noise_subspace(const EigenDecomposition &dec, Eigen::Index n_sources);

    // Covariance -> eigendecomposition -> noise subspace.
    inline NoiseSubspace noise_subspace(const Eigen::MatrixXcd &covariance, Eigen::Index n_sources)
    {
        return noise_subspace(eig_hermitian(covariance), n_sources);
    }
}

#endif
