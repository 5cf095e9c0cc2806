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
#include "nfmusic/subspace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <string>

namespace nfmusic
{
    EigenDecomposition eig_hermitian(const Eigen::MatrixXcd &r)
    {
        if (r.rows() != r.cols() || r.rows() == 0)
            throw InvalidArgument("eig_hermitian: matrix must be square and non-empty");
        if (!r.allFinite())
            throw InvalidArgument("eig_hermitian: non-finite entries");

        const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
        const double asym = (r - r.adjoint()).cwiseAbs().maxCoeff();
        if (asym > 1e-10 * scale)
            throw NonHermitianInput("eig_hermitian: asymmetry " + std::to_string(asym) + " exceeds tolerance");

        const Eigen::MatrixXcd sym = 0.5 * (r + r.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym, Eigen::ComputeEigenvectors);
        if (solver.info() != Eigen::Success)
            throw ConvergenceFailure("eig_hermitian: QR iteration did not converge");

        return {solver.eigenvalues(), solver.eigenvectors()};
    }

    NoiseSubspace noise_subspace(const EigenDecomposition &dec, Eigen::Index n_sources)
    {
        const Eigen::Index n = dec.eigenvectors.cols();
        if (n_sources >= n)
            throw TooManySources("noise_subspace: " + std::to_string(n_sources) + " sources leave no noise subspace in dimension " +
                                 std::to_string(n));
        if (n_sources < 1)
            throw InvalidArgument("noise_subspace: at least one source required");

        NoiseSubspace ns;
        ns.basis = dec.eigenvectors.leftCols(n - n_sources);
        ns.signal_basis = dec.eigenvectors.rightCols(n_sources);
        ns.n_sources_assumed = n_sources;
        return ns;
    }
}
