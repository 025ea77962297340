#include "bandgapsim/linalg.hpp"

#include <lapacke.h>

#include "bandgapsim/errors.hpp"

namespace bgs {

namespace {

SymEig run_syevd(const Eigen::MatrixXd& h, char jobz) {
    if (h.rows() != h.cols()) throw DimensionMismatch("sym_eig", "matrix is not square");
    const lapack_int n = static_cast<lapack_int>(h.rows());
    SymEig out;
    out.vectors = h;
    out.values.resize(n);
    if (n == 0) return out;
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, jobz, 'L', n, out.vectors.data(), n,
                                           out.values.data());
    if (info != 0) throw ComputationError("sym_eig", "dsyevd failed with info " + std::to_string(info));
    if (jobz == 'N') out.vectors.resize(0, 0);
    return out;
}

}  // namespace

SymEig sym_eig(const Eigen::MatrixXd& h) { return run_syevd(h, 'V'); }

Eigen::VectorXd sym_eigvals(const Eigen::MatrixXd& h) { return run_syevd(h, 'N').values; }

SymEig sym_eig_rows(const Eigen::MatrixXd& h, const std::vector<Eigen::Index>& rows) {
    const char* op = "sym_eig_rows";
    if (h.rows() != h.cols()) throw DimensionMismatch(op, "matrix is not square");
    const lapack_int n = static_cast<lapack_int>(h.rows());
    for (const Eigen::Index r : rows)
        if (r < 0 || r >= n) throw InvalidArgument(op, "row index out of range");
    if (n == 0 || static_cast<lapack_int>(rows.size()) == n) {
        SymEig full = run_syevd(h, 'V');
        if (n == 0) return full;
        Eigen::MatrixXd picked(static_cast<Eigen::Index>(rows.size()), n);
        for (std::size_t k = 0; k < rows.size(); ++k) picked.row(static_cast<Eigen::Index>(k)) = full.vectors.row(rows[k]);
        full.vectors = std::move(picked);
        return full;
    }
    // h = Q T Q^T and T = S diag(w) S^T, so V(rows, :) = (Q^T e_rows)^T S
    Eigen::MatrixXd q = h;
    SymEig out;
    out.values.resize(n);
    Eigen::VectorXd off(n - 1), tau(std::max<lapack_int>(n - 1, 1));
    lapack_int info = LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', n, q.data(), n, out.values.data(), off.data(), tau.data());
    if (info != 0) throw ComputationError(op, "dsytrd failed with info " + std::to_string(info));
    Eigen::MatrixXd s(n, n);
    info = LAPACKE_dstedc(LAPACK_COL_MAJOR, 'I', n, out.values.data(), off.data(), s.data(), n);
    if (info != 0) throw ComputationError(op, "dstedc failed with info " + std::to_string(info));
    const lapack_int m = static_cast<lapack_int>(rows.size());
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, m);
    for (lapack_int k = 0; k < m; ++k) u(rows[k], k) = 1.0;
    if (m > 0) {
        info = LAPACKE_dormtr(LAPACK_COL_MAJOR, 'L', 'L', 'T', n, m, q.data(), n, tau.data(), u.data(), n);
        if (info != 0) throw ComputationError(op, "dormtr failed with info " + std::to_string(info));
    }
    out.vectors = u.transpose() * s;
    return out;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* op) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite(op, "matrix is not positive definite");
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    return 0.5 * (inv + inv.transpose());
}

}  // namespace bgs
