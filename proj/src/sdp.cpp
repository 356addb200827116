#include "workcost/sdp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "workcost/errors.hpp"

namespace workcost::sdp {

const char* status_name(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::MaxIter: return "max_iter";
        case Status::InfeasiblePrimal: return "infeasible_primal";
        case Status::InfeasibleDual: return "infeasible_dual";
        case Status::Numerical: return "numerical";
    }
    return "unknown";
}

namespace {

using RMat = Eigen::MatrixXd;

struct StdProblem {
    std::vector<int> dims;                          // block dims, slacks appended
    std::vector<Mat> C;                             // dense objective per block
    std::vector<std::vector<std::pair<int, Mat>>> A; // per constraint: (block, coeff)
    Eigen::VectorXd b;
    double sign = 1.0;       // +1 minimize, -1 original was maximize
    int n_orig_blocks = 0;   // blocks present in the caller's problem
    std::vector<int> row_of; // constraint index -> standard-form row (-1 if dropped)
};

// Symmetrize to kill round-off drift.
Mat herm(const Mat& A) { return 0.5 * (A + A.adjoint()); }

StdProblem standardize(const Problem& p, double feas_tol) {
    StdProblem sp;
    sp.dims = p.block_dims;
    sp.n_orig_blocks = static_cast<int>(p.block_dims.size());
    sp.sign = (p.direction == Direction::Maximize) ? -1.0 : 1.0;

    for (int d : sp.dims)
        if (d < 1) throw PreconditionError("sdp: block dimension must be >= 1");

    std::vector<Mat> C(sp.dims.size());
    for (std::size_t b = 0; b < sp.dims.size(); ++b) C[b] = Mat::Zero(sp.dims[b], sp.dims[b]);
    for (const auto& t : p.objective) {
        if (t.block < 0 || t.block >= sp.n_orig_blocks)
            throw PreconditionError("sdp: objective term references an unknown block");
        require_hermitian(t.coeff, "sdp objective");
        C[t.block] += sp.sign * t.coeff;
    }

    std::vector<double> b_rows;
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
        const auto& c = p.constraints[i];
        std::vector<std::pair<int, Mat>> terms;
        double norm = 0.0;
        for (const auto& t : c.terms) {
            if (t.block < 0 || t.block >= sp.n_orig_blocks)
                throw PreconditionError("sdp: constraint term references an unknown block");
            require_hermitian(t.coeff, "sdp constraint");
            norm = std::max(norm, t.coeff.cwiseAbs().maxCoeff());
            terms.emplace_back(t.block, t.coeff);
        }
        if (norm <= 1e-13) {
            // Identically-zero row: consistent only with (near-)zero rhs.
            if (std::abs(c.rhs) > feas_tol)
                throw PreconditionError("sdp: constraint with zero coefficients and nonzero rhs");
            sp.row_of.push_back(-1);
            continue;
        }
        if (c.sense == Sense::LessEqual) {
            const int slack = static_cast<int>(sp.dims.size());
            sp.dims.push_back(1);
            C.push_back(Mat::Zero(1, 1));
            terms.emplace_back(slack, Mat::Identity(1, 1));
        }
        sp.row_of.push_back(static_cast<int>(b_rows.size()));
        sp.A.push_back(std::move(terms));
        b_rows.push_back(c.rhs);
    }
    sp.C = std::move(C);
    sp.b = Eigen::Map<Eigen::VectorXd>(b_rows.data(), static_cast<int>(b_rows.size()));
    return sp;
}

double dot_blocks(const std::vector<Mat>& A, const std::vector<Mat>& B) {
    double acc = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) acc += hs_inner(A[i], B[i]);
    return acc;
}

// Largest step alpha <= 1 with X + alpha dX staying PSD.
double step_length(const Mat& X, const Mat& dX) {
    const auto ex = eig_hermitian(X);
    const int n = static_cast<int>(X.rows());
    const double floor_val = std::max(ex.eigenvalues(n - 1), 1e-14 * std::max(1.0, ex.eigenvalues(0)));
    RVec inv_sqrt(n);
    for (int k = 0; k < n; ++k) inv_sqrt(k) = 1.0 / std::sqrt(std::max(ex.eigenvalues(k), floor_val));
    const Mat Xih = ex.eigenvectors * inv_sqrt.asDiagonal() * ex.eigenvectors.adjoint();
    const Mat M = herm(Xih * dX * Xih);
    const double lmin = min_eigenvalue(M);
    if (lmin >= 0.0) return 1.0;
    return std::min(1.0, 1.0 / (-lmin));
}

struct Scaling {
    Mat G, Ginv;     // W = G G
    Mat lam_U;       // eigenvectors of lambda = G S G
    RVec lam;        // eigenvalues of lambda (also of G^{-1} X G^{-1})
};

Scaling nt_scaling(const Mat& X, const Mat& S) {
    const int n = static_cast<int>(X.rows());
    const auto ex = eig_hermitian(X);
    const double xfloor = 1e-14 * std::max(1.0, std::abs(ex.eigenvalues(0)));
    RVec sq(n);
    for (int k = 0; k < n; ++k) sq(k) = std::sqrt(std::max(ex.eigenvalues(k), xfloor));
    const Mat Xh = ex.eigenvectors * sq.asDiagonal() * ex.eigenvectors.adjoint();

    const auto em = eig_hermitian(herm(Xh * S * Xh));
    const double mfloor = 1e-14 * std::max(1.0, std::abs(em.eigenvalues(0)));
    RVec mq(n);
    for (int k = 0; k < n; ++k) mq(k) = 1.0 / std::sqrt(std::sqrt(std::max(em.eigenvalues(k), mfloor)));
    // W = Xh (Xh S Xh)^{-1/2} Xh ; G = W^{1/2} computed via its own eig.
    const Mat Mq = em.eigenvectors * mq.asDiagonal() * em.eigenvectors.adjoint(); // (XhSXh)^{-1/4}
    const Mat W = herm(Xh * Mq * Mq * Xh);

    Scaling sc;
    const auto ew = eig_hermitian(W);
    const double wfloor = 1e-14 * std::max(1.0, std::abs(ew.eigenvalues(0)));
    RVec wq(n), wiq(n);
    for (int k = 0; k < n; ++k) {
        const double lam = std::max(ew.eigenvalues(k), wfloor);
        wq(k) = std::sqrt(lam);
        wiq(k) = 1.0 / wq(k);
    }
    sc.G = ew.eigenvectors * wq.asDiagonal() * ew.eigenvectors.adjoint();
    sc.Ginv = ew.eigenvectors * wiq.asDiagonal() * ew.eigenvectors.adjoint();

    const auto el = eig_hermitian(herm(sc.G * S * sc.G));
    sc.lam_U = el.eigenvectors;
    sc.lam = el.eigenvalues;
    return sc;
}

} // namespace

Solution solve(const Problem& p, const Options& opts) {
    const StdProblem sp = standardize(p, opts.feas_tol);
    const int nb = static_cast<int>(sp.dims.size());
    const int m = static_cast<int>(sp.b.size());
    int N = 0;
    for (int d : sp.dims) N += d;

    // Constraint terms grouped by block for Schur-complement assembly.
    std::vector<std::vector<std::pair<int, const Mat*>>> by_block(nb);
    for (int i = 0; i < m; ++i)
        for (const auto& [blk, coeff] : sp.A[i]) by_block[blk].emplace_back(i, &coeff);

    double cmax = 0.0;
    for (const auto& C : sp.C)
        if (C.size()) cmax = std::max(cmax, C.cwiseAbs().maxCoeff());
    const double tau = 1.0 + cmax;

    std::vector<Mat> X(nb), S(nb);
    for (int b = 0; b < nb; ++b) {
        X[b] = tau * Mat::Identity(sp.dims[b], sp.dims[b]);
        S[b] = X[b];
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

    const double bmax = m ? sp.b.cwiseAbs().maxCoeff() : 0.0;

    auto apply_A = [&](const std::vector<Mat>& Z) {
        Eigen::VectorXd out(m);
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (const auto& [blk, coeff] : sp.A[i]) acc += hs_inner(coeff, Z[blk]);
            out(i) = acc;
        }
        return out;
    };
    auto apply_At = [&](const Eigen::VectorXd& v) {
        std::vector<Mat> out(nb);
        for (int b = 0; b < nb; ++b) out[b] = Mat::Zero(sp.dims[b], sp.dims[b]);
        for (int i = 0; i < m; ++i)
            for (const auto& [blk, coeff] : sp.A[i]) out[blk] += v(i) * coeff;
        return out;
    };

    Solution best;
    double best_score = std::numeric_limits<double>::infinity();
    int consecutive_tiny_steps = 0;

    Solution sol;
    sol.status = Status::MaxIter;

    auto record = [&](Status status, int iter, double pobj, double dobj, double relgap) {
        sol.X = X;
        sol.S = S;
        sol.y = Eigen::VectorXd::Zero(sp.row_of.size());
        for (std::size_t i = 0; i < sp.row_of.size(); ++i)
            if (sp.row_of[i] >= 0) sol.y(i) = y(sp.row_of[i]);
        // Trim internal slack blocks from the reported solution.
        sol.X.resize(sp.n_orig_blocks);
        sol.S.resize(sp.n_orig_blocks);
        sol.primal_obj = sp.sign * pobj;
        sol.dual_obj = sp.sign * dobj;
        if (sp.sign < 0) sol.y = -sol.y;
        sol.gap = relgap;
        sol.status = status;
        sol.iterations = iter;
    };

    for (int iter = 0; iter <= opts.max_iter; ++iter) {
        const double pobj = dot_blocks(sp.C, X);
        const double dobj = m ? sp.b.dot(y) : 0.0;

        Eigen::VectorXd rp = sp.b - apply_A(X);
        std::vector<Mat> Aty = apply_At(y);
        std::vector<Mat> rd(nb);
        double dinf = 0.0;
        for (int b = 0; b < nb; ++b) {
            rd[b] = sp.C[b] - S[b] - Aty[b];
            if (rd[b].size()) dinf = std::max(dinf, rd[b].cwiseAbs().maxCoeff());
        }
        const double pinf = m ? rp.cwiseAbs().maxCoeff() : 0.0;
        const double pfeas = pinf / (1.0 + bmax);
        const double dfeas = dinf / (1.0 + cmax);
        const double scale = 1.0 + std::max(std::abs(pobj), std::abs(dobj));
        // Near degenerate optima the multipliers can blow up and corrupt the
        // objective difference; complementarity <X,S> measures the same gap
        // without that noise, so use whichever is smaller.
        const double relgap =
            std::min(std::abs(pobj - dobj), std::abs(dot_blocks(X, S))) / scale;

        if (std::getenv("WORKCOST_SDP_TRACE"))
            std::fprintf(stderr,
                         "it=%3d pobj=%+.10e dobj=%+.10e relgap=%.2e compl=%.2e pfeas=%.2e dfeas=%.2e\n",
                         iter, pobj, dobj, std::abs(pobj - dobj) / scale,
                         dot_blocks(X, S) / scale, pfeas, dfeas);
#ifndef NDEBUG
        {
            // Exact iterate identity: the objective gap decomposes into
            // complementarity plus infeasibility cross terms, so weak duality
            // holds up to the residuals at every iteration.
            double idres = (pobj - dobj) - dot_blocks(X, S) + (m ? y.dot(rp) : 0.0);
            for (int b = 0; b < nb; ++b) idres -= hs_inner(rd[b], X[b]);
            assert(std::abs(idres) <= 1e-6 * scale * (1.0 + dot_blocks(X, S)));
        }
#endif
        const double score = std::max({relgap, pfeas, dfeas});
        if (score < best_score) {
            best_score = score;
            record(sol.status, iter, pobj, dobj, relgap);
            best = sol;
        } else if (best_score < 1e-5 && score > 100.0 * best_score) {
            // Ill-conditioning has started to push the iterates away from the
            // converged point; the recorded best iterate is the answer.
            best.status = Status::Numerical;
            return best;
        }

        if (relgap <= opts.gap_tol && pfeas <= opts.feas_tol && dfeas <= opts.feas_tol) {
            record(Status::Optimal, iter, pobj, dobj, relgap);
            return sol;
        }

        // Infeasibility certificates (normalized).
        if (m) {
            const double ynorm = y.cwiseAbs().maxCoeff();
            if (ynorm > 1e-10 && sp.b.dot(y) > 0.0) {
                double res = 0.0;
                for (int b = 0; b < nb; ++b) {
                    const Mat r = Aty[b] + S[b];
                    if (r.size()) res = std::max(res, r.cwiseAbs().maxCoeff());
                }
                if (res <= 1e-9 * sp.b.dot(y)) {
                    record(Status::InfeasiblePrimal, iter, pobj, dobj, relgap);
                    return sol;
                }
            }
        }
        {
            double xnorm = 0.0;
            for (const auto& Xb : X) xnorm = std::max(xnorm, Xb.cwiseAbs().maxCoeff());
            if (xnorm > 1e8) {
                const double cx = dot_blocks(sp.C, X);
                const Eigen::VectorXd ax = apply_A(X);
                const double anorm = m ? ax.cwiseAbs().maxCoeff() : 0.0;
                if (cx < 0.0 && anorm <= 1e-7 * (-cx)) {
                    record(Status::InfeasibleDual, iter, pobj, dobj, relgap);
                    return sol;
                }
            }
        }

        if (iter == opts.max_iter) break;

        const double mu = dot_blocks(X, S) / N;
        double xnorm_now = 0.0;
        for (const auto& Xb : X) xnorm_now = std::max(xnorm_now, Xb.cwiseAbs().maxCoeff());
        if (!std::isfinite(mu) || xnorm_now > 1e12 * tau) {
            best.status = Status::Numerical;
            return best;
        }

        // NT scaling per block.
        std::vector<Scaling> sc(nb);
        for (int b = 0; b < nb; ++b) sc[b] = nt_scaling(X[b], S[b]);

        // Schur complement M_ij = sum_b <A_i, W A_j W>.
        std::vector<std::vector<Mat>> WAW(nb);
        for (int b = 0; b < nb; ++b) {
            WAW[b].resize(by_block[b].size());
            for (std::size_t k = 0; k < by_block[b].size(); ++k) {
                const Mat& Ak = *by_block[b][k].second;
                WAW[b][k] = herm(sc[b].G * (sc[b].G * Ak * sc[b].G) * sc[b].G);
            }
        }
        RMat M = RMat::Zero(m, m);
        for (int b = 0; b < nb; ++b) {
            const auto& lst = by_block[b];
            for (std::size_t k = 0; k < lst.size(); ++k) {
                for (std::size_t l = k; l < lst.size(); ++l) {
                    const double v = hs_inner(*lst[k].second, WAW[b][l]);
                    M(lst[k].first, lst[l].first) += v;
                    if (lst[k].first != lst[l].first) M(lst[l].first, lst[k].first) += v;
                }
            }
        }

        Eigen::LDLT<RMat> ldlt;
        bool factored = (m == 0);
        double ridge = 0.0;
        while (!factored) {
            RMat Mr = M;
            if (ridge > 0.0) Mr += ridge * RMat::Identity(m, m);
            ldlt.compute(Mr);
            factored = (ldlt.info() == Eigen::Success && ldlt.isPositive());
            if (factored) break;
            ridge = (ridge == 0.0) ? 1e-14 : ridge * 100.0;
            if (ridge > 1e-6) break;
        }
        if (!factored && m > 0) {
            best.status = Status::Numerical;
            return best;
        }

        auto solve_direction = [&](const std::vector<Mat>& Rc)
            -> std::tuple<std::vector<Mat>, Eigen::VectorXd, std::vector<Mat>> {
            // M dy = rp - A(Rc) + A(W rd W)
            std::vector<Mat> WrdW(nb);
            for (int b = 0; b < nb; ++b)
                WrdW[b] = herm(sc[b].G * (sc[b].G * rd[b] * sc[b].G) * sc[b].G);
            Eigen::VectorXd rhs = rp - apply_A(Rc) + apply_A(WrdW);
            Eigen::VectorXd dy;
            if (m) {
                dy = ldlt.solve(rhs);
                // Two rounds of iterative refinement recover digits lost to
                // the ill-conditioned Schur complement near the optimum.
                for (int r = 0; r < 2; ++r) dy += ldlt.solve(rhs - M * dy);
            }
            std::vector<Mat> Atdy = apply_At(dy);
            std::vector<Mat> dS(nb), dX(nb);
            for (int b = 0; b < nb; ++b) {
                dS[b] = herm(rd[b] - Atdy[b]);
                dX[b] = herm(Rc[b] - sc[b].G * (sc[b].G * dS[b] * sc[b].G) * sc[b].G);
            }
            return {dX, dy, dS};
        };

        auto finite = [](const std::vector<Mat>& Z) {
            for (const auto& z : Z)
                if (!z.allFinite()) return false;
            return true;
        };

        // Predictor (affine scaling direction): Rc = -X.
        std::vector<Mat> Rc(nb);
        for (int b = 0; b < nb; ++b) Rc[b] = -X[b];
        auto [dXa, dya, dSa] = solve_direction(Rc);
        if (!finite(dXa) || !finite(dSa)) {
            best.status = Status::Numerical;
            return best;
        }

        double ap = 1.0, ad = 1.0;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, step_length(X[b], dXa[b]));
            ad = std::min(ad, step_length(S[b], dSa[b]));
        }
        double mu_aff = 0.0;
        for (int b = 0; b < nb; ++b)
            mu_aff += hs_inner(X[b] + ap * dXa[b], S[b] + ad * dSa[b]);
        mu_aff = std::max(mu_aff / N, 0.0);
        const double sigma = std::clamp(std::pow(mu_aff / std::max(mu, 1e-300), 3.0), 1e-8, 1.0);

        // Corrector: scaled-space target sigma*mu*I - lam^2 - sym(dX' dS'),
        // mapped back through a Lyapunov solve in lambda's eigenbasis.
        for (int b = 0; b < nb; ++b) {
            const Mat dXp = sc[b].Ginv * dXa[b] * sc[b].Ginv;
            const Mat dSp = sc[b].G * dSa[b] * sc[b].G;
            const Mat cross = herm(dXp * dSp);
            const int n = sp.dims[b];
            Mat target = -cross;
            for (int k = 0; k < n; ++k) target(k, k) += sigma * mu;
            // Subtract lam^2 in the eigenbasis, then divide by (l_i + l_j)/2.
            Mat T = sc[b].lam_U.adjoint() * target * sc[b].lam_U;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    cplx tv = T(i, j);
                    if (i == j) tv -= sc[b].lam(i) * sc[b].lam(i);
                    T(i, j) = 2.0 * tv / std::max(sc[b].lam(i) + sc[b].lam(j), 1e-300);
                }
            const Mat K = sc[b].lam_U * T * sc[b].lam_U.adjoint();
            Rc[b] = herm(sc[b].G * K * sc[b].G);
        }
        auto [dX, dy, dS] = solve_direction(Rc);
        if (!finite(dX) || !finite(dS)) {
            best.status = Status::Numerical;
            return best;
        }

        ap = 1.0;
        ad = 1.0;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, step_length(X[b], dX[b]));
            ad = std::min(ad, step_length(S[b], dS[b]));
        }
        const double eta = 0.98;
        ap = std::min(1.0, eta * ap);
        ad = std::min(1.0, eta * ad);

        // The clamped square roots inside step_length can miss near-null
        // directions at degenerate optima; near convergence, back off until
        // the new iterates are verifiably positive semidefinite.
        if (mu < 1e-4) {
            auto acceptable = [&](const std::vector<Mat>& Z, const std::vector<Mat>& dZ, double a) {
                for (int b = 0; b < nb; ++b)
                    if (min_eigenvalue(herm(Z[b] + a * dZ[b])) < 0.0) return false;
                return true;
            };
            for (int back = 0; back < 20 && !acceptable(X, dX, ap); ++back) ap *= 0.8;
            for (int back = 0; back < 20 && !acceptable(S, dS, ad); ++back) ad *= 0.8;
        }

        for (int b = 0; b < nb; ++b) {
            X[b] = herm(X[b] + ap * dX[b]);
            S[b] = herm(S[b] + ad * dS[b]);
        }
        if (m) y += ad * dy;

        if (ap < 1e-7 && ad < 1e-7) {
            if (++consecutive_tiny_steps >= 3) {
                best.status = Status::Numerical;
                return best;
            }
        } else {
            consecutive_tiny_steps = 0;
        }
    }

    best.status = (best_score <= 1e-6) ? Status::Numerical : Status::MaxIter;
    return best;
}

int fidelity_constraint_block(Problem& p, int rho_hat_block, const Mat& rho_fixed,
                              double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw PreconditionError("fidelity_constraint_block: threshold must be in [0, 1]");
    require_hermitian(rho_fixed, "fidelity_constraint_block");
    const int d = static_cast<int>(rho_fixed.rows());
    if (p.block_dims.at(rho_hat_block) != d)
        throw PreconditionError("fidelity_constraint_block: block dimension mismatch");

    const int g = p.add_block(2 * d);

    // Tie G_{11} to the variable block and G_{22} to the fixed state.
    for_each_hermitian_basis(d, [&](const Mat& E) {
        Mat top = Mat::Zero(2 * d, 2 * d);
        top.topLeftCorner(d, d) = E;
        auto& c1 = p.add_constraint(0.0, Sense::Equal);
        c1.terms.push_back({g, top});
        c1.terms.push_back({rho_hat_block, -E});

        Mat bot = Mat::Zero(2 * d, 2 * d);
        bot.bottomRightCorner(d, d) = E;
        auto& c2 = p.add_constraint(hs_inner(E, rho_fixed), Sense::Equal);
        c2.terms.push_back({g, bot});
    });

    // 2 Re tr G_{12} >= 2 threshold  <=>  -<Off, G> <= -2 threshold.
    Mat off = Mat::Zero(2 * d, 2 * d);
    off.topRightCorner(d, d) = Mat::Identity(d, d);
    off.bottomLeftCorner(d, d) = Mat::Identity(d, d);
    auto& c = p.add_constraint(-2.0 * threshold, Sense::LessEqual);
    c.terms.push_back({g, -off});
    return g;
}

} // namespace workcost::sdp
