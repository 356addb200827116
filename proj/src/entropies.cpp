#include "workcost/entropies.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "workcost/errors.hpp"
#include "workcost/sdp.hpp"

namespace workcost::entropies {

namespace {

constexpr double kTraceTol = 1e-7;
constexpr double kPsdSlack = -1e-9;
constexpr double kLeakTol = 1e-9;

void require_state(const Mat& rho, const char* where) {
    require_hermitian(rho, where);
    const double tr = std::real(rho.trace());
    if (std::abs(tr - 1.0) > kTraceTol)
        throw PreconditionError(std::string(where) + ": state must be normalized, got trace " +
                                std::to_string(tr));
    if (min_eigenvalue(rho) < kPsdSlack)
        throw PreconditionError(std::string(where) + ": state must be positive semidefinite");
}

void require_gamma(const Mat& Gamma, const char* where) {
    require_hermitian(Gamma, where);
    if (min_eigenvalue(Gamma) < kPsdSlack)
        throw PreconditionError(std::string(where) + ": reference must be positive semidefinite");
    if (!(std::real(Gamma.trace()) > 0.0))
        throw PreconditionError(std::string(where) + ": reference must be nonzero");
}

void require_support(const Mat& rho, const Mat& Gamma, const char* where) {
    const Mat Pi = support_projector(Gamma);
    const double leak = hs_inner(identity(static_cast<int>(Gamma.rows())) - Pi, rho);
    if (leak > kLeakTol)
        throw PreconditionError(std::string(where) +
                                ": state support leaks outside the reference, weight " +
                                std::to_string(leak));
}

// Accepts a solve that is either flagged optimal or numerically stalled with a
// certified small duality gap (boundary optima of degenerate instances).
void check_solution(const sdp::Solution& sol, const char* where) {
    if (sol.status == sdp::Status::Optimal) return;
    if ((sol.status == sdp::Status::Numerical || sol.status == sdp::Status::MaxIter) &&
        sol.gap <= 1e-6)
        return;
    throw SolverError(std::string(where) + ": solver returned " + sdp::status_name(sol.status) +
                      " with gap " + std::to_string(sol.gap));
}

double safe_log2(double x) { return std::log2(std::max(x, 1e-300)); }

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::ClosedForm: return "closed_form";
        case Method::SdpPrimal: return "sdp_primal";
        case Method::SdpDual: return "sdp_dual";
        case Method::Bracket: return "bracket";
    }
    return "unknown";
}

EntropyValue make_bracket(double lower, double upper) {
    if (lower > upper) {
        if (lower - upper > 1e-9)
            throw PreconditionError("make_bracket: lower endpoint " + std::to_string(lower) +
                                    " exceeds upper endpoint " + std::to_string(upper));
        lower = upper = 0.5 * (lower + upper);
    }
    EntropyValue ev;
    ev.value = 0.5 * (lower + upper);
    ev.method = Method::Bracket;
    ev.bracket = std::make_pair(lower, upper);
    return ev;
}

EntropyValue rel_entropy(const Mat& rho, const Mat& Gamma) {
    require_state(rho, "rel_entropy");
    require_gamma(Gamma, "rel_entropy");
    require_support(rho, Gamma, "rel_entropy");
    EntropyValue ev;
    ev.value = hs_inner(rho, psd_log2(rho)) - hs_inner(rho, psd_log2(Gamma));
    return ev;
}

EntropyValue d_min0(const Mat& rho, const Mat& Gamma) {
    require_state(rho, "d_min0");
    require_gamma(Gamma, "d_min0");
    const double w = hs_inner(support_projector(rho), Gamma);
    if (!(w > 0.0))
        throw PreconditionError("d_min0: reference assigns no weight to the state's support");
    EntropyValue ev;
    ev.value = -std::log2(w);
    return ev;
}

EntropyValue d_max(const Mat& rho, const Mat& Gamma) {
    require_state(rho, "d_max");
    require_gamma(Gamma, "d_max");
    require_support(rho, Gamma, "d_max");
    const Mat G = psd_inv_sqrt(Gamma);
    EntropyValue ev;
    ev.value = std::log2(op_norm_hermitian(G * rho * G));
    return ev;
}

EntropyValue d_rob(const Mat& rho, const Mat& Gamma) {
    require_state(rho, "d_rob");
    require_gamma(Gamma, "d_rob");
    const Mat R = psd_inv_sqrt(rho);
    const double nu = op_norm_hermitian(R * Gamma * R);
    if (!(nu > 0.0))
        throw PreconditionError("d_rob: reference vanishes on the state's support");
    EntropyValue ev;
    ev.value = -std::log2(nu);
    return ev;
}

HypTestResult d_hyp(double eta, const Mat& rho, const Mat& Gamma) {
    if (!(eta > 0.0) || eta > 1.0)
        throw PreconditionError("d_hyp: weight must lie in (0, 1], got " + std::to_string(eta));
    require_state(rho, "d_hyp");
    require_gamma(Gamma, "d_hyp");
    const int d = static_cast<int>(rho.rows());

    // min <Gamma, Q>  s.t.  tr(Q rho) >= eta,  Q + R = I,  Q, R >= 0.
    sdp::Problem p;
    const int q = p.add_block(d);
    const int r = p.add_block(d);
    p.add_objective(q, Gamma);
    {
        // Weight constraint first so its multiplier lands in y[0].
        auto& c = p.add_constraint(-eta, sdp::Sense::LessEqual);
        c.terms.push_back({q, -rho});
    }
    for_each_hermitian_basis(d, [&](const Mat& E) {
        auto& c = p.add_constraint(hs_inner(E, identity(d)));
        c.terms.push_back({q, E});
        c.terms.push_back({r, E});
    });

    const auto sol = sdp::solve(p);
    check_solution(sol, "d_hyp");

    HypTestResult out;
    out.beta = sol.primal_obj;
    out.Q = 0.5 * (sol.X[q] + sol.X[q].adjoint());
    // The multiplier of the weight constraint is nonpositive for this
    // minimization; the dual slack on the R block is exactly the certificate X
    // with  mu rho <= Gamma + X  and  beta >= mu eta - tr X.
    out.mu = std::max(0.0, -sol.y[0]);
    out.X = 0.5 * (sol.S[r] + sol.S[r].adjoint());
    out.beta_dual = out.mu * eta - std::real(out.X.trace());
    out.ev.value = -(1.0 / eta) * safe_log2(out.beta);
    out.ev.method = Method::SdpPrimal;
    return out;
}

SmoothDmaxResult smooth_d_max(double eps, const Mat& rho, const Mat& Gamma) {
    if (!(eps >= 0.0) || eps >= 1.0)
        throw PreconditionError("smooth_d_max: radius must lie in [0, 1), got " +
                                std::to_string(eps));
    require_state(rho, "smooth_d_max");
    require_gamma(Gamma, "smooth_d_max");
    require_support(rho, Gamma, "smooth_d_max");
    const int d = static_cast<int>(rho.rows());

    sdp::Problem p;
    const int t = p.add_block(1);
    p.add_objective(t, Mat::Identity(1, 1));

    SmoothDmaxResult out;
    if (eps == 0.0) {
        // Covering factor of rho itself:  min t  s.t.  t Gamma - rho = S >= 0.
        const int s = p.add_block(d);
        for_each_hermitian_basis(d, [&](const Mat& E) {
            auto& c = p.add_constraint(hs_inner(E, rho));
            c.terms.push_back({t, Mat::Identity(1, 1) * hs_inner(E, Gamma)});
            c.terms.push_back({s, -E});
        });
        const auto sol = sdp::solve(p);
        check_solution(sol, "smooth_d_max");
        out.ev.value = safe_log2(sol.primal_obj);
        out.ev.method = Method::SdpPrimal;
        out.smoothed = rho;
        out.gap = sol.gap;
        return out;
    }

    // min t  s.t.  t Gamma - rho_hat = S >= 0,  tr rho_hat = 1,
    //              root fidelity(rho_hat, rho) >= sqrt(1 - eps^2).
    const int rh = p.add_block(d);
    const int s = p.add_block(d);
    {
        auto& c = p.add_constraint(1.0);
        c.terms.push_back({rh, identity(d)});
    }
    for_each_hermitian_basis(d, [&](const Mat& E) {
        auto& c = p.add_constraint(0.0);
        c.terms.push_back({t, Mat::Identity(1, 1) * hs_inner(E, Gamma)});
        c.terms.push_back({rh, -E});
        c.terms.push_back({s, -E});
    });
    sdp::fidelity_constraint_block(p, rh, rho, std::sqrt(1.0 - eps * eps));

    const auto sol = sdp::solve(p);
    check_solution(sol, "smooth_d_max");
    out.ev.value = safe_log2(sol.primal_obj);
    out.ev.method = Method::SdpPrimal;
    out.smoothed = 0.5 * (sol.X[rh] + sol.X[rh].adjoint());
    out.gap = sol.gap;
    return out;
}

EntropyValue smooth_d_min0_bracket(double eps, const Mat& rho, const Mat& Gamma) {
    if (!(eps > 0.0) || eps >= 0.5)
        throw PreconditionError("smooth_d_min0_bracket: radius must lie in (0, 1/2), got " +
                                std::to_string(eps));
    require_state(rho, "smooth_d_min0_bracket");
    require_gamma(Gamma, "smooth_d_min0_bracket");
    const double epsp = eps * eps / 6.0;
    const double beta_tight = d_hyp(1.0 - epsp, rho, Gamma).beta;
    const double beta_loose = d_hyp(1.0 - eps, rho, Gamma).beta;
    const double lower = -safe_log2(beta_tight) + std::log2(epsp);
    const double upper = -safe_log2(beta_loose);
    return make_bracket(lower, upper);
}

SmoothDrobResult smooth_d_rob_lower(double eps, const Mat& rho, const Mat& Gamma) {
    if (!(eps > 0.0) || eps >= 1.0)
        throw PreconditionError("smooth_d_rob_lower: radius must lie in (0, 1), got " +
                                std::to_string(eps));
    require_state(rho, "smooth_d_rob_lower");
    require_gamma(Gamma, "smooth_d_rob_lower");
    const double epsp = eps * eps / (2.0 + eps * eps);
    const auto h = d_hyp(1.0 - epsp, rho, Gamma);
    if (!(h.mu > 1e-300))
        throw SolverError("smooth_d_rob_lower: degenerate dual weight");

    SmoothDrobResult out;
    out.eps_prime = epsp;
    out.mu = h.mu;
    out.ev.value = -std::log2(h.mu);
    out.ev.method = Method::SdpDual;
    out.floor_bits = d_min0(rho, Gamma).value + std::log2(epsp);

    // Keep the eigenspaces of the optimal test with weight at least eps'; on
    // that subspace the dual stationarity gives mu Pi rho Pi >= Pi Gamma Pi,
    // so the projected-and-normalized state witnesses the robustness bound.
    const auto ed = eig_hermitian(h.Q);
    Mat Pi = Mat::Zero(rho.rows(), rho.cols());
    for (int i = 0; i < static_cast<int>(ed.eigenvalues.size()); ++i)
        if (ed.eigenvalues(i) >= epsp)
            Pi += ed.eigenvectors.col(i) * ed.eigenvectors.col(i).adjoint();
    if (!(hs_inner(Pi, rho) > 0.0))
        throw SolverError("smooth_d_rob_lower: optimal test has no retained eigenspace");
    out.candidate = project_normalize(rho, Pi);
    out.candidate_distance = purified_distance(out.candidate, rho);
    return out;
}

EntropyValue h_min_alt(const Mat& rho_er, int dim_e, int dim_r) {
    if (dim_e < 1 || dim_r < 1 ||
        static_cast<long long>(dim_e) * dim_r != static_cast<long long>(rho_er.rows()))
        throw PreconditionError("h_min_alt: subsystem dimensions do not match the state");
    require_state(rho_er, "h_min_alt");
    const Mat rho_r = partial_trace(rho_er, {dim_e, dim_r}, {1});
    const Mat W = tensor(identity(dim_e), psd_inv_sqrt(rho_r));
    EntropyValue ev;
    ev.value = -std::log2(op_norm_hermitian(W * rho_er * W));
    return ev;
}

EntropyValue h_zero_alt(const Mat& rho_ex, int dim_e, int dim_x) {
    if (dim_e < 1 || dim_x < 1 ||
        static_cast<long long>(dim_e) * dim_x != static_cast<long long>(rho_ex.rows()))
        throw PreconditionError("h_zero_alt: subsystem dimensions do not match the state");
    require_state(rho_ex, "h_zero_alt");
    const Mat Pi = support_projector(rho_ex);
    EntropyValue ev;
    ev.value = std::log2(op_norm_hermitian(partial_trace(Pi, {dim_e, dim_x}, {1})));
    return ev;
}

double binary_entropy(double eps) {
    if (eps < 0.0 || eps > 1.0)
        throw PreconditionError("binary_entropy: argument must lie in [0, 1]");
    if (eps == 0.0 || eps == 1.0) return 0.0;
    return -eps * std::log2(eps) - (1.0 - eps) * std::log2(1.0 - eps);
}

double continuity_bound(double eps, const Mat& Gamma) {
    if (eps < 0.0 || eps > 1.0)
        throw PreconditionError("continuity_bound: distance must lie in [0, 1]");
    require_gamma(Gamma, "continuity_bound");
    const int rank = eig_hermitian(Gamma).rank;
    const double rank_term = rank > 1 ? eps * std::log2(static_cast<double>(rank - 1)) : 0.0;
    return rank_term + binary_entropy(eps) + eps * op_norm_hermitian(psd_log2(Gamma));
}

bool verify_continuity(const Mat& rho, const Mat& sigma, const Mat& Gamma) {
    const double dist = std::min(trace_distance(rho, sigma), 1.0);
    const double lhs =
        std::abs(rel_entropy(rho, Gamma).value - rel_entropy(sigma, Gamma).value);
    return lhs <= continuity_bound(dist, Gamma) + 1e-9;
}

} // namespace workcost::entropies
