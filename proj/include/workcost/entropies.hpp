#pragma once

#include <optional>
#include <string>
#include <utility>

#include "workcost/linalg.hpp"

namespace workcost::entropies {

// How a reported value was obtained.
enum class Method { ClosedForm, SdpPrimal, SdpDual, Bracket };

// Snake-case name used in CLI/JSON output.
std::string method_name(Method m);

// A divergence value in bits (log base 2 throughout). When method == Bracket,
// `bracket` holds certified (lower, upper) endpoints with lower <= upper and
// `value` is their midpoint.
struct EntropyValue {
    double value = 0.0;
    Method method = Method::ClosedForm;
    std::optional<std::pair<double, double>> bracket;
};

// Builds a bracket-valued result, clamping away round-off inversions of the
// endpoints; throws PreconditionError if lower exceeds upper materially.
EntropyValue make_bracket(double lower, double upper);

// ---- plain divergences ------------------------------------------------------

// tr[rho (log2 rho - log2 Gamma)] for a normalized state rho supported inside
// supp Gamma; the support violation error reports the leaked weight.
EntropyValue rel_entropy(const Mat& rho, const Mat& Gamma);

// -log2 tr(Pi^rho Gamma): weight the reference assigns to the state's support.
EntropyValue d_min0(const Mat& rho, const Mat& Gamma);

// log2 || Gamma^{-1/2} rho Gamma^{-1/2} ||_inf: the least t with rho <= t Gamma.
// Requires supp rho inside supp Gamma.
EntropyValue d_max(const Mat& rho, const Mat& Gamma);

// -log2 || rho^{-1/2} Gamma rho^{-1/2} ||_inf: the negated least nu with
// nu rho >= Pi^rho Gamma Pi^rho (generalized inverses on the state's support).
EntropyValue d_rob(const Mat& rho, const Mat& Gamma);

// ---- hypothesis-testing program ----------------------------------------------

// Solves beta = min{ tr(Q Gamma) : 0 <= Q <= I, tr(Q rho) >= eta } and exposes
// both sides of the program for constructive reuse.
struct HypTestResult {
    EntropyValue ev;         // -(1/eta) * log2(beta)
    double beta = 0.0;       // primal optimum
    Mat Q;                   // primal optimizer
    double mu = 0.0;         // dual weight multiplier: mu >= 0, mu rho <= Gamma + X
    Mat X;                   // dual slack certificate, X >= 0
    double beta_dual = 0.0;  // mu * eta - tr X, the certified lower bound on beta
};
HypTestResult d_hyp(double eta, const Mat& rho, const Mat& Gamma);

// ---- smooth variants ----------------------------------------------------------

// Smoothed max divergence: minimizes d_max over normalized states rho_hat with
// purified distance P(rho_hat, rho) <= eps. At eps = 0 the ball degenerates to
// {rho}, which is substituted exactly (single covering-factor SDP). The value
// is taken from the primal covering factor; `smoothed` witnesses it.
struct SmoothDmaxResult {
    EntropyValue ev;  // log2 of the achieved covering factor (sdp_primal)
    Mat smoothed;     // witness state inside the ball
    double gap = 0.0; // relative duality gap of the underlying SDP
};
SmoothDmaxResult smooth_d_max(double eps, const Mat& rho, const Mat& Gamma);

// Certified two-sided bracket for the smoothed min divergence (max of d_min0
// over the eps-ball of normalized states). Endpoints come from two runs of the
// hypothesis-testing program at weights 1-eps' and 1-eps with eps' = eps^2/6:
//   lower = -log2(beta at 1-eps') + log2(eps'),  upper = -log2(beta at 1-eps).
// Requires 0 < eps < 1/2.
EntropyValue smooth_d_min0_bracket(double eps, const Mat& rho, const Mat& Gamma);

// Constructive lower bound on the smoothed robustness divergence (max of d_rob
// over the eps-ball). Runs the hypothesis-testing program at weight 1-eps' with
// eps' = eps^2/(2+eps^2), projects rho onto the eigenspaces of the optimal Q
// with eigenvalue >= eps' and normalizes; the dual multiplier mu certifies
//   d_rob(candidate) >= -log2(mu) >= d_min0(rho||Gamma) + log2(eps').
struct SmoothDrobResult {
    EntropyValue ev;                  // -log2(mu)  (sdp_dual)
    double floor_bits = 0.0;          // d_min0(rho||Gamma) + log2(eps')
    Mat candidate;                    // normalized witness state
    double candidate_distance = 0.0;  // P(candidate, rho)
    double mu = 0.0;
    double eps_prime = 0.0;
};
SmoothDrobResult smooth_d_rob_lower(double eps, const Mat& rho, const Mat& Gamma);

// ---- conditional entropies (identity reference) -------------------------------

// H_min(E|R) = -log2 || (I (x) rho_R^{-1/2}) rho_ER (I (x) rho_R^{-1/2}) ||_inf
// on a state over E (x) R with E the first tensor factor.
EntropyValue h_min_alt(const Mat& rho_er, int dim_e, int dim_r);

// H_0(E|X') = log2 || tr_E Pi^{rho_EX'} ||_inf with E the first tensor factor.
EntropyValue h_zero_alt(const Mat& rho_ex, int dim_e, int dim_x);

// ---- continuity envelope -------------------------------------------------------

// Binary entropy in bits; 0 at both endpoints.
double binary_entropy(double eps);

// eps * log2(rank Gamma - 1) + h(eps) + eps * || log2 Gamma ||_inf, with the
// first term set to 0 when rank Gamma = 1. Bounds how far rel_entropy(.|Gamma)
// can move between states at trace distance eps inside supp Gamma.
double continuity_bound(double eps, const Mat& Gamma);

// Measures the actual trace distance of the pair and checks the envelope:
// |rel_entropy(rho) - rel_entropy(sigma)| <= continuity_bound(distance, Gamma).
bool verify_continuity(const Mat& rho, const Mat& sigma, const Mat& Gamma);

} // namespace workcost::entropies
