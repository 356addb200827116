#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "workcost/entropies.hpp"
#include "workcost/errors.hpp"
#include "workcost/linalg.hpp"

using namespace workcost;
namespace ent = workcost::entropies;

namespace {

// Reference operator with eigenvalues drawn in [0.1, 1] (full rank, generic
// eigenbasis, condition number at most 10).
Mat random_full_rank_gamma(CounterRng& rng, int d) {
    const Mat U = random_unitary(rng, d);
    Mat D = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i) D(i, i) = rng.uniform(0.1, 1.0);
    return U * D * U.adjoint();
}

// Projector onto the top-k eigenvectors of A (commutes with A by construction).
Mat eigenprojector(const Mat& A, int k) {
    const auto ed = eig_hermitian(A);
    Mat P = Mat::Zero(A.rows(), A.cols());
    for (int i = 0; i < k; ++i) P += ed.eigenvectors.col(i) * ed.eigenvectors.col(i).adjoint();
    return P;
}

// ---- test oracles (exhaustive searches; never used by production code) -----

// Smoothed max divergence of diag(p0, 1-p0) against the identity reference:
// minimize log2((1+|r|)/2) over Bloch vectors r with squared fidelity to the
// reference state at least 1 - eps^2, using the qubit closed form
// F^2 = tr(rho sigma) + 2 sqrt(det rho det sigma). Rotations about z leave the
// instance invariant, so the scan runs in the x >= 0, y = 0 half-plane at
// resolution 0.01 with two local refinement passes.
double bloch_grid_smooth_dmax(double p0, double eps) {
    const double need = 1.0 - eps * eps;
    const double az = 2.0 * p0 - 1.0;
    const double det_rho = (1.0 - az * az) / 4.0;
    auto feasible_value = [&](double x, double z, double* value) {
        const double r2 = x * x + z * z;
        if (r2 > 1.0) return false;
        const double f2 = 0.5 * (1.0 + az * z) + std::sqrt(det_rho * (1.0 - r2));
        if (f2 < need) return false;
        *value = std::log2(0.5 * (1.0 + std::sqrt(r2)));
        return true;
    };
    double best = std::numeric_limits<double>::infinity();
    double bx = 0.0, bz = 0.0;
    auto scan = [&](double cx, double cz, double half, double step) {
        for (double x = std::max(0.0, cx - half); x <= std::min(1.0, cx + half); x += step)
            for (double z = std::max(-1.0, cz - half); z <= std::min(1.0, cz + half); z += step) {
                double v;
                if (feasible_value(x, z, &v) && v < best) {
                    best = v;
                    bx = x;
                    bz = z;
                }
            }
    };
    scan(0.0, 0.0, 1.0, 0.01);
    scan(bx, bz, 0.02, 2e-4);
    scan(bx, bz, 4e-4, 4e-6);
    return best;
}

// Smoothed min-zero divergence of a qubit instance: maximize
// -log2 tr(Pi^sigma Gamma) over normalized sigma with squared fidelity to rho
// at least 1 - eps^2. Every full-rank candidate contributes -log2 tr(Gamma)
// (rho itself qualifies because the instance is mixed); rank-one candidates
// are scanned over the sphere at resolution 0.01 rad with refinement.
double sphere_grid_smooth_dmin0(const Mat& rho, const Mat& Gamma, double eps) {
    const double need = 1.0 - eps * eps;
    double best = -std::log2(std::real(Gamma.trace()));
    double bt = 1.0, bp = 1.0;
    auto value_at = [&](double th, double ph, double* v) {
        Vec psi(2);
        psi << cplx(std::cos(th / 2.0), 0.0), std::polar(std::sin(th / 2.0), ph);
        const double overlap = std::real((psi.adjoint() * rho * psi)(0, 0));
        if (overlap < need) return false;
        *v = -std::log2(std::real((psi.adjoint() * Gamma * psi)(0, 0)));
        return true;
    };
    auto scan = [&](double ct, double cp, double half, double step) {
        for (double th = std::max(0.0, ct - half); th <= std::min(3.14159265358979, ct + half);
             th += step)
            for (double ph = cp - half; ph <= cp + half; ph += step) {
                double v;
                if (value_at(th, ph, &v) && v > best) {
                    best = v;
                    bt = th;
                    bp = ph;
                }
            }
    };
    scan(1.5707963, 3.14159265, 3.15, 0.01);
    scan(bt, bp, 0.02, 1e-4);
    scan(bt, bp, 2e-4, 1e-6);
    return best;
}

// Fixed qubit instance for the min-zero oracle: eigenvalues (0.96, 0.04) in a
// complex-rotated basis, diagonal reference.
Mat dmin0_oracle_state() {
    const double c = std::cos(0.3), s = std::sin(0.3), phi = 0.7;
    Mat U(2, 2);
    U << cplx(c, 0.0), -std::polar(s, -phi), std::polar(s, phi), cplx(c, 0.0);
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = 0.96;
    D(1, 1) = 0.04;
    return U * D * U.adjoint();
}

Mat dmin0_oracle_gamma() {
    Mat G = Mat::Zero(2, 2);
    G(0, 0) = 0.7;
    G(1, 1) = 0.4;
    return G;
}

} // namespace

TEST_CASE("relative entropy: closed forms and support handling") {
    CounterRng rng(401);
    const Mat Gamma = random_full_rank_gamma(rng, 3);
    const double tg = std::real(Gamma.trace());

    // Normalized reference reproduces -log2 tr(Gamma).
    const auto ev = ent::rel_entropy(Gamma / tg, Gamma);
    CHECK(ev.method == ent::Method::ClosedForm);
    CHECK(std::abs(ev.value - (-std::log2(tg))) <= 1e-10);

    // Maximally mixed state against the identity.
    CHECK(std::abs(ent::rel_entropy(identity(4) / 4.0, identity(4)).value - (-2.0)) <= 1e-12);

    // Support violation reports the leaked weight.
    Mat G2 = Mat::Zero(3, 3);
    G2(0, 0) = 0.5;
    G2(1, 1) = 0.5;
    bool threw = false;
    try {
        ent::rel_entropy(identity(3) / 3.0, G2);
    } catch (const PreconditionError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("leak") != std::string::npos);
    }
    CHECK(threw);

    // Subnormalized inputs are rejected.
    CHECK_THROWS_AS(ent::rel_entropy(0.9 * identity(2) / 2.0, identity(2)), PreconditionError);
}

TEST_CASE("projector-weighted reference states: all divergences coincide") {
    CounterRng rng(402);
    for (int trial = 0; trial < 6; ++trial) {
        CounterRng sub = rng.fork(trial);
        const Mat Gamma = random_full_rank_gamma(sub, 4);
        const Mat P = eigenprojector(Gamma, 2);
        const double w = hs_inner(P, Gamma);
        const Mat tau = P * Gamma * P / w;
        const double expected = -std::log2(w);
        CHECK(std::abs(ent::rel_entropy(tau, Gamma).value - expected) <= 1e-9);
        CHECK(std::abs(ent::d_min0(tau, Gamma).value - expected) <= 1e-9);
        CHECK(std::abs(ent::d_max(tau, Gamma).value - expected) <= 1e-9);
        CHECK(std::abs(ent::d_rob(tau, Gamma).value - expected) <= 1e-9);
    }
}

TEST_CASE("min-zero and max divergences: closed forms and ordering") {
    // Pure state against a diagonal reference.
    Mat psi = Mat::Zero(2, 2);
    psi(0, 0) = 1.0;
    Mat G = Mat::Zero(2, 2);
    G(0, 0) = 0.6;
    G(1, 1) = 0.4;
    CHECK(std::abs(ent::d_min0(psi, G).value - (-std::log2(0.6))) <= 1e-12);
    CHECK(std::abs(ent::d_max(psi, G).value - (-std::log2(0.6))) <= 1e-12);
    CHECK(std::abs(ent::d_rob(psi, G).value - (-std::log2(0.6))) <= 1e-12);

    // d_rob <= d_min0 <= D <= d_max on random instances.
    CounterRng rng(403);
    for (int trial = 0; trial < 12; ++trial) {
        CounterRng sub = rng.fork(trial);
        const int d = 2 + static_cast<int>(sub.below(3));
        const Mat rho = random_density(sub, d);
        const Mat Gamma = random_full_rank_gamma(sub, d);
        const double lo = ent::d_min0(rho, Gamma).value;
        const double mid = ent::rel_entropy(rho, Gamma).value;
        const double hi = ent::d_max(rho, Gamma).value;
        const double rob = ent::d_rob(rho, Gamma).value;
        CHECK(lo <= mid + 1e-8);
        CHECK(mid <= hi + 1e-8);
        CHECK(rob <= lo + 1e-8);
    }

    // d_max rejects states leaking outside the reference support.
    Mat G3 = Mat::Zero(2, 2);
    G3(0, 0) = 1.0;
    CHECK_THROWS_AS(ent::d_max(identity(2) / 2.0, G3), PreconditionError);
}

TEST_CASE("hypothesis-testing program: analytic optima and certificates") {
    CounterRng rng(404);

    // Full weight on a pure state against the identity forces Q onto it.
    {
        const Vec k = random_ket(rng, 3);
        const Mat psi = k * k.adjoint();
        const auto r = ent::d_hyp(1.0, psi, identity(3));
        CHECK(std::abs(r.beta - 1.0) <= 1e-6);
        CHECK(std::abs(r.ev.value) <= 1e-6);
    }

    // Normalized reference: the optimal test scales the identity on the
    // support, beta = eta * tr(Gamma).
    const Mat Gamma = random_full_rank_gamma(rng, 3);
    const double tg = std::real(Gamma.trace());
    for (double eta : {0.3, 0.75}) {
        const auto r = ent::d_hyp(eta, Gamma / tg, Gamma);
        CHECK(std::abs(r.beta - eta * tg) <= 1e-7);
        CHECK(std::abs(r.ev.value - (-1.0 / eta) * std::log2(eta * tg)) <= 1e-6);
        CHECK(r.ev.method == ent::Method::SdpPrimal);

        // Primal reuse and dual certificate.
        CHECK(std::abs(hs_inner(r.Q, Gamma) - r.beta) <= 1e-8);
        CHECK(r.mu >= -1e-10);
        CHECK(min_eigenvalue(r.X) >= -1e-8);
        CHECK(min_eigenvalue(Gamma + r.X - r.mu * (Gamma / tg)) >= -1e-7);
        CHECK(std::abs(r.beta_dual - r.beta) <= 1e-6 * (1.0 + std::abs(r.beta)));
    }

    // The raw optimum is nondecreasing in the weight.
    const Mat rho = random_density(rng, 2);
    const Mat G2 = random_full_rank_gamma(rng, 2);
    double prev = -1.0;
    for (double eta : {0.2, 0.4, 0.6, 0.8, 0.95}) {
        const double beta = ent::d_hyp(eta, rho, G2).beta;
        CHECK(beta >= prev - 1e-9);
        prev = beta;
    }

    // The raw optimum scales linearly with the reference.
    const auto a1 = ent::d_hyp(0.6, rho, G2);
    const auto a2 = ent::d_hyp(0.6, rho, 3.7 * G2);
    CHECK(std::abs(a2.beta - 3.7 * a1.beta) <= 1e-7 * (1.0 + a1.beta));

    CHECK_THROWS_AS(ent::d_hyp(0.0, rho, G2), PreconditionError);
    CHECK_THROWS_AS(ent::d_hyp(1.2, rho, G2), PreconditionError);
}

TEST_CASE("smooth max divergence: grid oracle agreement") {
    // Oracle value for diag(0.9, 0.1) vs identity at eps = 0.2; the frozen
    // literal is the on-axis tangency root: the smallest z >= 0 with
    // 0.25 z^2 - 0.368 z + 0.1216 = 0 gives value log2((1+z)/2).
    const double oracle = bloch_grid_smooth_dmax(0.9, 0.2);
    CHECK(std::abs(oracle - (-0.4142221)) <= 5e-5);

    Mat rho = Mat::Zero(2, 2);
    rho(0, 0) = 0.9;
    rho(1, 1) = 0.1;
    const auto r = ent::smooth_d_max(0.2, rho, identity(2));
    CHECK(std::abs(r.ev.value - oracle) <= 1e-3);
    CHECK(r.ev.method == ent::Method::SdpPrimal);

    // The witness actually certifies the value.
    CHECK(std::abs(std::real(r.smoothed.trace()) - 1.0) <= 1e-7);
    CHECK(purified_distance(r.smoothed, rho) <= 0.2 + 1e-6);
    CHECK(ent::d_max(r.smoothed, identity(2)).value <= r.ev.value + 1e-5);
}

TEST_CASE("smooth max divergence: zero-radius limit matches the closed form") {
    CounterRng rng(405);
    for (int trial = 0; trial < 20; ++trial) {
        CounterRng sub = rng.fork(trial);
        const int d = 2 + static_cast<int>(sub.below(2));
        const Mat rho = random_density(sub, d);
        const Mat Gamma = random_full_rank_gamma(sub, d);
        const auto r = ent::smooth_d_max(0.0, rho, Gamma);
        CHECK(std::abs(r.ev.value - ent::d_max(rho, Gamma).value) <= 1e-7);
        CHECK(r.gap <= 1e-6);
    }
}

TEST_CASE("smooth max divergence: monotonicity, trivial cases, bracket cross-check") {
    CounterRng rng(406);
    const Mat rho = random_density(rng, 2);
    const Mat Gamma = random_full_rank_gamma(rng, 2);

    // Nonincreasing in the smoothing radius.
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.0, 0.1, 0.2, 0.3}) {
        const double v = ent::smooth_d_max(eps, rho, Gamma).ev.value;
        CHECK(v <= prev + 1e-7);
        prev = v;
    }

    // Smoothing the normalized reference cannot exceed -log2 tr(Gamma).
    const double tg = std::real(Gamma.trace());
    CHECK(ent::smooth_d_max(0.15, Gamma / tg, Gamma).ev.value <= -std::log2(tg) + 1e-7);

    // Reference scaling shifts the value by -log2(a).
    const double v1 = ent::smooth_d_max(0.15, rho, Gamma).ev.value;
    const double v2 = ent::smooth_d_max(0.15, rho, 2.6 * Gamma).ev.value;
    CHECK(std::abs(v2 - (v1 - std::log2(2.6))) <= 1e-7);

    // Two-sided certification through the hypothesis-testing program:
    //   -log2(beta at 2 eps) + log2(eps)
    //     <= smoothed value <= -log2(beta at eps^2/2) + log2(eps^2/2) - log2(1-eps).
    const double eps = 0.2;
    const double v = ent::smooth_d_max(eps, rho, Gamma).ev.value;
    const double lower =
        -std::log2(ent::d_hyp(2.0 * eps, rho, Gamma).beta) + std::log2(eps);
    const double upper = -std::log2(ent::d_hyp(eps * eps / 2.0, rho, Gamma).beta) +
                         std::log2(eps * eps / 2.0) - std::log2(1.0 - eps);
    CHECK(v >= lower - 1e-6);
    CHECK(v <= upper + 1e-6);

    // Smoothing is defined over normalized states only.
    CHECK_THROWS_AS(ent::smooth_d_max(0.1, 0.9 * rho, Gamma), PreconditionError);
    CHECK_THROWS_AS(ent::smooth_d_max(1.0, rho, Gamma), PreconditionError);
}

TEST_CASE("smooth min-zero bracket: explicit values on a pure state") {
    CounterRng rng(407);
    const Vec k = random_ket(rng, 3);
    const Mat psi = k * k.adjoint();
    const double eps = 0.1;
    const double epsp = eps * eps / 6.0;

    const auto ev = ent::smooth_d_min0_bracket(eps, psi, identity(3));
    REQUIRE(ev.method == ent::Method::Bracket);
    REQUIRE(ev.bracket.has_value());
    const auto [lower, upper] = *ev.bracket;
    CHECK(lower <= upper);
    // For a pure state against the identity, the optimal test puts weight eta
    // on the state itself, so beta(eta) = eta.
    CHECK(std::abs(upper - (-std::log2(1.0 - eps))) <= 1e-6);
    CHECK(std::abs(lower - (-std::log2(1.0 - epsp) + std::log2(epsp))) <= 1e-6);
    CHECK(std::abs(ev.value - 0.5 * (lower + upper)) <= 1e-12);
}

TEST_CASE("smooth min-zero bracket: collapse and oracle containment") {
    CounterRng rng(408);
    const Mat rho = random_density(rng, 2);
    const Mat Gamma = random_full_rank_gamma(rng, 2);

    // At tiny radius the upper endpoint sits just above the unsmoothed value;
    // the lower endpoint keeps its -log2(6/eps^2) construction offset.
    const auto tiny = ent::smooth_d_min0_bracket(1e-3, rho, Gamma);
    const double base = ent::d_min0(rho, Gamma).value;
    CHECK(tiny.bracket->second >= base - 1e-6);
    CHECK(tiny.bracket->second <= base + 0.05);
    CHECK(tiny.bracket->first <= tiny.bracket->second);

    // Exhaustive qubit search stays inside the certified bracket (frozen
    // oracle value from the committed instance).
    const Mat orho = dmin0_oracle_state();
    const Mat ogam = dmin0_oracle_gamma();
    const double oracle = sphere_grid_smooth_dmin0(orho, ogam, 0.25);
    CHECK(std::abs(oracle - 0.6398338) <= 1e-4);
    const auto br = ent::smooth_d_min0_bracket(0.25, orho, ogam);
    CHECK(br.bracket->first <= oracle + 1e-3);
    CHECK(oracle <= br.bracket->second + 1e-6);

    CHECK_THROWS_AS(ent::smooth_d_min0_bracket(0.0, rho, Gamma), PreconditionError);
    CHECK_THROWS_AS(ent::smooth_d_min0_bracket(0.6, rho, Gamma), PreconditionError);
}

TEST_CASE("smooth robustness lower bound: construction certificates") {
    CounterRng rng(409);

    // Projector-weighted reference state: the program's dual weight reproduces
    // the unsmoothed value exactly and the candidate is the state itself.
    {
        const Mat Gamma = random_full_rank_gamma(rng, 4);
        const Mat P = eigenprojector(Gamma, 2);
        const double w = hs_inner(P, Gamma);
        const Mat tau = P * Gamma * P / w;
        const auto r = ent::smooth_d_rob_lower(0.3, tau, Gamma);
        CHECK(std::abs(r.ev.value - (-std::log2(w))) <= 1e-6);
        CHECK(std::abs(r.floor_bits - (-std::log2(w) + std::log2(r.eps_prime))) <= 1e-9);
        CHECK(r.candidate_distance <= 0.3 + 1e-9);
        CHECK(ent::d_rob(r.candidate, Gamma).value >= r.ev.value - 1e-6);
    }

    // Random instances: the full certification chain holds.
    for (int trial = 0; trial < 4; ++trial) {
        CounterRng sub = rng.fork(100 + trial);
        const Mat rho = random_density(sub, 3);
        const Mat Gamma = random_full_rank_gamma(sub, 3);
        const double eps = 0.35;
        const auto r = ent::smooth_d_rob_lower(eps, rho, Gamma);
        CHECK(r.ev.method == ent::Method::SdpDual);
        CHECK(std::abs(r.eps_prime - eps * eps / (2.0 + eps * eps)) <= 1e-15);
        CHECK(r.ev.value >= r.floor_bits - 1e-6);
        CHECK(r.candidate_distance <= eps + 1e-9);
        CHECK(std::abs(purified_distance(r.candidate, rho) - r.candidate_distance) <= 1e-12);
        CHECK(std::abs(std::real(r.candidate.trace()) - 1.0) <= 1e-9);
        CHECK(ent::d_rob(r.candidate, Gamma).value >= r.ev.value - 1e-5);
    }

    // Parameter map: eps' = eps^2/(2+eps^2) inverts to eps = sqrt(2eps'/(1-eps')).
    {
        const Mat rho = random_density(rng, 2);
        const Mat Gamma = random_full_rank_gamma(rng, 2);
        const auto r = ent::smooth_d_rob_lower(0.37, rho, Gamma);
        CHECK(std::abs(std::sqrt(2.0 * r.eps_prime / (1.0 - r.eps_prime)) - 0.37) <= 1e-12);
        // Radii at or beyond the inversion breakdown are rejected.
        CHECK_THROWS_AS(ent::smooth_d_rob_lower(std::sqrt(2.0), rho, Gamma), PreconditionError);
        CHECK_THROWS_AS(ent::smooth_d_rob_lower(0.0, rho, Gamma), PreconditionError);
    }
}

TEST_CASE("conditional entropy forms") {
    CounterRng rng(410);

    // Product state with a pure first factor: both forms vanish.
    const Vec e = random_ket(rng, 2);
    const Mat rho_r = random_density(rng, 3);
    const Mat prod = tensor(e * e.adjoint(), rho_r);
    CHECK(std::abs(ent::h_min_alt(prod, 2, 3).value) <= 1e-9);
    CHECK(std::abs(ent::h_zero_alt(prod, 2, 3).value) <= 1e-9);

    // Maximally entangled pair: both forms equal -log2 d.
    for (int d : {2, 3}) {
        Mat phi = Mat::Zero(d * d, d * d);
        Vec v = Vec::Zero(d * d);
        for (int i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
        phi = v * v.adjoint();
        CHECK(std::abs(ent::h_min_alt(phi, d, d).value - (-std::log2(d))) <= 1e-9);
        CHECK(std::abs(ent::h_zero_alt(phi, d, d).value - (-std::log2(d))) <= 1e-9);
    }

    CHECK_THROWS_AS(ent::h_min_alt(identity(6) / 6.0, 2, 2), PreconditionError);
}

TEST_CASE("continuity envelope") {
    CounterRng rng(411);
    const Mat Gamma = random_full_rank_gamma(rng, 3);
    const Mat rho = random_density(rng, 3);

    // Identical states: zero distance, nonnegative bound.
    CHECK(ent::verify_continuity(rho, rho, Gamma));
    CHECK(ent::continuity_bound(0.0, Gamma) == 0.0);

    // Rank-one reference: the rank term vanishes by convention.
    Mat G1 = Mat::Zero(2, 2);
    G1(0, 0) = 0.8;
    const double b1 = ent::continuity_bound(0.3, G1);
    CHECK(std::abs(b1 - (ent::binary_entropy(0.3) + 0.3 * std::abs(std::log2(0.8)))) <= 1e-12);

    // Perturbed pairs satisfy the envelope.
    for (int trial = 0; trial < 5; ++trial) {
        CounterRng sub = rng.fork(trial);
        const Mat a = random_density(sub, 3);
        Mat b = 0.93 * a + 0.07 * random_density(sub, 3);
        b = 0.5 * (b + b.adjoint());
        CHECK(ent::verify_continuity(a, b, Gamma));
    }

    CHECK(ent::binary_entropy(0.0) == 0.0);
    CHECK(ent::binary_entropy(1.0) == 0.0);
    CHECK(std::abs(ent::binary_entropy(0.5) - 1.0) <= 1e-12);
}

TEST_CASE("reference scaling shifts every divergence by -log2 a") {
    CounterRng rng(412);
    const Mat rho = random_density(rng, 3);
    const Mat Gamma = random_full_rank_gamma(rng, 3);
    const double a = 5.3;
    const double shift = std::log2(a);

    CHECK(std::abs(ent::rel_entropy(rho, a * Gamma).value -
                   (ent::rel_entropy(rho, Gamma).value - shift)) <= 1e-10);
    CHECK(std::abs(ent::d_min0(rho, a * Gamma).value -
                   (ent::d_min0(rho, Gamma).value - shift)) <= 1e-10);
    CHECK(std::abs(ent::d_max(rho, a * Gamma).value -
                   (ent::d_max(rho, Gamma).value - shift)) <= 1e-10);
    CHECK(std::abs(ent::d_rob(rho, a * Gamma).value -
                   (ent::d_rob(rho, Gamma).value - shift)) <= 1e-10);
    // The hypothesis-testing value carries the 1/eta prefactor on its raw
    // optimum, so the shift applies to -log2(beta).
    const auto h1 = ent::d_hyp(0.7, rho, Gamma);
    const auto h2 = ent::d_hyp(0.7, rho, a * Gamma);
    CHECK(std::abs(-std::log2(h2.beta) - (-std::log2(h1.beta) - shift)) <= 1e-6);
}

TEST_CASE("bracket construction guards its ordering") {
    const auto ev = ent::make_bracket(0.25, 0.75);
    CHECK(ev.method == ent::Method::Bracket);
    CHECK(ev.value == 0.5);
    CHECK_THROWS_AS(ent::make_bracket(0.8, 0.2), PreconditionError);

    CHECK(ent::method_name(ent::Method::ClosedForm) == "closed_form");
    CHECK(ent::method_name(ent::Method::SdpPrimal) == "sdp_primal");
    CHECK(ent::method_name(ent::Method::SdpDual) == "sdp_dual");
    CHECK(ent::method_name(ent::Method::Bracket) == "bracket");
}
