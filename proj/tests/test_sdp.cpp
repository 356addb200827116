// Checks for the interior-point semidefinite solver against problems whose
// optima are known in closed form or computable by direct spectral formulas.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "workcost/errors.hpp"
#include "workcost/linalg.hpp"
#include "workcost/rng.hpp"
#include "workcost/sdp.hpp"

using namespace workcost;
namespace sdp = workcost::sdp;

namespace {

constexpr double kTightTol = 1e-7;
constexpr double kFidTol = 1e-6;

Mat random_full_rank_psd(CounterRng& rng, int d, double eig_lo, double eig_hi) {
    const Mat u = random_unitary(rng, d);
    RVec eigs(d);
    for (int k = 0; k < d; ++k) eigs(k) = rng.uniform(eig_lo, eig_hi);
    return 0.5 * ((u * eigs.asDiagonal() * u.adjoint()) +
                  (u * eigs.asDiagonal() * u.adjoint()).adjoint());
}

// min t  s.t.  t*G - W = rho, W >= 0,  i.e. the smallest t with rho <= t*G.
sdp::Solution solve_scale_to_dominate(const Mat& rho, const Mat& G) {
    const int d = static_cast<int>(rho.rows());
    sdp::Problem p;
    const int bt = p.add_block(1);
    const int bw = p.add_block(d);
    p.add_objective(bt, Mat::Identity(1, 1));
    for_each_hermitian_basis(d, [&](const Mat& E) {
        auto& c = p.add_constraint(hs_inner(E, rho));
        c.terms.push_back({bt, hs_inner(E, G) * Mat::Identity(1, 1)});
        c.terms.push_back({bw, -E});
    });
    return sdp::solve(p);
}

} // namespace

TEST_CASE("one-dimensional floor: minimize x subject to x >= 1") {
    sdp::Problem p;
    const int bx = p.add_block(1);
    p.add_objective(bx, Mat::Identity(1, 1));
    auto& c = p.add_constraint(-1.0, sdp::Sense::LessEqual);
    c.terms.push_back({bx, -Mat::Identity(1, 1)});

    const auto sol = sdp::solve(p);
    CHECK(sol.status == sdp::Status::Optimal);
    CHECK(std::abs(sol.primal_obj - 1.0) < kTightTol);
    CHECK(std::abs(sol.dual_obj - 1.0) < kTightTol);
    CHECK(sol.gap <= kTightTol);
    // Binding <= constraint in a minimization carries a nonpositive multiplier
    // equal to the sensitivity of the optimum to its right-hand side.
    CHECK(std::abs(sol.y(0) - (-1.0)) < 1e-6);
}

TEST_CASE("overlap ceiling: maximize tr(rho X) over X below the identity") {
    CounterRng rng(411);
    for (int d : {2, 3}) {
        for (int trial = 0; trial < 5; ++trial) {
            const Mat rho = random_density(rng, d);
            sdp::Problem p;
            p.direction = sdp::Direction::Maximize;
            const int bx = p.add_block(d);
            const int by = p.add_block(d); // slack: X + Y = I
            p.add_objective(bx, rho);
            for_each_hermitian_basis(d, [&](const Mat& E) {
                auto& c = p.add_constraint(hs_inner(E, identity(d)));
                c.terms.push_back({bx, E});
                c.terms.push_back({by, E});
            });
            const auto sol = sdp::solve(p);
            CHECK(sol.status == sdp::Status::Optimal);
            CHECK(std::abs(sol.primal_obj - 1.0) < kTightTol);
            CHECK(min_eigenvalue(identity(d) - sol.X[0]) > -1e-6);
        }
    }
}

TEST_CASE("smallest dominating scale matches the spectral formula") {
    CounterRng rng(412);
    for (int d : {2, 3, 4}) {
        for (int trial = 0; trial < 6; ++trial) {
            const Mat rho = random_density(rng, d);
            const Mat G = random_full_rank_psd(rng, d, 0.05, 1.0);
            const auto sol = solve_scale_to_dominate(rho, G);
            REQUIRE(sol.status == sdp::Status::Optimal);
            const Mat Gi = psd_fn(G, PsdFn::InvSqrtPinv);
            const double direct = eig_hermitian(Gi * rho * Gi).eigenvalues(0);
            CHECK(std::abs(sol.primal_obj - direct) < kTightTol * std::max(1.0, direct));
            CHECK(sol.gap <= kTightTol);
        }
    }
}

TEST_CASE("best decomposition sigma - rho = P - N recovers the trace distance") {
    CounterRng rng(413);
    for (int d : {2, 3}) {
        for (int trial = 0; trial < 6; ++trial) {
            const Mat rho = random_density(rng, d);
            const Mat sigma = random_density(rng, d);
            sdp::Problem p;
            const int bp = p.add_block(d);
            const int bn = p.add_block(d);
            p.add_objective(bp, 0.5 * identity(d));
            p.add_objective(bn, 0.5 * identity(d));
            const Mat diff = sigma - rho;
            for_each_hermitian_basis(d, [&](const Mat& E) {
                auto& c = p.add_constraint(hs_inner(E, diff));
                c.terms.push_back({bp, E});
                c.terms.push_back({bn, -E});
            });
            const auto sol = sdp::solve(p);
            REQUIRE(sol.status == sdp::Status::Optimal);
            CHECK(std::abs(sol.primal_obj - trace_distance(rho, sigma)) < kTightTol);
        }
    }
}

namespace {

sdp::Solution solve_root_fidelity(const Mat& rho, const Mat& sigma) {
    const int d = static_cast<int>(rho.rows());
    sdp::Problem p;
    p.direction = sdp::Direction::Maximize;
    const int bg = p.add_block(2 * d);
    Mat off = Mat::Zero(2 * d, 2 * d);
    off.topRightCorner(d, d) = identity(d);
    off.bottomLeftCorner(d, d) = identity(d);
    p.add_objective(bg, 0.5 * off); // <0.5*off, G> = Re tr G12
    for_each_hermitian_basis(d, [&](const Mat& E) {
        Mat top = Mat::Zero(2 * d, 2 * d);
        top.topLeftCorner(d, d) = E;
        p.add_constraint(hs_inner(E, rho)).terms.push_back({bg, top});
        Mat bot = Mat::Zero(2 * d, 2 * d);
        bot.bottomRightCorner(d, d) = E;
        p.add_constraint(hs_inner(E, sigma)).terms.push_back({bg, bot});
    });
    return sdp::solve(p);
}

} // namespace

TEST_CASE("maximal off-diagonal coupling of a positive block equals root fidelity") {
    CounterRng rng(414);
    for (int d : {2, 3}) {
        for (int trial = 0; trial < 8; ++trial) {
            const Mat rho = random_density(rng, d);
            const Mat sigma = random_density(rng, d);
            const auto sol = solve_root_fidelity(rho, sigma);
            REQUIRE(sol.status == sdp::Status::Optimal);
            CHECK(std::abs(sol.primal_obj - fidelity(rho, sigma)) < kFidTol);
        }
    }
}

TEST_CASE("rank-deficient reference states solve to boundary-limited accuracy") {
    // With a pure reference the optimum sits on a thin face: an order-eps
    // feasibility slack moves the value by order sqrt(eps), so agreement is
    // limited to roughly the square root of the feasibility tolerance.
    CounterRng rng(424);
    for (int d : {2, 3}) {
        for (int trial = 0; trial < 4; ++trial) {
            const Mat rho = random_density(rng, d);
            const Mat sigma = random_density(rng, d, 1);
            const auto sol = solve_root_fidelity(rho, sigma);
            const bool converged = sol.status == sdp::Status::Optimal ||
                                   (sol.status == sdp::Status::Numerical && sol.gap <= 1e-6);
            CHECK(converged);
            CHECK(std::abs(sol.primal_obj - fidelity(rho, sigma)) < 5e-4);
        }
    }
}

TEST_CASE("scaling the objective rescales the value and fixes the argmin") {
    CounterRng rng(425);
    const Mat rho = random_density(rng, 3);
    const Mat G = random_full_rank_psd(rng, 3, 0.05, 1.0);
    const auto base = solve_scale_to_dominate(rho, G);
    REQUIRE(base.status == sdp::Status::Optimal);

    const double c = 3.7;
    sdp::Problem p;
    const int bt = p.add_block(1);
    const int bw = p.add_block(3);
    p.add_objective(bt, c * Mat::Identity(1, 1));
    for_each_hermitian_basis(3, [&](const Mat& E) {
        auto& ctr = p.add_constraint(hs_inner(E, rho));
        ctr.terms.push_back({bt, hs_inner(E, G) * Mat::Identity(1, 1)});
        ctr.terms.push_back({bw, -E});
    });
    const auto scaled = sdp::solve(p);
    REQUIRE(scaled.status == sdp::Status::Optimal);
    CHECK(std::abs(scaled.primal_obj - c * base.primal_obj) < 1e-6 * c);
    CHECK((scaled.X[0] - base.X[0]).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((scaled.X[1] - base.X[1]).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("fidelity floor block pins the minimum overlap with a pure target") {
    // With a pure reference |0><0| the constraint F(rho_hat, |0><0|) >= theta
    // reads <0|rho_hat|0> >= theta^2, so minimizing <0|rho_hat|0> over
    // normalized rho_hat lands exactly on theta^2.
    const int d = 2;
    Mat pure = Mat::Zero(d, d);
    pure(0, 0) = 1.0;
    const double theta = 0.8;

    sdp::Problem p;
    const int br = p.add_block(d);
    p.add_objective(br, pure);
    auto& tr1 = p.add_constraint(1.0);
    tr1.terms.push_back({br, identity(d)});
    sdp::fidelity_constraint_block(p, br, pure, theta);

    const auto sol = sdp::solve(p);
    REQUIRE(sol.status == sdp::Status::Optimal);
    CHECK(std::abs(sol.primal_obj - theta * theta) < kFidTol);

    sdp::Problem bad;
    const int bb = bad.add_block(d);
    CHECK_THROWS_AS(sdp::fidelity_constraint_block(bad, bb, pure, 1.2), PreconditionError);
    CHECK_THROWS_AS(sdp::fidelity_constraint_block(bad, bb, pure, -0.1), PreconditionError);
}

TEST_CASE("solver output is deterministic across repeated calls") {
    CounterRng rng(415);
    const Mat rho = random_density(rng, 3);
    const Mat G = random_full_rank_psd(rng, 3, 0.05, 1.0);
    const auto a = solve_scale_to_dominate(rho, G);
    const auto b = solve_scale_to_dominate(rho, G);
    CHECK(a.primal_obj == b.primal_obj);
    CHECK(a.dual_obj == b.dual_obj);
    CHECK(a.iterations == b.iterations);
    REQUIRE(a.X.size() == b.X.size());
    for (std::size_t k = 0; k < a.X.size(); ++k) CHECK((a.X[k] - b.X[k]).norm() == 0.0);
}

TEST_CASE("an empty constraint set with an unbounded objective is certified") {
    sdp::Problem p;
    p.direction = sdp::Direction::Maximize;
    const int bx = p.add_block(1);
    p.add_objective(bx, Mat::Identity(1, 1));
    const auto sol = sdp::solve(p);
    CHECK(sol.status == sdp::Status::InfeasibleDual);
}

TEST_CASE("a contradictory sign constraint is certified primal infeasible") {
    sdp::Problem p;
    const int bx = p.add_block(1);
    p.add_objective(bx, Mat::Identity(1, 1));
    auto& c = p.add_constraint(-1.0, sdp::Sense::LessEqual);
    c.terms.push_back({bx, Mat::Identity(1, 1)}); // x <= -1 with x >= 0
    const auto sol = sdp::solve(p);
    CHECK(sol.status == sdp::Status::InfeasiblePrimal);
}

TEST_CASE("multipliers and slacks satisfy the optimality conditions") {
    CounterRng rng(416);
    for (int trial = 0; trial < 6; ++trial) {
        const int d = 3;
        const Mat C = random_hermitian(rng, d);
        const Mat A1 = random_hermitian(rng, d);
        const double b1 = hs_inner(A1, identity(d)) / d + 0.1;

        sdp::Problem p;
        const int bx = p.add_block(d);
        p.add_objective(bx, C);
        auto& ctr = p.add_constraint(1.0);
        ctr.terms.push_back({bx, identity(d)});
        auto& cin = p.add_constraint(b1, sdp::Sense::LessEqual);
        cin.terms.push_back({bx, A1});

        const auto sol = sdp::solve(p);
        REQUIRE(sol.status == sdp::Status::Optimal);
        const Mat& X = sol.X[0];
        CHECK(min_eigenvalue(X) > -1e-8);
        CHECK(std::abs(hs_inner(identity(d), X) - 1.0) < 1e-7);
        const double ax = hs_inner(A1, X);
        CHECK(ax < b1 + 1e-7);
        // Minimization: multipliers on <= rows are nonpositive and
        // complementary with their slack.
        CHECK(sol.y(1) < 1e-8);
        CHECK(std::abs(sol.y(1) * (b1 - ax)) < 1e-5);
        // Weak duality and the reported dual slack.
        CHECK(sol.dual_obj < sol.primal_obj + 1e-7);
        const Mat S = C - sol.y(0) * identity(d) - sol.y(1) * A1;
        CHECK(min_eigenvalue(S) > -1e-6);
        CHECK((S - sol.S[0]).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("all-zero constraint rows are dropped or rejected") {
    sdp::Problem p;
    const int bx = p.add_block(1);
    p.add_objective(bx, Mat::Identity(1, 1));
    auto& lo = p.add_constraint(-2.0, sdp::Sense::LessEqual);
    lo.terms.push_back({bx, -Mat::Identity(1, 1)});
    auto& zero = p.add_constraint(0.0);
    zero.terms.push_back({bx, Mat::Zero(1, 1)});
    const auto sol = sdp::solve(p);
    REQUIRE(sol.status == sdp::Status::Optimal);
    CHECK(std::abs(sol.primal_obj - 2.0) < kTightTol);

    sdp::Problem q;
    const int bq = q.add_block(1);
    q.add_objective(bq, Mat::Identity(1, 1));
    auto& badrow = q.add_constraint(1.0);
    badrow.terms.push_back({bq, Mat::Zero(1, 1)});
    CHECK_THROWS_AS(sdp::solve(q), PreconditionError);
}
