#pragma once

#include <optional>
#include <vector>

#include "workcost/linalg.hpp"

namespace workcost::sdp {

enum class Sense { Equal, LessEqual };
enum class Direction { Minimize, Maximize };
enum class Status { Optimal, MaxIter, InfeasiblePrimal, InfeasibleDual, Numerical };

const char* status_name(Status s);

// One Hermitian coefficient acting on one PSD block; constraints and the
// objective are sparse lists of such terms.
struct Term {
    int block = 0;
    Mat coeff;
};

struct Constraint {
    std::vector<Term> terms;
    double rhs = 0.0;
    Sense sense = Sense::Equal;
};

// min/max  sum_b <C_b, X_b>   s.t.  sum_b <A_{i,b}, X_b> {=, <=} b_i,  X_b >= 0
struct Problem {
    std::vector<int> block_dims;
    std::vector<Term> objective;
    std::vector<Constraint> constraints;
    Direction direction = Direction::Minimize;

    int add_block(int d) {
        block_dims.push_back(d);
        return static_cast<int>(block_dims.size()) - 1;
    }
    void add_objective(int block, Mat coeff) { objective.push_back({block, std::move(coeff)}); }
    Constraint& add_constraint(double rhs, Sense sense = Sense::Equal) {
        constraints.push_back({{}, rhs, sense});
        return constraints.back();
    }
};

struct Options {
    double gap_tol = 1e-8;
    double feas_tol = 1e-8;
    int max_iter = 200;
};

struct Solution {
    std::vector<Mat> X; // primal blocks (PSD)
    Eigen::VectorXd y;  // dual multipliers, one per constraint (in input order)
    std::vector<Mat> S; // dual slack blocks
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double gap = 0.0; // |primal - dual| / (1 + max(|primal|, |dual|))
    Status status = Status::Numerical;
    int iterations = 0;
};

// Infeasible-start primal-dual interior point with Nesterov-Todd scaling and
// Mehrotra predictor-corrector; inequality constraints get 1x1 slack blocks
// internally. Deterministic for a given problem and options.
Solution solve(const Problem& p, const Options& opts = {});

// Adds a 2d x 2d PSD block G tied to the variable block `rho_hat_block` (top
// left) and the fixed state `rho_fixed` (bottom right), plus the constraint
// Re tr G_{12} >= threshold; feasibility of the augmented problem is then
// equivalent to ||sqrt(rho_hat) sqrt(rho_fixed)||_1 >= threshold. Returns the
// index of the G block. Throws unless 0 <= threshold <= 1.
int fidelity_constraint_block(Problem& p, int rho_hat_block, const Mat& rho_fixed,
                              double threshold);

} // namespace workcost::sdp
