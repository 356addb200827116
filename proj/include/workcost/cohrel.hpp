#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "workcost/linalg.hpp"
#include "workcost/process.hpp"

namespace workcost::cohrel {

// Which smoothing convention a value refers to. Z relaxes the implementing
// map inside the program (the mapped state only has to be eps-close to the
// target joint state); XBracket smooths the target joint state itself over an
// eps-ball first, which is not an SDP, so it is reported as a certified
// two-sided bracket instead of a single optimum.
enum class Smoothing { Z, XBracket };

std::string smoothing_name(Smoothing s);

// One evaluation of the coherent relative entropy. value_bits = -log2(alpha)
// where alpha is the optimal covering factor of the underlying program;
// primal_value / dual_value are the two sides of that program in the alpha
// scale, so weak duality reads dual_value <= primal_value + tolerance. The
// exact-proximity programs sit on the boundary of the feasible cone (they are
// never strictly feasible), so the dual side is the authoritative optimum and
// `gap` records how far the primal side got. `certificate` is the
// implementing map recovered from the solver iterate: trace-nonincreasing and
// feasible up to solver tolerances, embedded back into the caller's
// dimensions when supports were restricted.
//
// For XBracket results, `bracket` holds the certified (lower, upper)
// endpoints in bits, value_bits is their midpoint, gap is the bracket width
// in bits, and primal_value / dual_value carry the endpoints converted back
// to the alpha scale (primal from the lower endpoint, dual from the upper).
struct CohRelResult {
    double value_bits = 0.0;
    double primal_value = 0.0;
    double dual_value = 0.0;
    double gap = 0.0;
    std::optional<process::ChoiMap> certificate;
    double epsilon = 0.0;
    Smoothing smoothing = Smoothing::Z;
    std::optional<std::pair<double, double>> bracket;
};

// Exact (eps = 0) coherent relative entropy of the joint state rho on
// (output) (x) (mirror of input) relative to the weights gamma_x / gamma_xp:
// the largest y such that some trace-nonincreasing map T sends gamma_x below
// 2^{-y} gamma_xp while reproducing rho exactly from the mirror purification
// of its input marginal. Throws PreconditionError if rho is not a normalized
// state, if its marginals leak outside the weights' supports, or if either
// weight is zero.
CohRelResult cohrel_nonsmooth(const process::ProcessMatrix& rho,
                              const Mat& gamma_x, const Mat& gamma_xp);

// Smoothed value in the Z convention: the map only has to reproduce rho up to
// purified distance eps. Solved in purified form: the program variable lives
// on (output) (x) (mirror input) (x) (environment) and is pinned against a
// fixed purification of rho. env_dim = 0 picks the smallest valid
// environment (the support-restricted joint dimension); larger values and a
// nonzero purification_seed (which rotates the environment basis of the
// purification) must not change the value -- exercised by tests. Requires
// 0 <= eps < 1 and env_dim at least the restricted joint dimension.
CohRelResult cohrel_smooth_z(const process::ProcessMatrix& rho,
                             const Mat& gamma_x, const Mat& gamma_xp,
                             double eps, int env_dim = 0,
                             std::uint64_t purification_seed = 0);

// Same quantity through an equivalent purification-free program: the mapped
// state is constrained to have root fidelity at least sqrt(1 - eps^2) with
// rho directly (a fidelity epigraph block replaces the environment). Agrees
// with cohrel_smooth_z by construction; kept as an independent route for
// cross-checks and for many-copy studies where it is much smaller.
CohRelResult cohrel_smooth_z_direct(const process::ProcessMatrix& rho,
                                    const Mat& gamma_x, const Mat& gamma_xp,
                                    double eps);

// Smoothed value in the X convention (optimize over states eps-close to rho
// before evaluating). Returns a certified bracket: the lower endpoint is the
// best exact value over explicitly constructed nearby states (each verified
// to lie inside the eps-ball), the upper endpoint is the Z-smoothed value at
// 3*sqrt(eps). Requires 3*sqrt(eps) < 1; at eps = 0 the bracket collapses to
// the exact value.
CohRelResult cohrel_smooth_x_bracket(const process::ProcessMatrix& rho,
                                     const Mat& gamma_x, const Mat& gamma_xp,
                                     double eps);

// One bound comparison: `bound_bits` must sit above (is_upper) or below the
// computed value. margin >= 0 means satisfied with room; `holds` applies the
// check's tolerance.
struct BoundCheck {
    std::string name;
    double bound_bits = 0.0;
    double value_bits = 0.0;
    bool is_upper = false;
    double margin = 0.0;
    bool holds = false;
};

struct BoundsReport {
    double nonsmooth_bits = 0.0;
    double smooth_z_bits = 0.0;
    double epsilon = 0.0;
    std::vector<BoundCheck> checks;
    bool all_hold = false;
};

// Evaluates the instance and checks every applicable bound against the
// marginals' divergences: relative-entropy and max-divergence differences
// from above, robustness-minus-max-divergence from below, the support-weight
// window on both the exact and the smoothed value, and (for 0 < eps small
// enough) the smoothed difference estimates against the XBracket endpoints.
BoundsReport bounds_suite(const process::ProcessMatrix& rho,
                          const Mat& gamma_x, const Mat& gamma_xp, double eps);

// Outcome of one property checked over seeded random instances.
// worst_margin is the smallest margin seen (negative = violated before
// tolerance); failures counts trials beyond the property's tolerance.
struct PropertyResult {
    std::string name;
    int trials = 0;
    int failures = 0;
    double worst_margin = 0.0;
};

// Seeded random verification of the structural properties: shift under
// weight scaling, isometry invariance, data processing on the output,
// chain rules (channel composition and tripartite states), superadditivity
// for product instances, support restriction of the weights, antitone
// dependence on the weight ordering, nonnegativity for weight-sub-preserving
// processes, the product-state lower bound, and the strict-superadditivity
// gap of the level-swap pair. `trials` instances per property (the strict
// gap is a single fixed instance).
std::vector<PropertyResult> property_checks(std::uint64_t seed, int trials);

// Families with closed-form values, for cross-checking the programs.
enum class SpecialCase {
    Identity,            // identity process: value 0
    GibbsToGibbs,        // weight eigenprojections in and out
    GibbsToArbitrary,    // input marginal proportional to the input weight
    TrivialInput,        // |X| = 1: minus the max divergence of the output
    TrivialOutput,       // |X'| = 1: the hypothesis-testing-free min divergence
    PureEigenstateOutput,// output pinned to a weight eigenvector
    PureEigenstateInput, // input pinned to a weight eigenvector
};

const char* special_case_name(SpecialCase kind);

struct SpecialCaseInstance {
    process::ProcessMatrix rho;
    Mat gamma_x;
    Mat gamma_xp;
    double epsilon = 0.0;
    double closed_form_bits = 0.0;
};

// Draws a seeded instance of the family together with its closed-form value.
// Marginals are coupled with seeded classical correlations wherever the
// closed form is correlation-independent, so agreement with the SDP is a
// genuine check. eps != 0 is only admitted for GibbsToGibbs (the family whose
// smoothed value is known exactly); other kinds throw PreconditionError.
SpecialCaseInstance special_case(SpecialCase kind, std::uint64_t seed,
                                 double eps = 0.0);

// One row of a many-copy study at copy count n. Values are per copy;
// `limit` is the relative-entropy difference of the marginals (the
// asymptotic value), `gap` is the solver gap of the evaluation, and
// runtime_ms the wall-clock time of the solve.
struct AepRow {
    int n = 0;
    double value_per_n = 0.0;
    double lower_per_n = 0.0;
    double upper_per_n = 0.0;
    double limit = 0.0;
    double gap = 0.0;
    double runtime_ms = 0.0;
};

// Evaluates the Z-smoothed value on n-fold products of the instance for
// n = 1..n_max together with per-copy certified bounds. Guards: the joint
// dimension (|X'||X|)^n must stay at most 256, and mixed joint states are
// limited to copy counts where the proximity block stays small; violations
// throw PreconditionError.
std::vector<AepRow> aep_study(const process::ProcessMatrix& rho,
                              const Mat& gamma_x, const Mat& gamma_xp,
                              double eps, int n_max);

// CSV with header n,value_per_n,lower_per_n,upper_per_n,limit,gap,runtime_ms.
void write_aep_csv(const std::string& path, const std::vector<AepRow>& rows);

// Unit conversions: values are computed in bits; multiply by ln 2 for nats,
// by kT ln 2 for work.
double bits_to_nats(double bits);
double bits_to_work(double bits, double kT);

} // namespace workcost::cohrel
