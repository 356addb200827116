#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "workcost/linalg.hpp"
#include "workcost/rng.hpp"

namespace workcost::process {

// Whether a map is exactly trace-preserving or merely trace-nonincreasing.
enum class TpClass { TracePreserving, TraceNonincreasing };

std::string tp_class_name(TpClass c);
TpClass tp_class_from_name(const std::string& name);

// A completely positive map stored as its Choi matrix on (output) (x) (mirror
// of input), built with the unnormalized maximally entangled pairing so that
// apply(E, rho) = tr_mirror[ E (I (x) transpose(rho)) ].
struct ChoiMap {
    Mat choi;
    std::vector<int> dims_out;
    std::vector<int> dims_in;
    TpClass tp_class = TpClass::TraceNonincreasing;

    int dim_out() const;
    int dim_in() const;
};

// Checks Hermiticity, complete positivity (choi >= -1e-9) and the trace
// condition (tr_out(choi) <= I + 1e-9; equal to I within 1e-9 when
// trace-preserving). Throws PreconditionError.
void require_valid(const ChoiMap& E);

// Builds a Choi map from the action rho |-> fn(rho) on matrix units.
ChoiMap choi_from_action(const std::function<Mat(const Mat&)>& action, int dim_in, int dim_out,
                         TpClass tp_class);

ChoiMap identity_channel(int d);

// Channel action, adjoint action, adjoint as a map, and composition.
Mat apply(const ChoiMap& E, const Mat& rho);
Mat apply_adjoint(const ChoiMap& E, const Mat& m);
ChoiMap adjoint(const ChoiMap& E);
ChoiMap compose(const ChoiMap& e2, const ChoiMap& e1);

// Kraus decomposition via eigenvectors of the Choi matrix (eigenvalues below
// the rank cutoff are dropped).
std::vector<Mat> kraus_operators(const ChoiMap& E);

// Applies E to the first tensor factor of a state on (input (x) reference).
Mat apply_left(const ChoiMap& E, const Mat& rho, int dim_ref);

// Joint state encoding a channel together with its input: the mirror square
// root of sigma applied to both sides of the Choi matrix. Its mirror-side
// marginal is transpose(sigma) exactly when E is trace-preserving.
struct ProcessMatrix {
    Mat rho; // on (output) (x) (mirror of input)
    std::vector<int> dims_out;
    std::vector<int> dims_in;
};
ProcessMatrix process_matrix(const ChoiMap& E, const Mat& sigma_x);

// Smallest alpha with apply(T, gamma_in) <= alpha * gamma_out. Errors if the
// image leaks outside the support of gamma_out.
double gamma_factor(const ChoiMap& T, const Mat& gamma_in, const Mat& gamma_out);
bool is_gamma_subpreserving(const ChoiMap& T, const Mat& gamma_in, const Mat& gamma_out);

// Weight-operator battery: charge states are P Gamma P / tr(P Gamma) for
// projectors commuting with Gamma; the stored value is -log2 tr(P Gamma).
struct BatterySpec {
    Mat gamma_w;
    Mat p_in;
    Mat p_out;
};
void require_valid(const BatterySpec& b);
Mat battery_state(const Mat& p, const Mat& gamma);
double battery_charge(const Mat& p, const Mat& gamma);

// Dilation of a trace-nonincreasing sub-preserving map on K to a
// trace-preserving, weight-preserving map on K (x) L (x) Q, where Q is a qubit
// ancilla with weights g_i = 1 and g_f = g_l / g_k (so g_l g_i = g_k g_f holds
// by construction). The original map is recovered by preparing |l i> on L Q
// and post-selecting |k f> on K Q.
struct DilationResult {
    ChoiMap phi;  // K L Q -> K L Q, trace-preserving
    Mat gamma_q;  // 2x2, diagonal in the {|i>, |f>} = {e0, e1} basis
    Vec k_vec;    // chosen eigenvector of gamma_k
    Vec l_vec;    // chosen eigenvector of gamma_l
    double g_k = 0.0;
    double g_l = 0.0;
    double g_i = 0.0;
    double g_f = 0.0;
};
DilationResult dilate(const ChoiMap& phi_tilde, const Mat& gamma_k, const Mat& gamma_l,
                      int k_index, int l_index);

// Charge-for-work trade: wraps T into a sub-preserving map on X W -> X' W that
// consumes the battery transition p_in -> p_out. Requires the charge budget
// gamma_factor(T) <= tr(p_out gamma_w) / tr(p_in gamma_w).
ChoiMap battery_implementation(const ChoiMap& T, const Mat& gamma_in, const Mat& gamma_out,
                               const BatterySpec& battery);

// Inverse direction: given a joint map on X A -> X' A', feed the input battery
// state, project the output battery on p_out, and trace it out. The result
// obeys gamma_factor(T) <= tr(p_out gamma_a_out) / tr(p_in gamma_a_in) times
// the joint map's factor.
ChoiMap extract_system_map(const ChoiMap& phi, const Mat& p_in, const Mat& gamma_a_in,
                           const Mat& p_out, const Mat& gamma_a_out);

// Canonical recovery map gamma_a^{1/2} F^dag(gamma_b^{-1/2} (.) gamma_b^{-1/2})
// gamma_a^{1/2} for a trace-preserving F, with gamma_b = F(gamma_a) required
// full rank (restrict supports first otherwise). Trace-preserving and maps
// gamma_b back to gamma_a.
ChoiMap petz_recovery(const ChoiMap& F, const Mat& gamma_a);

// Seeded generators (deterministic; safe for concurrent use with distinct
// seeds). The channel comes from a Haar isometry into output (x) environment.
ChoiMap random_channel(std::uint64_t seed, int dim_in, int dim_out, int env_dim);
Mat random_state(std::uint64_t seed, int dim);

enum class GammaKind { Thermal, Generic };
// Thermal: exp(-beta H) for a spectrally clipped random Hermitian H and beta
// drawn in [0.1, 2]; generic: random eigenbasis with eigenvalues in [0.01, 1].
// Both keep condition numbers small enough for well-behaved solves.
Mat random_gamma(std::uint64_t seed, int dim, GammaKind kind);

} // namespace workcost::process
