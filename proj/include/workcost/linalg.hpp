#pragma once

#include <Eigen/Core>

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "workcost/rng.hpp"

namespace workcost {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// All support / pseudo-inverse / rank decisions flow through this constant,
// relative to the largest eigenvalue magnitude.
inline constexpr double kRankTol = 1e-9;

// Tolerance for accepting a matrix as Hermitian / a state as normalized.
inline constexpr double kHermTol = 1e-9;

// Labeled tensor factors; the leftmost label is the most significant index
// (row-major Kronecker convention).
struct SystemDims {
    struct System {
        std::string label;
        int d = 1;
    };
    std::vector<System> systems;

    int total_dim() const {
        int n = 1;
        for (const auto& s : systems) n *= s.d;
        return n;
    }
    std::vector<int> dims() const {
        std::vector<int> out;
        out.reserve(systems.size());
        for (const auto& s : systems) out.push_back(s.d);
        return out;
    }
};

// Eigendecomposition of a Hermitian matrix: eigenvalues nonincreasing,
// eigenvector columns unitary, rank counted above kRankTol * max eigenvalue.
struct PsdDecomposition {
    RVec eigenvalues;
    Mat eigenvectors;
    int rank = 0;
};

// ---- eigensolver ------------------------------------------------------------

// Cyclic Jacobi for complex Hermitian matrices (deterministic sweep order).
// Throws PreconditionError if A is not Hermitian within tolerance.
PsdDecomposition eig_hermitian(const Mat& A, double rank_tol = kRankTol);

// ---- spectral functions -----------------------------------------------------

enum class PsdFn { Sqrt, Pinv, InvSqrtPinv, Log2OnSupport };

// Applies fn to the eigenvalues above the rank threshold; zero eigenvalues map
// to zero (support convention). Input must satisfy A >= -1e-10; small negative
// eigenvalues are clamped to zero.
Mat psd_fn(const Mat& A, PsdFn fn, double rank_tol = kRankTol);

inline Mat psd_sqrt(const Mat& A) { return psd_fn(A, PsdFn::Sqrt); }
inline Mat psd_pinv(const Mat& A) { return psd_fn(A, PsdFn::Pinv); }
inline Mat psd_inv_sqrt(const Mat& A) { return psd_fn(A, PsdFn::InvSqrtPinv); }
inline Mat psd_log2(const Mat& A) { return psd_fn(A, PsdFn::Log2OnSupport); }

Mat support_projector(const Mat& A, double rank_tol = kRankTol);

// ---- tensor structure -------------------------------------------------------

Mat tensor(const Mat& A, const Mat& B);
Mat tensor(const Mat& A, const Mat& B, const Mat& C);

// Traces out every subsystem not listed in `keep`; `keep` holds subsystem
// indices (referring to `dims`) in increasing order, and the output factors
// stay in that order.
Mat partial_trace(const Mat& A, const std::vector<int>& dims, const std::vector<int>& keep);

// Reorders tensor factors: entry perm[k] is the input subsystem placed at
// output slot k.
Mat permute_systems(const Mat& A, const std::vector<int>& dims, const std::vector<int>& perm);

// Entrywise transpose in the fixed computational basis (an involution that
// preserves eigenvalues); used to move operators between X and its mirror R_X.
Mat mirror_transpose(const Mat& A);

// |sigma>_{X R_X} with <ij|sigma> = (sigma^{1/2})_{ij}; reduced states are
// sigma on X and mirror_transpose(sigma) on R_X. Requires tr(sigma) = 1.
Vec entangled_ket(const Mat& sigma);

// ---- norms and metrics ------------------------------------------------------

double trace_norm(const Mat& M);          // sum of singular values
double op_norm(const Mat& M);             // largest singular value
double op_norm_hermitian(const Mat& A);   // largest |eigenvalue|

// Generalized fidelity / purified distance / trace distance for subnormalized
// states (traces may be < 1; traces above 1 + 1e-9 are rejected):
//   F = ||sqrt(rho) sqrt(sigma)||_1 + sqrt((1-tr rho)(1-tr sigma))
//   P = sqrt(1 - F^2)
//   D = ||rho - sigma||_1 / 2 + |tr rho - tr sigma| / 2
double fidelity(const Mat& rho, const Mat& sigma);
double purified_distance(const Mat& rho, const Mat& sigma);
double trace_distance(const Mat& rho, const Mat& sigma);

// ---- state surgery ----------------------------------------------------------

// Adjusts the A-marginal of rho_AB to rho_tilde_A exactly while keeping the
// B-marginal exactly, moving the state by at most 2*sqrt(2*delta) in purified
// distance where delta = D(rho_tilde_A, rho_A). Constructive (no SDP): Jordan
// split of the marginal difference plus a filler state.
Mat match_marginal(const Mat& rho_AB, const Mat& rho_tilde_A, int dim_A, int dim_B);

// Pi rho Pi / tr(Pi rho); throws if tr(Pi rho) is not positive. Satisfies the
// gentle-measurement bound P(out, rho) <= sqrt(2 eps)/sqrt(1 - eps) with
// eps = 1 - tr(Pi rho).
Mat project_normalize(const Mat& rho, const Mat& Pi);

// ---- random instances -------------------------------------------------------

Mat random_gaussian_matrix(CounterRng& rng, int rows, int cols);
// Haar unitary via QR of a complex Gaussian with phase-fixed R diagonal.
Mat random_unitary(CounterRng& rng, int d);
// Columns form an isometry C^cols -> C^rows (requires rows >= cols).
Mat random_isometry(CounterRng& rng, int rows, int cols);
// Normalized Wishart state of the given rank (default full rank).
Mat random_density(CounterRng& rng, int d, int rank = 0);
Vec random_ket(CounterRng& rng, int d);
Mat random_hermitian(CounterRng& rng, int d);

// ---- small helpers ----------------------------------------------------------

inline Mat identity(int d) { return Mat::Identity(d, d); }

// Real Hilbert-Schmidt inner product tr(A B) for Hermitian A, B.
double hs_inner(const Mat& A, const Mat& B);

bool is_hermitian(const Mat& A, double tol = kHermTol);
void require_hermitian(const Mat& A, const char* where, double tol = kHermTol);

// max |entry| of A - A restricted to PSD checks: smallest eigenvalue.
double min_eigenvalue(const Mat& A);

// Enumerates an orthonormal Hermitian basis of d x d matrices (d^2 elements:
// diagonal units, symmetric and antisymmetric pairs scaled by 1/sqrt(2)) and
// calls fn on each.
void for_each_hermitian_basis(int d, const std::function<void(const Mat&)>& fn);

} // namespace workcost
