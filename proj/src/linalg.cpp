#include "workcost/linalg.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "workcost/errors.hpp"

namespace workcost {

namespace {

double max_abs(const Mat& A) {
    return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

// Frobenius norm of the strictly off-diagonal part.
double off_diag_norm(const Mat& B) {
    double acc = 0.0;
    const int n = static_cast<int>(B.rows());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (i != j) acc += std::norm(B(i, j));
    return std::sqrt(acc);
}

} // namespace

bool is_hermitian(const Mat& A, double tol) {
    if (A.rows() != A.cols()) return false;
    const double scale = std::max(1.0, max_abs(A));
    return max_abs(Mat(A - A.adjoint())) <= tol * scale;
}

void require_hermitian(const Mat& A, const char* where, double tol) {
    if (!is_hermitian(A, tol))
        throw PreconditionError(std::string(where) + ": input is not Hermitian within tolerance");
}

double hs_inner(const Mat& A, const Mat& B) {
    return (A.cwiseProduct(B.conjugate())).sum().real();
}

PsdDecomposition eig_hermitian(const Mat& A, double rank_tol) {
    require_hermitian(A, "eig_hermitian");
    const int n = static_cast<int>(A.rows());

    // Work on the Hermitized copy so round-off in the input cannot bias sweeps.
    Mat B = 0.5 * (A + A.adjoint());
    Mat V = Mat::Identity(n, n);

    if (n > 1) {
        const double fro = std::max(B.norm(), 1e-300);
        const double stop = 1e-14 * fro;
        const int max_sweeps = 60;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            if (off_diag_norm(B) <= stop) break;
            for (int p = 0; p < n - 1; ++p) {
                for (int q = p + 1; q < n; ++q) {
                    const cplx g = B(p, q);
                    const double ag = std::abs(g);
                    if (ag <= 1e-300) continue;
                    const cplx u = g / ag;
                    const double tau = (B(q, q).real() - B(p, p).real()) / (2.0 * ag);
                    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = t * c;

                    // Plane rotation J = [[c, s], [-conj(u) s, conj(u) c]]
                    // applied as B <- J^dag B J, V <- V J.
                    const cplx ub = std::conj(u);
                    {
                        Vec colp = B.col(p), colq = B.col(q);
                        B.col(p) = c * colp - ub * s * colq;
                        B.col(q) = s * colp + ub * c * colq;
                    }
                    {
                        Eigen::RowVectorXcd rowp = B.row(p), rowq = B.row(q);
                        B.row(p) = c * rowp - u * s * rowq;
                        B.row(q) = s * rowp + u * c * rowq;
                    }
                    {
                        Vec colp = V.col(p), colq = V.col(q);
                        V.col(p) = c * colp - ub * s * colq;
                        V.col(q) = s * colp + ub * c * colq;
                    }
                    B(p, q) = 0.0;
                    B(q, p) = 0.0;
                    B(p, p) = B(p, p).real();
                    B(q, q) = B(q, q).real();
                }
            }
        }
    }

    // Sort nonincreasing; stable on ties for determinism.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int i, int j) { return B(i, i).real() > B(j, j).real(); });

    PsdDecomposition out;
    out.eigenvalues = RVec(n);
    out.eigenvectors = Mat(n, n);
    for (int k = 0; k < n; ++k) {
        out.eigenvalues(k) = B(idx[k], idx[k]).real();
        out.eigenvectors.col(k) = V.col(idx[k]);
    }
    double top = 0.0;
    for (int k = 0; k < n; ++k) top = std::max(top, std::abs(out.eigenvalues(k)));
    out.rank = 0;
    for (int k = 0; k < n; ++k)
        if (out.eigenvalues(k) > rank_tol * top) ++out.rank;
    return out;
}

Mat psd_fn(const Mat& A, PsdFn fn, double rank_tol) {
    const auto eig = eig_hermitian(A, rank_tol);
    const int n = static_cast<int>(A.rows());
    const double top = eig.eigenvalues.size() ? std::max(0.0, eig.eigenvalues(0)) : 0.0;
    if (eig.eigenvalues.size() && eig.eigenvalues(eig.eigenvalues.size() - 1) < -1e-10 * std::max(1.0, top))
        throw PreconditionError("psd_fn: input has a negative eigenvalue beyond tolerance");
    if (top == 0.0 && (fn == PsdFn::Pinv || fn == PsdFn::InvSqrtPinv || fn == PsdFn::Log2OnSupport))
        throw PreconditionError("psd_fn: pinv/log requested on an identically-zero matrix");

    const double thresh = rank_tol * top;
    RVec mapped(n);
    for (int k = 0; k < n; ++k) {
        const double lam = eig.eigenvalues(k);
        if (lam <= thresh) {
            mapped(k) = 0.0;
            continue;
        }
        switch (fn) {
            case PsdFn::Sqrt: mapped(k) = std::sqrt(lam); break;
            case PsdFn::Pinv: mapped(k) = 1.0 / lam; break;
            case PsdFn::InvSqrtPinv: mapped(k) = 1.0 / std::sqrt(lam); break;
            case PsdFn::Log2OnSupport: mapped(k) = std::log2(lam); break;
        }
    }
    return eig.eigenvectors * mapped.asDiagonal() * eig.eigenvectors.adjoint();
}

Mat support_projector(const Mat& A, double rank_tol) {
    const auto eig = eig_hermitian(A, rank_tol);
    const int n = static_cast<int>(A.rows());
    Mat P = Mat::Zero(n, n);
    for (int k = 0; k < eig.rank; ++k)
        P += eig.eigenvectors.col(k) * eig.eigenvectors.col(k).adjoint();
    return P;
}

Mat tensor(const Mat& A, const Mat& B) {
    const int ra = static_cast<int>(A.rows()), ca = static_cast<int>(A.cols());
    const int rb = static_cast<int>(B.rows()), cb = static_cast<int>(B.cols());
    Mat out(ra * rb, ca * cb);
    for (int i = 0; i < ra; ++i)
        for (int j = 0; j < ca; ++j)
            out.block(i * rb, j * cb, rb, cb) = A(i, j) * B;
    return out;
}

Mat tensor(const Mat& A, const Mat& B, const Mat& C) { return tensor(tensor(A, B), C); }

namespace {

// Decodes flat index into per-subsystem digits (leftmost most significant).
void decode(int flat, const std::vector<int>& dims, std::vector<int>& digits) {
    for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
        digits[k] = flat % dims[k];
        flat /= dims[k];
    }
}

int encode(const std::vector<int>& digits, const std::vector<int>& dims) {
    int flat = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) flat = flat * dims[k] + digits[k];
    return flat;
}

} // namespace

Mat partial_trace(const Mat& A, const std::vector<int>& dims, const std::vector<int>& keep) {
    const int total = std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
    if (A.rows() != total || A.cols() != total)
        throw PreconditionError("partial_trace: dims do not match matrix size");
    std::vector<int> traced;
    std::vector<bool> kept(dims.size(), false);
    for (int k : keep) {
        if (k < 0 || k >= static_cast<int>(dims.size()))
            throw PreconditionError("partial_trace: keep index out of range");
        kept[k] = true;
    }
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (!kept[k]) traced.push_back(static_cast<int>(k));

    int dk = 1, dt = 1;
    for (int k : keep) dk *= dims[k];
    for (int k : traced) dt *= dims[k];

    Mat out = Mat::Zero(dk, dk);
    std::vector<int> digits_row(dims.size()), digits_col(dims.size());
    std::vector<int> keep_dims, traced_dims;
    for (int k : keep) keep_dims.push_back(dims[k]);
    for (int k : traced) traced_dims.push_back(dims[k]);

    std::vector<int> kr(keep.size()), kc(keep.size()), tr(traced.size());
    for (int i = 0; i < dk; ++i) {
        decode(i, keep_dims, kr);
        for (int j = 0; j < dk; ++j) {
            decode(j, keep_dims, kc);
            cplx acc = 0.0;
            for (int t = 0; t < dt; ++t) {
                decode(t, traced_dims, tr);
                for (std::size_t k = 0; k < keep.size(); ++k) {
                    digits_row[keep[k]] = kr[k];
                    digits_col[keep[k]] = kc[k];
                }
                for (std::size_t k = 0; k < traced.size(); ++k) {
                    digits_row[traced[k]] = tr[k];
                    digits_col[traced[k]] = tr[k];
                }
                acc += A(encode(digits_row, dims), encode(digits_col, dims));
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Mat permute_systems(const Mat& A, const std::vector<int>& dims, const std::vector<int>& perm) {
    const int total = std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
    if (A.rows() != total || A.cols() != total)
        throw PreconditionError("permute_systems: dims do not match matrix size");
    if (perm.size() != dims.size())
        throw PreconditionError("permute_systems: permutation length mismatch");

    std::vector<int> out_dims(dims.size());
    for (std::size_t k = 0; k < perm.size(); ++k) out_dims[k] = dims[perm[k]];

    // Build the index map new_flat -> old_flat.
    std::vector<int> map(total);
    std::vector<int> out_digits(dims.size()), in_digits(dims.size());
    for (int f = 0; f < total; ++f) {
        decode(f, out_dims, out_digits);
        for (std::size_t k = 0; k < perm.size(); ++k) in_digits[perm[k]] = out_digits[k];
        map[f] = encode(in_digits, dims);
    }
    Mat out(total, total);
    for (int i = 0; i < total; ++i)
        for (int j = 0; j < total; ++j) out(i, j) = A(map[i], map[j]);
    return out;
}

Mat mirror_transpose(const Mat& A) {
    if (A.rows() != A.cols()) throw PreconditionError("mirror_transpose: matrix must be square");
    return A.transpose();
}

Vec entangled_ket(const Mat& sigma) {
    require_hermitian(sigma, "entangled_ket");
    if (std::abs(sigma.trace().real() - 1.0) > 1e-10 || std::abs(sigma.trace().imag()) > 1e-10)
        throw PreconditionError("entangled_ket: input is not normalized (trace must be 1)");
    const int d = static_cast<int>(sigma.rows());
    const Mat S = psd_sqrt(sigma);
    Vec v(d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) v(i * d + j) = S(i, j);
    return v;
}

double trace_norm(const Mat& M) {
    if (is_hermitian(M, 1e-12)) {
        const auto eig = eig_hermitian(0.5 * (M + M.adjoint()));
        double acc = 0.0;
        for (int k = 0; k < eig.eigenvalues.size(); ++k) acc += std::abs(eig.eigenvalues(k));
        return acc;
    }
    const Mat MtM = M.adjoint() * M;
    const auto eig = eig_hermitian(0.5 * (MtM + MtM.adjoint()));
    double acc = 0.0;
    for (int k = 0; k < eig.eigenvalues.size(); ++k) acc += std::sqrt(std::max(0.0, eig.eigenvalues(k)));
    return acc;
}

double op_norm(const Mat& M) {
    const Mat MtM = M.adjoint() * M;
    const auto eig = eig_hermitian(0.5 * (MtM + MtM.adjoint()));
    return eig.eigenvalues.size() ? std::sqrt(std::max(0.0, eig.eigenvalues(0))) : 0.0;
}

double op_norm_hermitian(const Mat& A) {
    const auto eig = eig_hermitian(A);
    double m = 0.0;
    for (int k = 0; k < eig.eigenvalues.size(); ++k) m = std::max(m, std::abs(eig.eigenvalues(k)));
    return m;
}

double min_eigenvalue(const Mat& A) {
    const auto eig = eig_hermitian(A);
    return eig.eigenvalues(eig.eigenvalues.size() - 1);
}

namespace {

void check_subnormalized(const Mat& rho, const char* where) {
    require_hermitian(rho, where);
    if (min_eigenvalue(rho) < -1e-9 * std::max(1.0, max_abs(rho)))
        throw PreconditionError(std::string(where) + ": state has a negative eigenvalue");
    if (rho.trace().real() > 1.0 + 1e-9)
        throw PreconditionError(std::string(where) + ": state trace exceeds 1 beyond tolerance");
}

} // namespace

double fidelity(const Mat& rho, const Mat& sigma) {
    check_subnormalized(rho, "fidelity");
    check_subnormalized(sigma, "fidelity");
    const Mat sr = psd_sqrt(rho);
    // ||sqrt(rho) sqrt(sigma)||_1 = sum of sqrt eigenvalues of sr * sigma * sr.
    const Mat m = sr * sigma * sr;
    const auto eig = eig_hermitian(0.5 * (m + m.adjoint()));
    double root = 0.0;
    for (int k = 0; k < eig.eigenvalues.size(); ++k)
        root += std::sqrt(std::max(0.0, eig.eigenvalues(k)));
    const double a = std::max(0.0, 1.0 - rho.trace().real());
    const double b = std::max(0.0, 1.0 - sigma.trace().real());
    return std::min(1.0, root + std::sqrt(a * b));
}

double purified_distance(const Mat& rho, const Mat& sigma) {
    const double f = fidelity(rho, sigma);
    return std::sqrt(std::max(0.0, 1.0 - f * f));
}

double trace_distance(const Mat& rho, const Mat& sigma) {
    check_subnormalized(rho, "trace_distance");
    check_subnormalized(sigma, "trace_distance");
    return 0.5 * trace_norm(rho - sigma) + 0.5 * std::abs(rho.trace().real() - sigma.trace().real());
}

Mat match_marginal(const Mat& rho_AB, const Mat& rho_tilde_A, int dim_A, int dim_B) {
    if (rho_AB.rows() != dim_A * dim_B)
        throw PreconditionError("match_marginal: dims do not match the joint state");
    check_subnormalized(rho_AB, "match_marginal");
    check_subnormalized(rho_tilde_A, "match_marginal");
    if (std::abs(rho_AB.trace().real() - 1.0) > 1e-8 || std::abs(rho_tilde_A.trace().real() - 1.0) > 1e-8)
        throw PreconditionError("match_marginal: inputs must be normalized");

    const Mat rho_A = partial_trace(rho_AB, {dim_A, dim_B}, {0});

    // Jordan split of the marginal difference.
    const Mat delta = rho_tilde_A - rho_A;
    const auto eig = eig_hermitian(0.5 * (delta + delta.adjoint()));
    Mat delta_plus = Mat::Zero(dim_A, dim_A);
    for (int k = 0; k < dim_A; ++k)
        if (eig.eigenvalues(k) > 0.0)
            delta_plus += eig.eigenvalues(k) * eig.eigenvectors.col(k) * eig.eigenvectors.col(k).adjoint();

    const Mat A = rho_A + delta_plus; // = rho_tilde_A + delta_minus
    const Mat M = psd_sqrt(rho_tilde_A) * psd_inv_sqrt(A);

    const Mat IA = Mat::Identity(dim_A, dim_A);
    const Mat IB = Mat::Identity(dim_B, dim_B);
    const Mat MI = tensor(M, IB);
    Mat out = MI * rho_AB * MI.adjoint();

    // Filler restores exactly the weight the contraction removed.
    const Mat leftover = tensor(Mat(IA - M.adjoint() * M), IB) * rho_AB;
    const Mat N_B = partial_trace(0.5 * (leftover + leftover.adjoint()), {dim_A, dim_B}, {1});
    const Mat MdM = M * delta_plus * M.adjoint();
    const double w = MdM.trace().real();
    const Mat xi_A = (w > 1e-14) ? Mat(MdM / w) : Mat(IA / static_cast<double>(dim_A));
    out += tensor(xi_A, N_B);
    return 0.5 * (out + out.adjoint());
}

Mat project_normalize(const Mat& rho, const Mat& Pi) {
    const double w = (Pi * rho).trace().real();
    if (w <= 1e-14) throw PreconditionError("project_normalize: projected weight is zero");
    Mat out = Pi * rho * Pi / w;
    return 0.5 * (out + out.adjoint());
}

Mat random_gaussian_matrix(CounterRng& rng, int rows, int cols) {
    Mat G(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i)
            G(i, j) = cplx(rng.next_gaussian(), rng.next_gaussian()) / std::sqrt(2.0);
    return G;
}

Mat random_isometry(CounterRng& rng, int rows, int cols) {
    if (rows < cols) throw PreconditionError("random_isometry: need rows >= cols");
    const Mat G = random_gaussian_matrix(rng, rows, cols);
    Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ() * Mat::Identity(rows, cols);
    const Mat R = qr.matrixQR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
    // Fix phases so the distribution is exactly Haar (and the output unique).
    for (int j = 0; j < cols; ++j) {
        const cplx r = R(j, j);
        const double ar = std::abs(r);
        Q.col(j) *= (ar > 0.0) ? cplx(r / ar) : cplx(1.0);
    }
    return Q;
}

Mat random_unitary(CounterRng& rng, int d) { return random_isometry(rng, d, d); }

Mat random_density(CounterRng& rng, int d, int rank) {
    if (rank <= 0 || rank > d) rank = d;
    const Mat G = random_gaussian_matrix(rng, d, rank);
    Mat W = G * G.adjoint();
    W /= W.trace().real();
    return 0.5 * (W + W.adjoint());
}

Vec random_ket(CounterRng& rng, int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = cplx(rng.next_gaussian(), rng.next_gaussian());
    v /= v.norm();
    return v;
}

Mat random_hermitian(CounterRng& rng, int d) {
    const Mat G = random_gaussian_matrix(rng, d, d);
    return 0.5 * (G + G.adjoint());
}

void for_each_hermitian_basis(int d, const std::function<void(const Mat&)>& fn) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < d; ++k) {
        Mat E = Mat::Zero(d, d);
        E(k, k) = 1.0;
        fn(E);
    }
    for (int k = 0; k < d; ++k) {
        for (int l = k + 1; l < d; ++l) {
            Mat E = Mat::Zero(d, d);
            E(k, l) = inv_sqrt2;
            E(l, k) = inv_sqrt2;
            fn(E);
            E(k, l) = cplx(0.0, inv_sqrt2);
            E(l, k) = cplx(0.0, -inv_sqrt2);
            fn(E);
        }
    }
}

} // namespace workcost
