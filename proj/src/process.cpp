#include "workcost/process.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "workcost/errors.hpp"

namespace workcost::process {

namespace {

constexpr double kCpTol = 1e-9;
constexpr double kTraceCondTol = 1e-9;
constexpr double kCommuteTol = 1e-9;

int product(const std::vector<int>& dims) {
    return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
}

Mat hermitize(const Mat& A) { return 0.5 * (A + A.adjoint()); }

void require_psd_weight(const Mat& gamma, const char* where) {
    require_hermitian(gamma, where);
    if (min_eigenvalue(gamma) < -1e-10)
        throw PreconditionError(std::string(where) + ": weight operator must be positive semidefinite");
}

void require_density(const Mat& rho, const char* where) {
    require_hermitian(rho, where);
    if (std::abs(std::real(rho.trace()) - 1.0) > 1e-7)
        throw PreconditionError(std::string(where) + ": state must be normalized");
    if (min_eigenvalue(rho) < -1e-9)
        throw PreconditionError(std::string(where) + ": state must be positive semidefinite");
}

void require_projector(const Mat& p, const Mat& gamma, const char* where) {
    require_hermitian(p, where);
    if (op_norm_hermitian(hermitize(p * p - p)) > 1e-9)
        throw PreconditionError(std::string(where) + ": battery operator must be a projector");
    const Mat comm = p * gamma - gamma * p;
    if (op_norm(comm) > kCommuteTol)
        throw PreconditionError(std::string(where) +
                                ": battery projector must commute with the weight operator");
}

Mat basis_unit(int d, int u, int v) {
    Mat E = Mat::Zero(d, d);
    E(u, v) = 1.0;
    return E;
}

Vec basis_ket(int d, int k) {
    Vec e = Vec::Zero(d);
    e(k) = 1.0;
    return e;
}

} // namespace

std::string tp_class_name(TpClass c) {
    return c == TpClass::TracePreserving ? "trace_preserving" : "trace_nonincreasing";
}

TpClass tp_class_from_name(const std::string& name) {
    if (name == "trace_preserving") return TpClass::TracePreserving;
    if (name == "trace_nonincreasing") return TpClass::TraceNonincreasing;
    throw ParseError("unknown tp_class: " + name);
}

int ChoiMap::dim_out() const { return product(dims_out); }
int ChoiMap::dim_in() const { return product(dims_in); }

void require_valid(const ChoiMap& E) {
    const int dout = E.dim_out(), din = E.dim_in();
    if (dout < 1 || din < 1 || E.choi.rows() != static_cast<long>(dout) * din ||
        E.choi.cols() != E.choi.rows())
        throw PreconditionError("choi map: declared dimensions do not match the matrix");
    require_hermitian(E.choi, "choi map");
    if (min_eigenvalue(E.choi) < -kCpTol)
        throw PreconditionError("choi map: matrix must be positive semidefinite (complete positivity)");
    const Mat marg = partial_trace(E.choi, {dout, din}, {1});
    const Mat slack = hermitize(identity(din) - marg);
    if (min_eigenvalue(slack) < -kTraceCondTol)
        throw PreconditionError("choi map: map must be trace-nonincreasing");
    if (E.tp_class == TpClass::TracePreserving &&
        op_norm_hermitian(slack) > kTraceCondTol)
        throw PreconditionError("choi map: map declared trace-preserving is not");
}

ChoiMap choi_from_action(const std::function<Mat(const Mat&)>& action, int dim_in, int dim_out,
                         TpClass tp_class) {
    ChoiMap E;
    E.dims_out = {dim_out};
    E.dims_in = {dim_in};
    E.tp_class = tp_class;
    E.choi = Mat::Zero(static_cast<long>(dim_out) * dim_in, static_cast<long>(dim_out) * dim_in);
    for (int u = 0; u < dim_in; ++u)
        for (int v = 0; v < dim_in; ++v) {
            const Mat block = action(basis_unit(dim_in, u, v));
            for (int o = 0; o < dim_out; ++o)
                for (int op = 0; op < dim_out; ++op)
                    E.choi(static_cast<long>(o) * dim_in + u,
                           static_cast<long>(op) * dim_in + v) = block(o, op);
        }
    return E;
}

ChoiMap identity_channel(int d) {
    ChoiMap E;
    E.dims_out = {d};
    E.dims_in = {d};
    E.tp_class = TpClass::TracePreserving;
    E.choi = Mat::Zero(static_cast<long>(d) * d, static_cast<long>(d) * d);
    for (int u = 0; u < d; ++u)
        for (int v = 0; v < d; ++v) E.choi(static_cast<long>(u) * d + u, static_cast<long>(v) * d + v) = 1.0;
    return E;
}

Mat apply(const ChoiMap& E, const Mat& rho) {
    const int dout = E.dim_out(), din = E.dim_in();
    if (rho.rows() != din || rho.cols() != din)
        throw PreconditionError("apply: input dimension mismatch");
    const Mat M = E.choi * tensor(identity(dout), mirror_transpose(rho));
    return partial_trace(M, {dout, din}, {0});
}

Mat apply_adjoint(const ChoiMap& E, const Mat& m) {
    const int dout = E.dim_out(), din = E.dim_in();
    if (m.rows() != dout || m.cols() != dout)
        throw PreconditionError("apply_adjoint: input dimension mismatch");
    const Mat M = E.choi * tensor(m, identity(din));
    return mirror_transpose(partial_trace(M, {dout, din}, {1}));
}

ChoiMap adjoint(const ChoiMap& E) {
    ChoiMap A;
    A.dims_out = E.dims_in;
    A.dims_in = E.dims_out;
    A.tp_class = TpClass::TraceNonincreasing;
    A.choi = permute_systems(E.choi, {E.dim_out(), E.dim_in()}, {1, 0}).conjugate();
    return A;
}

std::vector<Mat> kraus_operators(const ChoiMap& E) {
    const int dout = E.dim_out(), din = E.dim_in();
    const auto ed = eig_hermitian(hermitize(E.choi));
    std::vector<Mat> ks;
    ks.reserve(ed.rank);
    for (int m = 0; m < ed.rank; ++m) {
        const double lam = ed.eigenvalues(m);
        if (lam <= 0.0) continue;
        Mat K(dout, din);
        for (int o = 0; o < dout; ++o)
            for (int i = 0; i < din; ++i)
                K(o, i) = std::sqrt(lam) * ed.eigenvectors(static_cast<long>(o) * din + i, m);
        ks.push_back(std::move(K));
    }
    return ks;
}

ChoiMap compose(const ChoiMap& e2, const ChoiMap& e1) {
    if (e2.dim_in() != e1.dim_out())
        throw PreconditionError("compose: inner dimensions do not match");
    const auto k2 = kraus_operators(e2);
    const auto k1 = kraus_operators(e1);
    const int dout = e2.dim_out(), din = e1.dim_in();
    Mat choi = Mat::Zero(static_cast<long>(dout) * din, static_cast<long>(dout) * din);
    for (const auto& b : k2)
        for (const auto& a : k1) {
            const Mat K = b * a;
            Vec v(static_cast<long>(dout) * din);
            for (int o = 0; o < dout; ++o)
                for (int i = 0; i < din; ++i) v(static_cast<long>(o) * din + i) = K(o, i);
            choi += v * v.adjoint();
        }
    ChoiMap out;
    out.choi = std::move(choi);
    out.dims_out = e2.dims_out;
    out.dims_in = e1.dims_in;
    out.tp_class = (e2.tp_class == TpClass::TracePreserving &&
                    e1.tp_class == TpClass::TracePreserving)
                       ? TpClass::TracePreserving
                       : TpClass::TraceNonincreasing;
    return out;
}

Mat apply_left(const ChoiMap& E, const Mat& rho, int dim_ref) {
    const int din = E.dim_in(), dout = E.dim_out();
    if (rho.rows() != static_cast<long>(din) * dim_ref)
        throw PreconditionError("apply_left: input dimension mismatch");
    Mat out = Mat::Zero(static_cast<long>(dout) * dim_ref, static_cast<long>(dout) * dim_ref);
    for (const auto& k : kraus_operators(E)) {
        const Mat ext = tensor(k, identity(dim_ref));
        out += ext * rho * ext.adjoint();
    }
    return out;
}

ProcessMatrix process_matrix(const ChoiMap& E, const Mat& sigma_x) {
    require_valid(E);
    require_density(sigma_x, "process_matrix");
    if (sigma_x.rows() != E.dim_in())
        throw PreconditionError("process_matrix: state dimension mismatch");
    const Mat root = tensor(identity(E.dim_out()), psd_sqrt(mirror_transpose(sigma_x)));
    ProcessMatrix pm;
    pm.rho = hermitize(root * E.choi * root);
    pm.dims_out = E.dims_out;
    pm.dims_in = E.dims_in;
    if (E.tp_class == TpClass::TracePreserving &&
        std::abs(std::real(pm.rho.trace()) - 1.0) > 1e-8)
        throw PreconditionError("process_matrix: trace-preserving map produced a non-normalized matrix");
    return pm;
}

double gamma_factor(const ChoiMap& T, const Mat& gamma_in, const Mat& gamma_out) {
    require_psd_weight(gamma_in, "gamma_factor");
    require_psd_weight(gamma_out, "gamma_factor");
    const Mat M = hermitize(apply(T, gamma_in));
    const Mat Pi = support_projector(gamma_out);
    const double leak = op_norm_hermitian(hermitize(M - Pi * M * Pi));
    if (leak > 1e-9 * std::max(1.0, op_norm_hermitian(M)))
        throw PreconditionError("gamma_factor: image leaks outside the output weight support, norm " +
                                std::to_string(leak));
    const Mat S = psd_inv_sqrt(gamma_out);
    const auto ed = eig_hermitian(hermitize(S * M * S));
    return std::max(0.0, ed.eigenvalues(0));
}

bool is_gamma_subpreserving(const ChoiMap& T, const Mat& gamma_in, const Mat& gamma_out) {
    return gamma_factor(T, gamma_in, gamma_out) <= 1.0 + 1e-9;
}

void require_valid(const BatterySpec& b) {
    require_psd_weight(b.gamma_w, "battery");
    require_projector(b.p_in, b.gamma_w, "battery (input)");
    require_projector(b.p_out, b.gamma_w, "battery (output)");
}

Mat battery_state(const Mat& p, const Mat& gamma) {
    const double w = hs_inner(p, gamma);
    if (!(w > 0.0))
        throw PreconditionError("battery_state: projector carries no weight");
    return hermitize(p * gamma * p) / w;
}

double battery_charge(const Mat& p, const Mat& gamma) {
    const double w = hs_inner(p, gamma);
    if (!(w > 0.0))
        throw PreconditionError("battery_charge: projector carries no weight");
    return -std::log2(w);
}

DilationResult dilate(const ChoiMap& phi_tilde, const Mat& gamma_k, const Mat& gamma_l,
                      int k_index, int l_index) {
    require_valid(phi_tilde);
    require_psd_weight(gamma_k, "dilate");
    require_psd_weight(gamma_l, "dilate");
    const int dk = phi_tilde.dim_in(), dl = phi_tilde.dim_out();
    if (gamma_k.rows() != dk || gamma_l.rows() != dl)
        throw PreconditionError("dilate: weight operator dimensions do not match the map");
    if (gamma_factor(phi_tilde, gamma_k, gamma_l) > 1.0 + 1e-9)
        throw PreconditionError("dilate: map does not sub-preserve the weight operators");
    if (k_index < 0 || k_index >= dk || l_index < 0 || l_index >= dl)
        throw PreconditionError("dilate: eigenvector index out of range");

    const auto edk = eig_hermitian(gamma_k);
    const auto edl = eig_hermitian(gamma_l);
    DilationResult res;
    res.g_k = edk.eigenvalues(k_index);
    res.g_l = edl.eigenvalues(l_index);
    res.k_vec = edk.eigenvectors.col(k_index);
    res.l_vec = edl.eigenvectors.col(l_index);
    if (!(res.g_k > 0.0))
        throw PreconditionError("dilate: selected input eigenvector carries no weight");
    res.g_i = 1.0;
    res.g_f = res.g_l / res.g_k;
    res.gamma_q = Mat::Zero(2, 2);
    res.gamma_q(0, 0) = res.g_i;
    res.gamma_q(1, 1) = res.g_f;

    // Operators fixed by the construction: the residuals of trace and weight
    // sub-preservation determine the two filler channels.
    const Mat kk = res.k_vec * res.k_vec.adjoint();
    const Mat ll = res.l_vec * res.l_vec.adjoint();
    const Mat phi_gamma = hermitize(apply(phi_tilde, gamma_k));             // <= gamma_l
    const Mat phi_dag_id = hermitize(apply_adjoint(phi_tilde, identity(dl))); // <= I_K
    const Mat pi_l = support_projector(gamma_l);
    const Mat phi_dag_pi = hermitize(apply_adjoint(phi_tilde, pi_l));
    const Mat sqrt_gk = psd_sqrt(gamma_k);
    const Mat isq_gl = psd_inv_sqrt(gamma_l);

    const Mat A = hermitize(tensor(gamma_k, gamma_l) -
                            res.g_l * tensor(sqrt_gk * phi_dag_pi * sqrt_gk, ll));
    const Mat B = hermitize(identity(dk * dl) - tensor(phi_dag_id, ll));
    const Mat C = hermitize(tensor(gamma_k, gamma_l) - res.g_k * tensor(kk, phi_gamma));
    const Mat D = hermitize(identity(dk * dl) - tensor(kk, isq_gl * phi_gamma * isq_gl));

    const double filler_tol = 1e-12 * (1.0 + std::real(gamma_k.trace()) * std::real(gamma_l.trace()));
    const double tr_a = std::real(A.trace());
    const double tr_c = std::real(C.trace());
    const Mat xi = tr_a > filler_tol ? Mat(A / tr_a) : Mat(identity(dk * dl) / (dk * dl));
    const Mat omega = tr_c > filler_tol ? Mat(C / tr_c) : Mat(identity(dk * dl) / (dk * dl));

    const Vec qi = basis_ket(2, 0);
    const Vec qf = basis_ket(2, 1);
    const Mat ii = qi * qi.adjoint();
    const Mat ff = qf * qf.adjoint();
    const Vec li = tensor(Mat(res.l_vec), Mat(qi));
    const Mat contract_li = tensor(identity(dk), Mat(li.adjoint()));              // K <- KLQ
    const Mat contract_kf = tensor(tensor(Mat(res.k_vec.adjoint()), identity(dl)),
                                   Mat(qf.adjoint()));                            // L <- KLQ
    const Mat contract_i = tensor(identity(dk * dl), Mat(qi.adjoint()));          // KL <- KLQ
    const Mat contract_f = tensor(identity(dk * dl), Mat(qf.adjoint()));

    auto action = [&](const Mat& m) -> Mat {
        const Mat n_k = contract_li * m * contract_li.adjoint();
        Mat out = tensor(tensor(kk, apply(phi_tilde, n_k)), ff);

        const Mat n_l = isq_gl * (contract_kf * m * contract_kf.adjoint()) * isq_gl;
        out += tensor(tensor(sqrt_gk * apply_adjoint(phi_tilde, n_l) * sqrt_gk, ll), ii);

        const Mat n_i = contract_i * m * contract_i.adjoint();
        out += (B * n_i).trace() * tensor(xi, ii);

        const Mat n_f = contract_f * m * contract_f.adjoint();
        out += (D * n_f).trace() * tensor(omega, ff);
        return out;
    };

    res.phi = choi_from_action(action, dk * dl * 2, dk * dl * 2, TpClass::TracePreserving);
    res.phi.dims_out = {dk, dl, 2};
    res.phi.dims_in = {dk, dl, 2};
    require_valid(res.phi);
    return res;
}

ChoiMap battery_implementation(const ChoiMap& T, const Mat& gamma_in, const Mat& gamma_out,
                               const BatterySpec& battery) {
    require_valid(T);
    require_valid(battery);
    const double w1 = hs_inner(battery.p_in, battery.gamma_w);
    const double w2 = hs_inner(battery.p_out, battery.gamma_w);
    if (!(w1 > 0.0) || !(w2 > 0.0))
        throw PreconditionError("battery_implementation: battery projectors must carry weight");
    const double factor = gamma_factor(T, gamma_in, gamma_out);
    if (factor > w2 / w1 + 1e-9)
        throw PreconditionError(
            "battery_implementation: charge budget violated (factor " + std::to_string(factor) +
            " exceeds " + std::to_string(w2 / w1) + ")");

    const int dx = T.dim_in(), dxp = T.dim_out();
    const int dw = static_cast<int>(battery.gamma_w.rows());
    const Mat sigma2 = battery_state(battery.p_out, battery.gamma_w);
    // Choi of  omega (x) w  |->  T(tr_W[p_in w]) (x) sigma2, assembled on
    // (X', R_X, W, R_W) and permuted to (X', W, R_X, R_W).
    const Mat raw = tensor(T.choi, sigma2, mirror_transpose(battery.p_in));
    ChoiMap out;
    out.choi = permute_systems(raw, {dxp, dx, dw, dw}, {0, 2, 1, 3});
    out.dims_out = {dxp, dw};
    out.dims_in = {dx, dw};
    out.tp_class = TpClass::TraceNonincreasing;
    require_valid(out);
    return out;
}

ChoiMap extract_system_map(const ChoiMap& phi, const Mat& p_in, const Mat& gamma_a_in,
                           const Mat& p_out, const Mat& gamma_a_out) {
    require_valid(phi);
    require_psd_weight(gamma_a_in, "extract_system_map");
    require_psd_weight(gamma_a_out, "extract_system_map");
    require_projector(p_in, gamma_a_in, "extract_system_map (input battery)");
    require_projector(p_out, gamma_a_out, "extract_system_map (output battery)");
    if (phi.dims_out.size() != 2 || phi.dims_in.size() != 2)
        throw PreconditionError("extract_system_map: joint map must carry two-factor dimensions");
    const int dxp = phi.dims_out[0], dap = phi.dims_out[1];
    const int dx = phi.dims_in[0], da = phi.dims_in[1];
    if (gamma_a_in.rows() != da || gamma_a_out.rows() != dap)
        throw PreconditionError("extract_system_map: battery dimensions do not match the map");

    const Mat tau = battery_state(p_in, gamma_a_in);
    const Mat sandwich = tensor(identity(dxp), p_out, identity(dx * da));
    const Mat feed = tensor(identity(dxp * dap * dx), mirror_transpose(tau));
    const Mat reduced = sandwich * phi.choi * sandwich * feed;
    ChoiMap out;
    out.choi = hermitize(partial_trace(reduced, {dxp, dap, dx, da}, {0, 2}));
    out.dims_out = {dxp};
    out.dims_in = {dx};
    out.tp_class = TpClass::TraceNonincreasing;
    require_valid(out);
    return out;
}

ChoiMap petz_recovery(const ChoiMap& F, const Mat& gamma_a) {
    require_valid(F);
    if (F.tp_class != TpClass::TracePreserving)
        throw PreconditionError("petz_recovery: forward map must be trace-preserving");
    require_psd_weight(gamma_a, "petz_recovery");
    const int da = F.dim_in(), db = F.dim_out();
    if (gamma_a.rows() != da)
        throw PreconditionError("petz_recovery: weight operator dimension mismatch");
    const Mat gamma_b = hermitize(apply(F, gamma_a));
    if (eig_hermitian(gamma_b).rank != db)
        throw PreconditionError(
            "petz_recovery: image weight operator is rank-deficient; restrict to its support first");
    const Mat sq_a = psd_sqrt(gamma_a);
    const Mat isq_b = psd_inv_sqrt(gamma_b);
    auto action = [&](const Mat& m) -> Mat {
        return sq_a * apply_adjoint(F, isq_b * m * isq_b) * sq_a;
    };
    ChoiMap R = choi_from_action(action, db, da, TpClass::TracePreserving);
    require_valid(R);
    return R;
}

ChoiMap random_channel(std::uint64_t seed, int dim_in, int dim_out, int env_dim) {
    if (dim_in < 1 || dim_out < 1 || env_dim < 1)
        throw PreconditionError("random_channel: dimensions must be positive");
    if (static_cast<long>(dim_out) * env_dim < dim_in)
        throw PreconditionError("random_channel: output times environment must cover the input");
    CounterRng rng(seed);
    const Mat V = random_isometry(rng, dim_out * env_dim, dim_in);
    Mat choi = Mat::Zero(static_cast<long>(dim_out) * dim_in, static_cast<long>(dim_out) * dim_in);
    for (int e = 0; e < env_dim; ++e) {
        Vec v(static_cast<long>(dim_out) * dim_in);
        for (int o = 0; o < dim_out; ++o)
            for (int i = 0; i < dim_in; ++i)
                v(static_cast<long>(o) * dim_in + i) = V(static_cast<long>(o) * env_dim + e, i);
        choi += v * v.adjoint();
    }
    ChoiMap E;
    E.choi = std::move(choi);
    E.dims_out = {dim_out};
    E.dims_in = {dim_in};
    E.tp_class = TpClass::TracePreserving;
    require_valid(E);
    return E;
}

Mat random_state(std::uint64_t seed, int dim) {
    if (dim < 1) throw PreconditionError("random_state: dimension must be positive");
    CounterRng rng(seed);
    return random_density(rng, dim);
}

Mat random_gamma(std::uint64_t seed, int dim, GammaKind kind) {
    if (dim < 1) throw PreconditionError("random_gamma: dimension must be positive");
    CounterRng rng(seed);
    if (kind == GammaKind::Thermal) {
        Mat H = random_hermitian(rng, dim);
        const double s = op_norm_hermitian(H);
        if (s > 0.0) H *= 1.5 / s;
        const double beta = rng.uniform(0.1, 2.0);
        const auto ed = eig_hermitian(H);
        Mat G = Mat::Zero(dim, dim);
        for (int i = 0; i < dim; ++i)
            G += std::exp(-beta * ed.eigenvalues(i)) * ed.eigenvectors.col(i) *
                 ed.eigenvectors.col(i).adjoint();
        return hermitize(G);
    }
    const Mat U = random_unitary(rng, dim);
    Mat D = Mat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) D(i, i) = rng.uniform(0.01, 1.0);
    return hermitize(U * D * U.adjoint());
}

} // namespace workcost::process
