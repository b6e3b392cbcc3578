#include "qsplit/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qsplit {

namespace {

constexpr double kLog2 = 0.6931471805599453094172321214581766;
constexpr double kEigClip = 1e-14;

double log2_safe(double x) { return std::log(std::max(x, 1e-300)) / kLog2; }

LabeledOperator reduce_to(const LabeledOperator& rho, const std::set<std::string>& kept) {
    std::set<std::string> drop;
    for (const auto& n : rho.rows().names())
        if (!kept.count(n)) drop.insert(n);
    if (drop.empty()) return rho;
    return partial_trace(rho, drop);
}

/// Matrix of `rho` re-indexed as (A x B) with A the `asig` subsystems.
Mat grouped_matrix(const LabeledOperator& rho, const SystemSignature& asig,
                   const SystemSignature& bsig) {
    const auto base_a = placement(rho.rows(), asig);
    const auto base_b = placement(rho.rows(), bsig);
    const long da = asig.total_dim(), db = bsig.total_dim();
    Mat g(da * db, da * db);
    for (long a = 0; a < da; ++a)
        for (long b = 0; b < db; ++b)
            for (long a2 = 0; a2 < da; ++a2)
                for (long b2 = 0; b2 < db; ++b2)
                    g(a * db + b, a2 * db + b2) =
                        rho.matrix()(base_a[static_cast<size_t>(a)] + base_b[static_cast<size_t>(b)],
                                     base_a[static_cast<size_t>(a2)] + base_b[static_cast<size_t>(b2)]);
    return g;
}

/// Removes subsystems whose marginal is pure (they factor out exactly and do
/// not affect conditional min-entropies). Updates the label groups in place.
LabeledOperator strip_pure_subsystems(LabeledOperator st, std::set<std::string>& a,
                                      std::set<std::string>& b) {
    bool changed = true;
    while (changed && st.rows().count() > 0) {
        changed = false;
        for (const auto& name : st.rows().names()) {
            if (st.rows().count() == 1) break;
            auto marg = partial_trace(st, [&] {
                std::set<std::string> d;
                for (const auto& n : st.rows().names())
                    if (n != name) d.insert(n);
                return d;
            }());
            const double tr = marg.trace().real();
            if (tr <= 0) continue;
            const double purity = (marg.matrix() * marg.matrix()).trace().real() / (tr * tr);
            if (purity >= 1.0 - 1e-13) {
                st = partial_trace(st, {name});
                a.erase(name);
                b.erase(name);
                changed = true;
                break;
            }
        }
    }
    return st;
}

/// Maps an SDP optimum (minimizing 2^{-H}) to an EntropyResult.
EntropyResult from_sdp(const sdp::Result& r) {
    EntropyResult out;
    out.value = -log2_safe(r.primal_obj);
    out.primal_bound = -log2_safe(r.primal_obj);
    out.dual_bound = -log2_safe(r.dual_obj);
    out.gap = std::abs(r.primal_obj - r.dual_obj);
    out.iterations = r.iterations;
    switch (r.status) {
        case sdp::Status::optimal: out.status = SolveStatus::optimal; break;
        case sdp::Status::max_iterations: out.status = SolveStatus::max_iterations; break;
        case sdp::Status::infeasible: out.status = SolveStatus::infeasible; break;
    }
    return out;
}

/// Registers the real parameters of a Hermitian d x d matrix variable and
/// calls `emit(var, k, l, w)` so the caller can place each parameter's
/// elementary contribution (w E_{kl} + conj(w) E_{lk}) into its blocks.
template <typename Emit>
std::vector<int> herm_vars(sdp::Problem& p, long d, const std::vector<double>& diag_cost,
                           const Emit& emit) {
    std::vector<int> vars;
    for (long k = 0; k < d; ++k)
        for (long l = k; l < d; ++l) {
            int vre = p.add_variable(k == l ? diag_cost[static_cast<size_t>(k)] : 0.0);
            emit(vre, k, l, cxd(1, 0));
            vars.push_back(vre);
            if (l > k) {
                int vim = p.add_variable(0.0);
                emit(vim, k, l, cxd(0, 1));
                vars.push_back(vim);
            }
        }
    return vars;
}

/// Rebuilds a Hermitian matrix from the y-values laid out by herm_vars.
Mat herm_from_y(const std::vector<double>& y, long d, int first) {
    Mat m = Mat::Zero(d, d);
    int v = first;
    for (long k = 0; k < d; ++k)
        for (long l = k; l < d; ++l) {
            if (k == l) {
                m(k, k) = y[static_cast<size_t>(v)];
                ++v;
            } else {
                m(k, l) += y[static_cast<size_t>(v)];
                m(l, k) += y[static_cast<size_t>(v)];
                ++v;
                m(k, l) += cxd(0, 1) * y[static_cast<size_t>(v)];
                m(l, k) += cxd(0, -1) * y[static_cast<size_t>(v)];
                ++v;
            }
        }
    return m;
}

void add_const_hermitian(sdp::Problem& p, int block, const Mat& m, double scale = 1.0) {
    for (long r = 0; r < m.rows(); ++r) {
        p.add_const_entry(block, r, r, scale * m(r, r).real());
        for (long c = r + 1; c < m.cols(); ++c)
            if (std::abs(m(r, c)) > 0) p.add_const_entry(block, r, c, scale * m(r, c));
    }
}

// --- eps = 0: min Tr sigma s.t. I_A (x) sigma >= rho --------------------------

EntropyResult hmin_eps0(const Mat& rho_g, long da, long db, const SystemSignature& bsig,
                        const HminOptions& opt, EntropyResult* shell) {
    sdp::Problem p({da * db, db});
    std::vector<double> cost(static_cast<size_t>(db), 1.0);
    int first = p.num_vars();
    herm_vars(p, db, cost, [&](int v, long k, long l, cxd w) {
        for (long a = 0; a < da; ++a) p.add_entry(v, 0, a * db + k, a * db + l, w);
        p.add_entry(v, 1, k, l, w);
    });
    add_const_hermitian(p, 0, rho_g, -1.0);

    sdp::Options so;
    so.tol = opt.tol;
    so.max_iter = opt.max_iter;
    auto r = sdp::solve(p, so);
    EntropyResult out = from_sdp(r);
    out.sigma = LabeledOperator(bsig, bsig, herm_from_y(r.y, db, first));
    if (shell) *shell = out;
    return out;
}

// --- eps > 0, pure state: Schmidt-reduced program -----------------------------

EntropyResult hmin_pure(const Mat& rho_g, long da, long db, const SystemSignature& asig,
                        const SystemSignature& bsig, double eps, const HminOptions& opt) {
    // dominant eigenvector (the state is rank one up to numerical noise)
    Eigen::SelfAdjointEigenSolver<Mat> es(herm(rho_g));
    const long top = es.eigenvalues().size() - 1;
    Vec psi = es.eigenvectors().col(top) * std::sqrt(std::max(0.0, es.eigenvalues()(top)));

    Mat amp(da, db);
    for (long a = 0; a < da; ++a)
        for (long b = 0; b < db; ++b) amp(a, b) = psi(a * db + b);
    Eigen::JacobiSVD<Mat> svd(amp, Eigen::ComputeThinU | Eigen::ComputeThinV);
    std::vector<double> sv;
    for (long i = 0; i < svd.singularValues().size(); ++i) {
        const double s = svd.singularValues()(i);
        if (s * s > kEigClip) sv.push_back(s);
    }
    const long r = static_cast<long>(sv.size());
    const double t0 = std::sqrt(std::max(0.0, 1.0 - eps * eps));

    // blocks: [0] diag(s)-M, [1] M, [2] fidelity, [3] trace, [4..4+r) s_j >= 0
    std::vector<long> dims{r, r, 1, 1};
    for (long j = 0; j < r; ++j) dims.push_back(1);
    sdp::Problem p(dims);

    std::vector<double> zero_cost(static_cast<size_t>(r), 0.0);
    int mfirst = p.num_vars();
    herm_vars(p, r, zero_cost, [&](int v, long k, long l, cxd w) {
        p.add_entry(v, 0, k, l, -w);
        p.add_entry(v, 1, k, l, w);
        if (w.imag() == 0) {  // real parts enter the (real) fidelity form
            double coeff = (k == l) ? sv[static_cast<size_t>(k)] * sv[static_cast<size_t>(k)]
                                    : 2.0 * sv[static_cast<size_t>(k)] * sv[static_cast<size_t>(l)];
            p.add_entry(v, 2, 0, 0, coeff);
        }
        if (k == l) p.add_entry(v, 3, 0, 0, -1.0);
    });
    for (long j = 0; j < r; ++j) {
        int svar = p.add_variable(1.0);
        p.add_entry(svar, 0, j, j, 1.0);
        p.add_entry(svar, 4 + static_cast<int>(j), 0, 0, 1.0);
    }
    p.add_const_entry(2, 0, 0, -t0 * t0);
    p.add_const_entry(3, 0, 0, 1.0);

    sdp::Options so;
    so.tol = opt.tol;
    so.max_iter = opt.max_iter;
    auto rr = sdp::solve(p, so);
    EntropyResult out = from_sdp(rr);

    // certificates back in the original bases
    Mat m_r = herm_from_y(rr.y, r, mfirst);
    Mat sigma = Mat::Zero(db, db);
    Mat rhop = Mat::Zero(da * db, da * db);
    int sv_first = mfirst + static_cast<int>(r * r);
    for (long j = 0; j < r; ++j) {
        Vec f = svd.matrixV().col(j).conjugate();
        sigma += rr.y[static_cast<size_t>(sv_first + j)] * (f * f.adjoint());
    }
    std::vector<Vec> prod;
    for (long j = 0; j < r; ++j) {
        Vec u = svd.matrixU().col(j);
        Vec f = svd.matrixV().col(j).conjugate();
        Vec w(da * db);
        for (long a = 0; a < da; ++a)
            for (long b = 0; b < db; ++b) w(a * db + b) = u(a) * f(b);
        prod.push_back(w);
    }
    for (long k = 0; k < r; ++k)
        for (long l = 0; l < r; ++l) rhop += m_r(k, l) * (prod[static_cast<size_t>(k)] * prod[static_cast<size_t>(l)].adjoint());

    out.sigma = LabeledOperator(bsig, bsig, sigma);
    std::vector<Subsystem> glist = asig.subsystems();
    for (const auto& s : bsig.subsystems()) glist.push_back(s);
    out.rho_smoothed = LabeledOperator(glist, glist, rhop);
    return out;
}

// --- eps > 0, product-basis diagonal state -------------------------------------

EntropyResult hmin_diagonal(const Mat& rho_g, long da, long db, const SystemSignature& asig,
                            const SystemSignature& bsig, double eps, const HminOptions& opt) {
    const long d = da * db;
    const double t0 = std::sqrt(std::max(0.0, 1.0 - eps * eps));

    std::vector<long> support;
    for (long i = 0; i < d; ++i)
        if (rho_g(i, i).real() > 1e-15) support.push_back(i);
    const long ns = static_cast<long>(support.size());

    // blocks: [0..ns) 2x2 fidelity blocks, [ns..2ns) s_{b(i)} - p'_i >= 0,
    // [2ns] fidelity sum, [2ns+1] trace, [2ns+2..) s_b >= 0
    std::vector<long> dims;
    for (long i = 0; i < ns; ++i) dims.push_back(2);
    for (long i = 0; i < ns; ++i) dims.push_back(1);
    dims.push_back(1);
    dims.push_back(1);
    for (long b = 0; b < db; ++b) dims.push_back(1);
    sdp::Problem p(dims);

    std::vector<int> pvar(static_cast<size_t>(ns)), xvar(static_cast<size_t>(ns)), svar(static_cast<size_t>(db));
    for (long i = 0; i < ns; ++i) {
        pvar[static_cast<size_t>(i)] = p.add_variable(0.0);
        p.add_entry(pvar[static_cast<size_t>(i)], static_cast<int>(i), 0, 0, 1.0);
        p.add_entry(pvar[static_cast<size_t>(i)], static_cast<int>(ns + i), 0, 0, -1.0);
        p.add_entry(pvar[static_cast<size_t>(i)], static_cast<int>(2 * ns + 1), 0, 0, -1.0);
    }
    for (long i = 0; i < ns; ++i) {
        xvar[static_cast<size_t>(i)] = p.add_variable(0.0);
        p.add_entry(xvar[static_cast<size_t>(i)], static_cast<int>(i), 0, 1, 1.0);
        p.add_entry(xvar[static_cast<size_t>(i)], static_cast<int>(2 * ns), 0, 0, 1.0);
    }
    for (long b = 0; b < db; ++b) {
        svar[static_cast<size_t>(b)] = p.add_variable(1.0);
        p.add_entry(svar[static_cast<size_t>(b)], static_cast<int>(2 * ns + 2 + b), 0, 0, 1.0);
    }
    for (long i = 0; i < ns; ++i) {
        const long idx = support[static_cast<size_t>(i)];
        p.add_const_entry(static_cast<int>(i), 1, 1, rho_g(idx, idx).real());
        p.add_entry(svar[static_cast<size_t>(idx % db)], static_cast<int>(ns + i), 0, 0, 1.0);
    }
    p.add_const_entry(static_cast<int>(2 * ns), 0, 0, -t0);
    p.add_const_entry(static_cast<int>(2 * ns + 1), 0, 0, 1.0);

    sdp::Options so;
    so.tol = opt.tol;
    so.max_iter = opt.max_iter;
    auto rr = sdp::solve(p, so);
    EntropyResult out = from_sdp(rr);

    Mat sigma = Mat::Zero(db, db);
    for (long b = 0; b < db; ++b) sigma(b, b) = rr.y[static_cast<size_t>(svar[static_cast<size_t>(b)])];
    Mat rhop = Mat::Zero(d, d);
    for (long i = 0; i < ns; ++i)
        rhop(support[static_cast<size_t>(i)], support[static_cast<size_t>(i)]) =
            rr.y[static_cast<size_t>(pvar[static_cast<size_t>(i)])];
    out.sigma = LabeledOperator(bsig, bsig, sigma);
    std::vector<Subsystem> glist = asig.subsystems();
    for (const auto& s : bsig.subsystems()) glist.push_back(s);
    out.rho_smoothed = LabeledOperator(glist, glist, rhop);
    return out;
}

// --- eps > 0, general state -----------------------------------------------------

EntropyResult hmin_general(const Mat& rho_g, long da, long db, const SystemSignature& asig,
                           const SystemSignature& bsig, double eps, const HminOptions& opt) {
    const long d = da * db;
    const double t0 = std::sqrt(std::max(0.0, 1.0 - eps * eps));

    Eigen::SelfAdjointEigenSolver<Mat> es(herm(rho_g));
    std::vector<long> kept;
    for (long i = 0; i < d; ++i)
        if (es.eigenvalues()(i) > kEigClip) kept.push_back(i);
    const long r = static_cast<long>(kept.size());
    Mat ur(d, r);
    Eigen::VectorXd lam(r);
    for (long j = 0; j < r; ++j) {
        ur.col(j) = es.eigenvectors().col(kept[static_cast<size_t>(j)]);
        lam(j) = es.eigenvalues()(kept[static_cast<size_t>(j)]);
    }

    // blocks: [0] [[rho', X],[X^dag, rho_r]] (d+r), [1] I (x) sigma - rho' (d),
    // [2] sigma (db), [3] fidelity scalar, [4] trace scalar
    sdp::Problem p({d + r, d, db, 1, 1});

    std::vector<double> zero_cost(static_cast<size_t>(d), 0.0);
    int rho_first = p.num_vars();
    herm_vars(p, d, zero_cost, [&](int v, long k, long l, cxd w) {
        p.add_entry(v, 0, k, l, w);
        p.add_entry(v, 1, k, l, -w);
        if (k == l) p.add_entry(v, 4, 0, 0, -1.0);
    });
    // X entries (complex d x r)
    for (long a = 0; a < d; ++a)
        for (long j = 0; j < r; ++j) {
            int vre = p.add_variable(0.0);
            p.add_entry(vre, 0, a, d + j, cxd(1, 0));
            if (std::abs(ur(a, j).real()) > 0) p.add_entry(vre, 3, 0, 0, ur(a, j).real());
            int vim = p.add_variable(0.0);
            p.add_entry(vim, 0, a, d + j, cxd(0, 1));
            if (std::abs(ur(a, j).imag()) > 0) p.add_entry(vim, 3, 0, 0, ur(a, j).imag());
        }
    std::vector<double> cost(static_cast<size_t>(db), 1.0);
    int sig_first = p.num_vars();
    herm_vars(p, db, cost, [&](int v, long k, long l, cxd w) {
        for (long a = 0; a < da; ++a) p.add_entry(v, 1, a * db + k, a * db + l, w);
        p.add_entry(v, 2, k, l, w);
    });
    for (long j = 0; j < r; ++j) p.add_const_entry(0, d + j, d + j, lam(j));
    p.add_const_entry(3, 0, 0, -t0);
    p.add_const_entry(4, 0, 0, 1.0);

    sdp::Options so;
    so.tol = opt.tol;
    so.max_iter = opt.max_iter;
    auto rr = sdp::solve(p, so);
    EntropyResult out = from_sdp(rr);
    out.sigma = LabeledOperator(bsig, bsig, herm_from_y(rr.y, db, sig_first));
    std::vector<Subsystem> glist = asig.subsystems();
    for (const auto& s : bsig.subsystems()) glist.push_back(s);
    out.rho_smoothed = LabeledOperator(glist, glist, herm_from_y(rr.y, d, rho_first));
    return out;
}

}  // namespace

// --- public API -------------------------------------------------------------------

double von_neumann(const LabeledOperator& rho) {
    Eigen::SelfAdjointEigenSolver<Mat> es(herm(rho.matrix()));
    double h = 0;
    for (long i = 0; i < es.eigenvalues().size(); ++i) {
        const double l = es.eigenvalues()(i);
        if (l > kEigClip) h -= l * std::log(l) / kLog2;
    }
    return h;
}

double von_neumann(const LabeledOperator& rho, const std::set<std::string>& subset) {
    return von_neumann(reduce_to(rho, subset));
}

double coherent_information(const LabeledOperator& rho, const std::set<std::string>& sender,
                            const std::set<std::string>& receiver) {
    std::set<std::string> all = sender;
    all.insert(receiver.begin(), receiver.end());
    const LabeledOperator joint = reduce_to(rho, all);
    return von_neumann(joint, receiver) - von_neumann(joint);
}

double conditional_von_neumann(const LabeledOperator& rho, const std::set<std::string>& a,
                               const std::set<std::string>& b) {
    std::set<std::string> all = a;
    all.insert(b.begin(), b.end());
    const LabeledOperator joint = reduce_to(rho, all);
    if (b.empty()) return von_neumann(joint);
    return von_neumann(joint) - von_neumann(joint, b);
}

EntropyResult hmin_cond(const LabeledOperator& rho, const std::set<std::string>& a,
                        const std::set<std::string>& b, double eps, const HminOptions& opt) {
    if (eps < 0 || eps >= 1) throw std::invalid_argument("hmin_cond: epsilon must be in [0, 1)");
    for (const auto& n : b)
        if (a.count(n)) throw std::invalid_argument("hmin_cond: groups overlap on " + n);

    std::set<std::string> all = a;
    all.insert(b.begin(), b.end());
    LabeledOperator st = reduce_to(rho, all);
    const double tr = st.trace().real();
    if (eps > 0 && std::abs(tr - 1.0) > 1e-9)
        throw std::invalid_argument("hmin_cond: state must be normalized when eps > 0");

    if (st.rows().total_dim() > 64)
        throw std::invalid_argument("hmin_cond: total dimension exceeds the budget of 64");

    std::set<std::string> ag = a, bg = b;
    if (opt.strip_pure_legs) st = strip_pure_subsystems(st, ag, bg);

    if (ag.empty()) {
        // trivial A: the optimum is (1-eps^2) Tr rho
        EntropyResult out;
        out.value = (eps > 0) ? -log2_safe(1.0 - eps * eps) : -log2_safe(tr);
        out.primal_bound = out.dual_bound = out.value;
        return out;
    }

    SystemSignature asig = st.rows().keep(ag);
    SystemSignature bsig = bg.empty() ? SystemSignature{} : st.rows().keep(bg);
    const long da = asig.total_dim();
    const long db = bsig.total_dim();
    Mat g = grouped_matrix(st, asig, bsig);

    // Below this point the fidelity threshold 1 - sqrt(1-eps^2) drops under
    // the solver's resolution; the eps = 0 program is then the certified
    // value within that resolution (and always a lower bound).
    if (eps < 1e-4) return hmin_eps0(g, da, db, bsig, opt, nullptr);

    // rank-1 states reduce to a Schmidt-basis program
    {
        Eigen::SelfAdjointEigenSolver<Mat> es(herm(g));
        long rank = 0;
        for (long i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()(i) > 1e-12) ++rank;
        if (rank == 1) return hmin_pure(g, da, db, asig, bsig, eps, opt);
    }
    // product-basis diagonal states reduce to a scalar program
    {
        double offdiag = 0;
        for (long i = 0; i < g.rows(); ++i)
            for (long j = 0; j < g.cols(); ++j)
                if (i != j) offdiag = std::max(offdiag, std::abs(g(i, j)));
        if (offdiag < 1e-13) return hmin_diagonal(g, da, db, asig, bsig, eps, opt);
    }
    return hmin_general(g, da, db, asig, bsig, eps, opt);
}

EntropyResult hmax_cond(const LabeledOperator& rho, const std::set<std::string>& a,
                        const std::set<std::string>& b, double eps, const HminOptions& opt) {
    std::set<std::string> all = a;
    all.insert(b.begin(), b.end());
    LabeledOperator st = reduce_to(rho, all);
    if (std::abs(st.trace().real() - 1.0) > 1e-9)
        throw std::invalid_argument("hmax_cond: state must be normalized");
    std::string env = "_E";
    while (st.rows().has(env)) env += "x";
    LabeledOperator pure = purify(st, env);
    LabeledOperator rho_ae = partial_trace(pure.density(), b);
    EntropyResult inner = hmin_cond(rho_ae, a, {env}, eps, opt);
    EntropyResult out = inner;
    out.value = -inner.value;
    out.primal_bound = -inner.primal_bound;
    out.dual_bound = -inner.dual_bound;
    return out;
}

EntropyResult imin_coherent(const LabeledOperator& rho, const std::set<std::string>& a,
                            const std::set<std::string>& b, double eps, const HminOptions& opt) {
    std::set<std::string> all = a;
    all.insert(b.begin(), b.end());
    LabeledOperator st = reduce_to(rho, all);
    const double tr = st.trace().real();
    if (std::abs(tr - 1.0) > 1e-9)
        throw std::invalid_argument("imin_coherent: state must be normalized");
    std::set<std::string> ag = a, bg = b;
    if (opt.strip_pure_legs) st = strip_pure_subsystems(st, ag, bg);
    std::string env = "_E";
    while (st.rows().has(env)) env += "x";
    LabeledOperator pure = purify(st, env);
    LabeledOperator rho_ae = partial_trace(pure.density(), bg);
    return hmin_cond(rho_ae, ag, {env}, eps, opt);
}

SigmaPolicy SigmaPolicy::fixed(LabeledOperator s) {
    SigmaPolicy p;
    p.kind = Kind::fixed;
    p.sigma = std::move(s);
    return p;
}

SigmaPolicy SigmaPolicy::alternating(int k) {
    SigmaPolicy p;
    p.kind = Kind::alternating;
    p.rounds = k;
    return p;
}

namespace {

Mat inv_sqrt_reg(const Mat& sigma) {
    Mat reg = herm(sigma) + 1e-12 * Mat::Identity(sigma.rows(), sigma.cols());
    Eigen::SelfAdjointEigenSolver<Mat> es(reg);
    Eigen::VectorXd v = es.eigenvalues();
    for (long i = 0; i < v.size(); ++i) v(i) = 1.0 / std::sqrt(std::max(v(i), 1e-12));
    return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().adjoint();
}

double h2_value(const Mat& rho_g, long da, long db, const Mat& sigma) {
    const Mat h = inv_sqrt_reg(sigma);
    Mat ih = Mat::Zero(da * db, da * db);
    for (long a = 0; a < da; ++a) ih.block(a * db, a * db, db, db) = h;
    const double q = (rho_g * ih * rho_g * ih).trace().real();
    return -log2_safe(q);
}

}  // namespace

double h2_cond_bound(const LabeledOperator& rho, const std::set<std::string>& a,
                     const std::set<std::string>& b, const SigmaPolicy& policy) {
    std::set<std::string> all = a;
    all.insert(b.begin(), b.end());
    LabeledOperator st = reduce_to(rho, all);
    SystemSignature asig = st.rows().keep(a);
    SystemSignature bsig = b.empty() ? SystemSignature{} : st.rows().keep(b);
    const long da = asig.total_dim(), db = bsig.total_dim();
    Mat g = grouped_matrix(st, asig, bsig);

    auto marginal = [&] {
        Mat m = Mat::Zero(db, db);
        for (long a2 = 0; a2 < da; ++a2) m += g.block(a2 * db, a2 * db, db, db);
        m /= m.trace().real();
        return m;
    };

    if (policy.kind == SigmaPolicy::Kind::fixed) {
        if (!policy.sigma) throw std::invalid_argument("h2_cond_bound: fixed policy without sigma");
        Mat s = grouped_matrix(*policy.sigma, SystemSignature{}, bsig);
        return h2_value(g, da, db, s);
    }

    Mat sigma = marginal();
    double best = h2_value(g, da, db, sigma);
    if (policy.kind == SigmaPolicy::Kind::marginal) return best;

    // monotone descent on sigma over the simplex
    for (int round = 0; round < policy.rounds; ++round) {
        const Mat h = inv_sqrt_reg(sigma);
        Mat ih = Mat::Zero(da * db, da * db);
        for (long a2 = 0; a2 < da; ++a2) ih.block(a2 * db, a2 * db, db, db) = h;
        // K = Tr_A[rho (I (x) h) rho]
        Mat big = g * ih * g;
        Mat K = Mat::Zero(db, db);
        for (long a2 = 0; a2 < da; ++a2) K += big.block(a2 * db, a2 * db, db, db);
        // gradient of Tr[rho (I(x)sigma^{-1/2}) rho (I(x)sigma^{-1/2})] via the
        // Loewner derivative of x -> x^{-1/2} in sigma's eigenbasis
        Eigen::SelfAdjointEigenSolver<Mat> es(herm(sigma) + 1e-12 * Mat::Identity(db, db));
        const Eigen::VectorXd lam = es.eigenvalues();
        Mat Kb = es.eigenvectors().adjoint() * K * es.eigenvectors();
        Mat grad_b(db, db);
        for (long i = 0; i < db; ++i)
            for (long j = 0; j < db; ++j) {
                const double li = std::max(lam(i), 1e-12), lj = std::max(lam(j), 1e-12);
                const double phi = (std::abs(li - lj) > 1e-12 * std::max(li, lj))
                                       ? (1.0 / std::sqrt(li) - 1.0 / std::sqrt(lj)) / (li - lj)
                                       : -0.5 * std::pow(li, -1.5);
                grad_b(i, j) = 2.0 * phi * Kb(i, j);
            }
        Mat grad = es.eigenvectors() * grad_b * es.eigenvectors().adjoint();
        Mat dir = grad - (grad.trace().real() / static_cast<double>(db)) * Mat::Identity(db, db);
        double gn = dir.norm();
        if (gn < 1e-14) break;
        double t = 0.5 / gn;
        bool accepted = false;
        for (int bt = 0; bt < 25 && !accepted; ++bt, t /= 3.0) {
            Mat cand = herm(sigma - t * dir);
            Eigen::SelfAdjointEigenSolver<Mat> ec(cand);
            Eigen::VectorXd v = ec.eigenvalues().cwiseMax(0.0);
            cand = ec.eigenvectors() * v.asDiagonal() * ec.eigenvectors().adjoint();
            const double ctr = cand.trace().real();
            if (ctr < 1e-12) continue;
            cand /= ctr;
            const double val = h2_value(g, da, db, cand);
            if (val > best + 1e-14) {  // value is -log of the objective: larger is better
                best = val;
                sigma = cand;
                accepted = true;
            }
        }
        if (!accepted) break;
    }
    return best;
}

double hmax_unconditional(const LabeledOperator& rho, const std::set<std::string>& a) {
    LabeledOperator st = reduce_to(rho, a);
    Eigen::SelfAdjointEigenSolver<Mat> es(herm(st.matrix()));
    double s = 0;
    for (long i = 0; i < es.eigenvalues().size(); ++i)
        s += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    return 2.0 * log2_safe(s);
}

LabeledOperator tensor_power(const LabeledOperator& x, int n) {
    LabeledOperator acc;
    for (int i = 1; i <= n; ++i) {
        std::map<std::string, std::string> ren;
        for (const auto& nm : x.rows().names()) ren[nm] = nm + "_" + std::to_string(i);
        LabeledOperator copy = x.relabeled(ren);
        acc = (i == 1) ? copy : tensor(acc, copy);
    }
    return acc;
}

std::vector<double> qaep_gap(const LabeledOperator& rho_ab, const std::set<std::string>& a,
                             const std::set<std::string>& b, int n_max, double eps) {
    std::set<std::string> all = a;
    all.insert(b.begin(), b.end());
    LabeledOperator st = reduce_to(rho_ab, all);
    double powdim = 1;
    for (int n = 0; n < n_max; ++n) powdim *= static_cast<double>(st.rows().total_dim());
    if (n_max < 1 || powdim > 64.0)
        throw std::invalid_argument("qaep_gap: tensor power exceeds the dimension budget");
    const double h_cond = conditional_von_neumann(st, a, b);
    std::vector<double> gaps;
    for (int n = 1; n <= n_max; ++n) {
        LabeledOperator pw = tensor_power(st, n);
        std::set<std::string> an, bn;
        for (int i = 1; i <= n; ++i) {
            for (const auto& nm : a) an.insert(nm + "_" + std::to_string(i));
            for (const auto& nm : b) bn.insert(nm + "_" + std::to_string(i));
        }
        auto r = hmin_cond(pw, an, bn, eps);
        gaps.push_back(r.value / n - h_cond);
    }
    return gaps;
}

EntropyResult evaluate(const EntropyQuery& q) {
    std::set<std::string> a;
    for (const auto& n : q.state.rows().names())
        if (!q.condition_on.count(n)) a.insert(n);
    EntropyResult out;
    switch (q.quantity) {
        case Quantity::von_neumann:
            out.value = von_neumann(q.state, a);
            break;
        case Quantity::coherent_info:
            out.value = coherent_information(q.state, a, q.condition_on);
            break;
        case Quantity::hmin_cond:
            return hmin_cond(q.state, a, q.condition_on, q.epsilon);
        case Quantity::hmax_cond:
            return hmax_cond(q.state, a, q.condition_on, q.epsilon);
        case Quantity::h2_cond:
            out.value = h2_cond_bound(q.state, a, q.condition_on, SigmaPolicy::alternating(20));
            break;
        case Quantity::imin_coherent:
            return imin_coherent(q.state, a, q.condition_on, q.epsilon);
    }
    return out;
}

}  // namespace qsplit
