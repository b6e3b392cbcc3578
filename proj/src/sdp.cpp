#include "qsplit/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace qsplit::sdp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

struct BlockEig {
    Mat vecs;
    VectorXd vals;
};

BlockEig eig(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m));
    if (es.info() != Eigen::Success) throw std::runtime_error("sdp: eigendecomposition failed");
    return {es.eigenvectors(), es.eigenvalues()};
}

Mat apply_fn(const BlockEig& e, double (*fn)(double)) {
    VectorXd v = e.vals;
    for (long i = 0; i < v.size(); ++i) v(i) = fn(v(i));
    return e.vecs * v.asDiagonal() * e.vecs.adjoint();
}

/// Largest step alpha with M + alpha dM >= 0, given Minvhalf = M^{-1/2}.
double max_step(const Mat& minv_half, const Mat& dm) {
    Mat b = hermitize(minv_half * dm * minv_half);
    Eigen::SelfAdjointEigenSolver<Mat> es(b);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-14) return 1e30;
    return -1.0 / lmin;
}

}  // namespace

void Problem::add_entry(int var, int block, long r, long c, cxd v) {
    if (r == c) {
        var_parts_[static_cast<size_t>(var)].push_back({block, r, r, cxd(v.real(), 0)});
    } else {
        var_parts_[static_cast<size_t>(var)].push_back({block, r, c, v});
        var_parts_[static_cast<size_t>(var)].push_back({block, c, r, std::conj(v)});
    }
}

void Problem::add_const_entry(int block, long r, long c, cxd v) {
    if (r == c) {
        const_parts_.push_back({block, r, r, cxd(v.real(), 0)});
    } else {
        const_parts_.push_back({block, r, c, v});
        const_parts_.push_back({block, c, r, std::conj(v)});
    }
}

Result solve(const Problem& p, const Options& opt_in) {
    Options opt = opt_in;
    if (std::getenv("QSPLIT_SDP_VERBOSE")) opt.verbose = true;
    const int m = p.num_vars();
    const auto& dims = p.block_dims();
    const int nb = static_cast<int>(dims.size());
    long total_dim = 0;
    for (long d : dims) total_dim += d;

    // dense F0
    std::vector<Mat> f0(static_cast<size_t>(nb));
    for (int b = 0; b < nb; ++b) f0[static_cast<size_t>(b)] = Mat::Zero(dims[static_cast<size_t>(b)], dims[static_cast<size_t>(b)]);
    for (const auto& part : p.const_parts()) f0[static_cast<size_t>(part.block)](part.a, part.b) += part.w;

    // parts grouped per block, tagged by variable, for Schur assembly
    struct TaggedPart {
        int var;
        long a, b;
        cxd w;
    };
    std::vector<std::vector<TaggedPart>> by_block(static_cast<size_t>(nb));
    for (int i = 0; i < m; ++i)
        for (const auto& part : p.parts()[static_cast<size_t>(i)])
            by_block[static_cast<size_t>(part.block)].push_back({i, part.a, part.b, part.w});

    auto assemble_dual = [&](const VectorXd& y, std::vector<Mat>& out) {
        for (int b = 0; b < nb; ++b) out[static_cast<size_t>(b)] = f0[static_cast<size_t>(b)];
        for (int i = 0; i < m; ++i)
            for (const auto& part : p.parts()[static_cast<size_t>(i)])
                out[static_cast<size_t>(part.block)](part.a, part.b) += y(i) * part.w;
    };

    auto inner = [&](const std::vector<Mat>& f, const std::vector<Mat>& z) {
        double acc = 0;
        for (int b = 0; b < nb; ++b) acc += (f[static_cast<size_t>(b)].adjoint() * z[static_cast<size_t>(b)]).trace().real();
        return acc;
    };

    // <F_i, Z> for all i at once
    auto dots = [&](const std::vector<Mat>& z, VectorXd& out) {
        out.setZero();
        for (int b = 0; b < nb; ++b)
            for (const auto& part : by_block[static_cast<size_t>(b)])
                out(part.var) += (part.w * z[static_cast<size_t>(b)](part.b, part.a)).real();
    };

    // start: y = 0, S = F0 shifted into the cone, X = xi I
    VectorXd y = VectorXd::Zero(m);
    std::vector<Mat> S(static_cast<size_t>(nb)), X(static_cast<size_t>(nb));
    assemble_dual(y, S);
    double f0_scale = 1.0;
    for (int b = 0; b < nb; ++b) f0_scale = std::max(f0_scale, f0[static_cast<size_t>(b)].cwiseAbs().maxCoeff());
    for (int b = 0; b < nb; ++b) {
        const long d = dims[static_cast<size_t>(b)];
        auto es = eig(S[static_cast<size_t>(b)]);
        const double shift = std::max(1.0, -1.5 * es.vals.minCoeff()) + 0.1 * f0_scale;
        S[static_cast<size_t>(b)] = hermitize(S[static_cast<size_t>(b)]) + shift * Mat::Identity(d, d);
    }
    double cmax = 1.0;
    for (double c : p.cost()) cmax = std::max(cmax, std::abs(c));
    for (int b = 0; b < nb; ++b) {
        const long d = dims[static_cast<size_t>(b)];
        X[static_cast<size_t>(b)] = std::max(1.0, cmax) * Mat::Identity(d, d);
    }

    Result res;
    res.y.resize(static_cast<size_t>(m));

    VectorXd rp(m), fdotG(m), cvec(m);
    for (int i = 0; i < m; ++i) cvec(i) = p.cost()[static_cast<size_t>(i)];

    std::vector<Mat> Rd(static_cast<size_t>(nb)), W(static_cast<size_t>(nb)), Sinv(static_cast<size_t>(nb)),
        Sinvhalf(static_cast<size_t>(nb)), Xinvhalf(static_cast<size_t>(nb)), G(static_cast<size_t>(nb)),
        dS(static_cast<size_t>(nb)), dX(static_cast<size_t>(nb)), dSc(static_cast<size_t>(nb)), dXc(static_cast<size_t>(nb)),
        Whalf(static_cast<size_t>(nb)), Winvhalf(static_cast<size_t>(nb));

    MatrixXd M(m, m);

    // the best iterate seen so far is what gets returned, whatever ends the loop
    double best_score = 1e300;
    int best_iter = -1;
    auto score_of = [&](double gap, double scale, double pres, double dres) {
        return std::max({gap / scale, pres / (1 + cmax), dres / (1 + f0_scale)});
    };

    int iter = 0;
    for (; iter < opt.max_iter; ++iter) {
        bool finite = y.allFinite();
        for (int b = 0; b < nb && finite; ++b)
            finite = X[static_cast<size_t>(b)].allFinite() && S[static_cast<size_t>(b)].allFinite();
        if (!finite) break;

        // residuals
        std::vector<Mat> fy(static_cast<size_t>(nb));
        assemble_dual(y, fy);
        double dres = 0;
        for (int b = 0; b < nb; ++b) {
            Rd[static_cast<size_t>(b)] = fy[static_cast<size_t>(b)] - S[static_cast<size_t>(b)];
            dres = std::max(dres, Rd[static_cast<size_t>(b)].cwiseAbs().maxCoeff());
        }
        dots(X, rp);
        rp = cvec - rp;
        const double pres = rp.size() ? rp.cwiseAbs().maxCoeff() : 0.0;

        const double gap = inner(S, X);
        const double pobj = cvec.dot(y);
        const double dobj = -inner(f0, X);
        const double scale = 1.0 + std::abs(pobj) + std::abs(dobj);

        if (opt.verbose)
            std::fprintf(stderr, "it %3d pobj %+.9e dobj %+.9e gap %.3e pres %.3e dres %.3e\n", iter,
                         pobj, dobj, gap, pres, dres);

        const double score = score_of(gap, scale, pres, dres);
        if (std::isfinite(score) && score < best_score) {
            best_score = score;
            best_iter = iter;
            res.primal_obj = pobj;
            res.dual_obj = dobj;
            res.gap = gap;
            res.iterations = iter;
            for (int i = 0; i < m; ++i) res.y[static_cast<size_t>(i)] = y(i);
            res.X = X;
            res.S = S;
        }

        if (gap / scale < opt.tol && pres / (1 + cmax) < 10 * opt.tol && dres / (1 + f0_scale) < 10 * opt.tol) {
            res.status = Status::optimal;
            return res;
        }
        if (std::abs(pobj) > 1e13 || std::abs(dobj) > 1e13) {
            res.status = Status::infeasible;
            return res;
        }
        // give up when the best iterate stops improving
        if (iter - best_iter > 15) break;

        const double mu = gap / static_cast<double>(total_dim);

        try {
        // per-block scalings
        for (int b = 0; b < nb; ++b) {
            auto es = eig(S[static_cast<size_t>(b)]);
            // clamp to keep the scaling finite
            for (long i = 0; i < es.vals.size(); ++i) es.vals(i) = std::max(es.vals(i), 1e-300);
            Mat shalf = apply_fn(es, [](double v) { return std::sqrt(v); });
            Sinvhalf[static_cast<size_t>(b)] = apply_fn(es, [](double v) { return 1.0 / std::sqrt(v); });
            Sinv[static_cast<size_t>(b)] = apply_fn(es, [](double v) { return 1.0 / v; });
            auto em = eig(shalf * X[static_cast<size_t>(b)] * shalf);
            for (long i = 0; i < em.vals.size(); ++i) em.vals(i) = std::max(em.vals(i), 1e-300);
            Mat mid = apply_fn(em, [](double v) { return std::sqrt(v); });
            W[static_cast<size_t>(b)] = hermitize(Sinvhalf[static_cast<size_t>(b)] * mid * Sinvhalf[static_cast<size_t>(b)]);
            auto ex = eig(X[static_cast<size_t>(b)]);
            for (long i = 0; i < ex.vals.size(); ++i) ex.vals(i) = std::max(ex.vals(i), 1e-300);
            Xinvhalf[static_cast<size_t>(b)] = apply_fn(ex, [](double v) { return 1.0 / std::sqrt(v); });
            auto ew = eig(W[static_cast<size_t>(b)]);
            for (long i = 0; i < ew.vals.size(); ++i) ew.vals(i) = std::max(ew.vals(i), 1e-300);
            Whalf[static_cast<size_t>(b)] = apply_fn(ew, [](double v) { return std::sqrt(v); });
            Winvhalf[static_cast<size_t>(b)] = apply_fn(ew, [](double v) { return 1.0 / std::sqrt(v); });
        }

        // Schur matrix M_ij = <F_i, W F_j W>; the contribution of an
        // elementary part pair is symmetric, so one pass over unordered pairs
        // suffices.
        M.setZero();
        for (int b = 0; b < nb; ++b) {
            const Mat& w = W[static_cast<size_t>(b)];
            const auto& parts = by_block[static_cast<size_t>(b)];
            const size_t np = parts.size();
            for (size_t s = 0; s < np; ++s) {
                const auto& e = parts[s];
                for (size_t t = s; t < np; ++t) {
                    const auto& f = parts[t];
                    const double contrib = (e.w * f.w * w(e.b, f.a) * w(f.b, e.a)).real();
                    if (s == t) {
                        M(e.var, f.var) += contrib;
                    } else {
                        M(e.var, f.var) += contrib;
                        M(f.var, e.var) += contrib;
                    }
                }
            }
        }

        Eigen::LLT<MatrixXd> llt;
        double jitter = 0;
        for (int tries = 0; tries < 6; ++tries) {
            MatrixXd Mj = M;
            if (jitter > 0) Mj.diagonal().array() += jitter;
            llt.compute(Mj);
            if (llt.info() == Eigen::Success) break;
            jitter = (jitter == 0) ? 1e-13 * std::max(1.0, M.diagonal().maxCoeff()) : jitter * 100;
        }
        if (llt.info() != Eigen::Success) {
            res.status = Status::max_iterations;
            return res;
        }

        auto solve_direction = [&](const std::vector<Mat>& center, std::vector<Mat>& dSo,
                                   std::vector<Mat>& dXo) {
            // G = center - W Rd W, rhs_i = <F_i, G> - rp_i
            for (int b = 0; b < nb; ++b)
                G[static_cast<size_t>(b)] = center[static_cast<size_t>(b)] -
                                            W[static_cast<size_t>(b)] * Rd[static_cast<size_t>(b)] * W[static_cast<size_t>(b)];
            dots(G, fdotG);
            VectorXd rhs = fdotG - rp;
            VectorXd dy = llt.solve(rhs);
            dy += llt.solve(rhs - M * dy);  // one step of iterative refinement
            for (int b = 0; b < nb; ++b) dSo[static_cast<size_t>(b)] = Rd[static_cast<size_t>(b)];
            for (int i = 0; i < m; ++i)
                for (const auto& part : p.parts()[static_cast<size_t>(i)])
                    dSo[static_cast<size_t>(part.block)](part.a, part.b) += dy(i) * part.w;
            for (int b = 0; b < nb; ++b) {
                dXo[static_cast<size_t>(b)] = hermitize(center[static_cast<size_t>(b)] -
                                                        W[static_cast<size_t>(b)] * dSo[static_cast<size_t>(b)] * W[static_cast<size_t>(b)]);
                dSo[static_cast<size_t>(b)] = hermitize(dSo[static_cast<size_t>(b)]);
            }
            return dy;
        };

        // predictor (affine scaling): center = -X
        std::vector<Mat> center(static_cast<size_t>(nb));
        for (int b = 0; b < nb; ++b) center[static_cast<size_t>(b)] = -X[static_cast<size_t>(b)];
        VectorXd dy_aff = solve_direction(center, dS, dX);

        double ap = 1e30, ad = 1e30;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, max_step(Xinvhalf[static_cast<size_t>(b)], dX[static_cast<size_t>(b)]));
            ad = std::min(ad, max_step(Sinvhalf[static_cast<size_t>(b)], dS[static_cast<size_t>(b)]));
        }
        const double tau = (gap / scale < 1e-4) ? 0.99 : 0.95;
        double ap_aff = std::min(1.0, tau * ap);
        double ad_aff = std::min(1.0, tau * ad);

        double gap_aff = 0;
        for (int b = 0; b < nb; ++b)
            gap_aff += ((S[static_cast<size_t>(b)] + ad_aff * dS[static_cast<size_t>(b)]).adjoint() *
                        (X[static_cast<size_t>(b)] + ap_aff * dX[static_cast<size_t>(b)]))
                           .trace()
                           .real();
        double sigma = std::pow(std::max(gap_aff, 0.0) / gap, 3.0);
        sigma = std::min(1.0, std::max(sigma, 1e-10));

        // corrector: recenter with the Mehrotra sigma plus the second-order
        // term, Jordan-divided by the scaled point V in the NT frame
        for (int b = 0; b < nb; ++b) {
            const Mat& wh = Whalf[static_cast<size_t>(b)];
            const Mat& wih = Winvhalf[static_cast<size_t>(b)];
            Mat dxs = hermitize(wih * dX[static_cast<size_t>(b)] * wih);
            Mat dss = hermitize(wh * dS[static_cast<size_t>(b)] * wh);
            Mat r2 = hermitize(dxs * dss);
            auto ev = eig(hermitize(wh * S[static_cast<size_t>(b)] * wh));
            const double vmax = std::max(ev.vals.maxCoeff(), 1e-300);
            Mat r2b = ev.vecs.adjoint() * r2 * ev.vecs;
            for (long i = 0; i < r2b.rows(); ++i)
                for (long j = 0; j < r2b.cols(); ++j)
                    r2b(i, j) *= 2.0 / std::max(ev.vals(i) + ev.vals(j), 1e-13 * vmax);
            Mat corr = wh * (ev.vecs * r2b * ev.vecs.adjoint()) * wh;
            if (!corr.allFinite()) corr.setZero();
            center[static_cast<size_t>(b)] = sigma * mu * Sinv[static_cast<size_t>(b)] -
                                             X[static_cast<size_t>(b)] - hermitize(corr);
        }
        VectorXd dy_corr = solve_direction(center, dSc, dXc);

        ap = 1e30;
        ad = 1e30;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, max_step(Xinvhalf[static_cast<size_t>(b)], dXc[static_cast<size_t>(b)]));
            ad = std::min(ad, max_step(Sinvhalf[static_cast<size_t>(b)], dSc[static_cast<size_t>(b)]));
        }
        double apf = std::min(1.0, tau * ap);
        double adf = std::min(1.0, tau * ad);

        // fall back to the affine direction if the corrector went bad
        bool ok = true;
        for (int b = 0; b < nb && ok; ++b)
            if (!dXc[static_cast<size_t>(b)].allFinite() || !dSc[static_cast<size_t>(b)].allFinite()) ok = false;
        if (!ok || !dy_corr.allFinite()) {
            dXc = dX;
            dSc = dS;
            dy_corr = dy_aff;
            apf = ap_aff;
            adf = ad_aff;
        }

        for (int b = 0; b < nb; ++b) {
            X[static_cast<size_t>(b)] = hermitize(X[static_cast<size_t>(b)] + apf * dXc[static_cast<size_t>(b)]);
            S[static_cast<size_t>(b)] = hermitize(S[static_cast<size_t>(b)] + adf * dSc[static_cast<size_t>(b)]);
        }
        y += adf * dy_corr;
        } catch (const std::exception&) {
            break;  // numerical breakdown: fall back to the best iterate
        }
    }

    res.status = Status::max_iterations;
    return res;
}

}  // namespace qsplit::sdp
