#include "qsplit/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qsplit {

std::vector<double> SplitSpec::pushforward() const {
    const size_t n = base.size();
    std::vector<double> out(n, 0.0);
    for (size_t u = 0; u < n; ++u)
        for (size_t v = 0; v < n; ++v) out[std::max(u, v)] += p_u[u] * p_v[v];
    return out;
}

std::vector<double> SplitSpec::conditional_given_u(long u) const {
    const long n = static_cast<long>(base.size());
    std::vector<double> out(static_cast<size_t>(n), 0.0);
    double below = 0;
    for (long v = 0; v <= u; ++v) below += p_v[static_cast<size_t>(v)];
    out[static_cast<size_t>(u)] = below;
    for (long a = u + 1; a < n; ++a) out[static_cast<size_t>(a)] = p_v[static_cast<size_t>(a)];
    return out;
}

SplitSpec split_distributions(const std::vector<double>& p, double theta) {
    if (theta < 0 || theta > 1) throw std::invalid_argument("split: theta must be in [0, 1]");
    double total = 0;
    for (double x : p) {
        if (x < -1e-12) throw std::invalid_argument("split: negative probability");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split: probabilities must sum to 1");

    // compact zero-mass symbols
    std::vector<size_t> keep;
    for (size_t i = 0; i < p.size(); ++i)
        if (p[i] > 1e-15) keep.push_back(i);
    const size_t n = keep.size();
    if (n == 0) throw std::invalid_argument("split: empty distribution");

    SplitSpec s;
    s.base = p;
    s.theta = theta;
    s.p_u.assign(p.size(), 0.0);
    s.p_v.assign(p.size(), 0.0);

    // the endpoints are exactly degenerate
    if (theta == 0.0) {
        s.p_u[keep[0]] = 1.0;
        for (size_t i = 0; i < n; ++i) s.p_v[keep[i]] = p[keep[i]];
        return s;
    }
    if (theta == 1.0) {
        for (size_t i = 0; i < n; ++i) s.p_u[keep[i]] = p[keep[i]];
        s.p_v[keep[0]] = 1.0;
        return s;
    }

    std::vector<double> fa(n), fu(n), fv(n);
    double acc = 0;
    for (size_t i = 0; i < n; ++i) {
        acc += p[keep[i]];
        fa[i] = acc;
    }
    fa[n - 1] = 1.0;
    for (size_t i = 0; i < n; ++i) {
        fu[i] = theta * fa[i] + (1.0 - theta);
        fv[i] = fa[i] / fu[i];
    }
    for (size_t i = 0; i < n; ++i) {
        s.p_u[keep[i]] = fu[i] - (i ? fu[i - 1] : 0.0);
        s.p_v[keep[i]] = fv[i] - (i ? fv[i - 1] : 0.0);
    }
    return s;
}

SplitIsometry split_isometry(const LabeledOperator& omega, const std::string& source, double theta,
                             const std::string& out0, const std::string& out1) {
    if (!omega.is_ket()) throw std::invalid_argument("split_isometry: omega must be a ket");
    const long d = omega.rows().dim_of(source);
    SystemSignature src_sig{{source, d}};
    SystemSignature rest = omega.rows().without({source});
    const auto base_src = placement(omega.rows(), src_sig);
    const auto base_rest = placement(omega.rows(), rest);
    const Vec v = omega.vector();

    std::vector<double> weight(static_cast<size_t>(d), 0.0);
    for (long a = 0; a < d; ++a)
        for (long r = 0; r < rest.total_dim(); ++r)
            weight[static_cast<size_t>(a)] +=
                std::norm(v(base_src[static_cast<size_t>(a)] + base_rest[static_cast<size_t>(r)]));

    // alphabet order: decreasing weight, ties by basis index
    std::vector<long> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), 0L);
    std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
        return weight[static_cast<size_t>(a)] > weight[static_cast<size_t>(b)];
    });
    std::vector<double> sorted(static_cast<size_t>(d));
    double total = 0;
    for (long r = 0; r < d; ++r) {
        sorted[static_cast<size_t>(r)] = weight[static_cast<size_t>(order[static_cast<size_t>(r)])];
        total += sorted[static_cast<size_t>(r)];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("split_isometry: omega must be normalized");

    SplitSpec spec = split_distributions(sorted, theta);

    // V |a> = sum_{max(u,v)=rank(a)} sqrt(p_u(u) p_v(v) / P(rank)) |u>|v>
    SystemSignature osig{{out0, d}, {out1, d}};
    std::vector<Subsystem> rows = osig.subsystems();
    Mat m = Mat::Zero(d * d, d);
    const auto base0 = placement(osig, SystemSignature{{out0, d}});
    const auto base1 = placement(osig, SystemSignature{{out1, d}});
    for (long rank = 0; rank < d; ++rank) {
        const double pa = sorted[static_cast<size_t>(rank)];
        if (pa <= 1e-15) continue;
        const long a = order[static_cast<size_t>(rank)];
        if (theta == 0.0) {  // exact: |a> -> |0>|rank>
            m(base0[0] + base1[static_cast<size_t>(rank)], a) = 1.0;
            continue;
        }
        if (theta == 1.0) {  // exact: |a> -> |rank>|0>
            m(base0[static_cast<size_t>(rank)] + base1[0], a) = 1.0;
            continue;
        }
        for (long u = 0; u <= rank; ++u) {
            // (u, rank) and (rank, u) pairs, the diagonal once
            const double pu = spec.p_u[static_cast<size_t>(u)];
            const double pv = spec.p_v[static_cast<size_t>(u)];
            const double pur = spec.p_u[static_cast<size_t>(rank)];
            const double pvr = spec.p_v[static_cast<size_t>(rank)];
            if (u < rank) {
                m(base0[static_cast<size_t>(u)] + base1[static_cast<size_t>(rank)], a) +=
                    std::sqrt(pu * pvr / pa);
                m(base0[static_cast<size_t>(rank)] + base1[static_cast<size_t>(u)], a) +=
                    std::sqrt(pur * pv / pa);
            } else {
                m(base0[static_cast<size_t>(rank)] + base1[static_cast<size_t>(rank)], a) +=
                    std::sqrt(pur * pvr / pa);
            }
        }
    }

    SplitIsometry out;
    out.theta = theta;
    out.matrix = LabeledOperator(osig, src_sig, std::move(m));
    out.spec = spec;
    out.order = order;
    out.source = source;
    out.out0 = out0;
    out.out1 = out1;
    return out;
}

LabeledOperator apply_split(const SplitIsometry& split, const LabeledOperator& omega) {
    return split.matrix.apply_to(omega);
}

std::vector<ContinuityPoint> continuity_probe(const LabeledOperator& omega,
                                              const std::string& source, const Channel& channel,
                                              const std::vector<double>& theta_grid) {
    auto dil = channel.dilate("E");
    auto dilated = [&](double theta) {
        auto sp = split_isometry(omega, source, theta, source + "0", source + "1");
        return dil.isometry.apply_to(apply_split(sp, omega));
    };
    std::vector<ContinuityPoint> out;
    for (size_t i = 0; i + 1 < theta_grid.size(); ++i) {
        auto lo = dilated(theta_grid[i]);
        auto hi = dilated(theta_grid[i + 1]);
        // 1 - |<lo|hi>| via the phase-aligned difference, stable near zero
        cxd ip = lo.vector().dot(hi.vector());
        cxd phase = (std::abs(ip) > 1e-300) ? ip / std::abs(ip) : cxd(1, 0);
        const double h = 0.5 * (lo.vector() - hi.vector() / phase).squaredNorm();
        ContinuityPoint pt;
        pt.theta_lo = theta_grid[i];
        pt.theta_hi = theta_grid[i + 1];
        pt.purified_distance = std::sqrt(std::max(0.0, h * (2.0 - h)));
        out.push_back(pt);
    }
    return out;
}

}  // namespace qsplit
