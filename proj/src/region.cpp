#include "qsplit/region.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qsplit {

namespace {

double eps0_of(double eps) { return eps * eps / 800.0; }

/// Marginal of a pure ket on `keep` without forming the full density matrix.
LabeledOperator ket_marginal(const LabeledOperator& ket, const std::set<std::string>& keep) {
    std::set<std::string> drop;
    for (const auto& n : ket.rows().names())
        if (!keep.count(n)) drop.insert(n);
    if (drop.empty()) return ket.density();
    auto o = op_map(ket, drop, keep);
    return LabeledOperator(o.rows(), o.rows(), o.matrix() * o.matrix().adjoint());
}

double vn_of_ket(const LabeledOperator& ket, const std::set<std::string>& keep) {
    return von_neumann(ket_marginal(ket, keep));
}

/// Coherent information I(a > b) of a pure global ket.
double coh_of_ket(const LabeledOperator& ket, const std::set<std::string>& a,
                  const std::set<std::string>& b) {
    std::set<std::string> ab = a;
    ab.insert(b.begin(), b.end());
    return vn_of_ket(ket, b) - von_neumann(ket_marginal(ket, ab));
}

struct StatusTracker {
    bool ok = true;
    double value(const EntropyResult& r) {
        if (r.status == SolveStatus::infeasible) ok = false;
        return r.value;
    }
};

/// max over e in [0, budget] of min(h - e, i + e), with the optimizing e.
std::pair<double, double> best_assisted_rate(double h, double i, double budget) {
    auto val = [&](double e) { return std::min(h - e, i + e); };
    double best_e = 0, best = val(0);
    for (double cand : {budget, std::clamp((h - i) / 2, 0.0, budget)}) {
        if (val(cand) > best) {
            best = val(cand);
            best_e = cand;
        }
    }
    return {best, best_e};
}

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

std::string RegionTrace::to_csv() const {
    std::set<std::string> rate_keys, raw_keys, ing_keys;
    for (const auto& p : points) {
        for (const auto& [k2, v] : p.rates) rate_keys.insert(k2);
        for (const auto& [k2, v] : p.rates_raw) raw_keys.insert(k2);
        for (const auto& [k2, v] : p.ingredients) ing_keys.insert(k2);
    }
    std::ostringstream os;
    os << "theta,direction,feasible";
    for (const auto& k2 : rate_keys) os << "," << k2;
    for (const auto& k2 : raw_keys) os << ",raw." << k2;
    for (const auto& k2 : ing_keys) os << ",ing." << k2;
    os << ",slack\n";
    for (const auto& p : points) {
        os << fmt9(p.theta) << "," << p.direction << "," << (p.feasible ? 1 : 0);
        auto emit = [&](const std::map<std::string, double>& m, const std::string& k2) {
            auto it = m.find(k2);
            os << ",";
            if (it != m.end()) os << fmt9(it->second);
        };
        for (const auto& k2 : rate_keys) emit(p.rates, k2);
        for (const auto& k2 : raw_keys) emit(p.rates_raw, k2);
        for (const auto& k2 : ing_keys) emit(p.ingredients, k2);
        os << "," << fmt9(p.slack) << "\n";
    }
    return os.str();
}

nlohmann::ordered_json RegionTrace::to_json() const {
    nlohmann::ordered_json j;
    j["channel"] = channel_id;
    j["control"] = control_id;
    j["mode"] = mode;
    j["epsilon"] = epsilon;
    j["k"] = k;
    auto mj = [](const std::map<std::string, double>& m) {
        nlohmann::ordered_json o = nlohmann::ordered_json::object();
        for (const auto& [k2, v] : m) o[k2] = v;
        return o;
    };
    j["corners"] = mj(corners);
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : points) {
        nlohmann::ordered_json pj;
        pj["theta"] = p.theta;
        pj["direction"] = p.direction;
        pj["feasible"] = p.feasible;
        pj["rates"] = mj(p.rates);
        pj["rates_raw"] = mj(p.rates_raw);
        pj["ingredients"] = mj(p.ingredients);
        pj["slack"] = p.slack;
        j["points"].push_back(pj);
    }
    return j;
}

LabeledOperator default_alice_control(const Channel& ch) {
    const long d = ch.inputs().dim_of("Ap");
    return epr_ket("As", "Ap", d);
}

LabeledOperator default_bob_control(const Channel& ch) {
    const long d = ch.inputs().dim_of("Bp");
    return epr_ket("Bs", "Bp", d);
}

Channel channel_power(const Channel& ch, int k) {
    if (k == 1) return ch;
    std::vector<LabeledOperator> copies;
    std::vector<Mat> kraus;
    std::vector<Subsystem> in_subs, out_subs;
    for (int i = 1; i <= k; ++i) {
        std::map<std::string, std::string> ren;
        for (const auto& n : ch.inputs().names()) ren[n] = n + "_" + std::to_string(i);
        for (const auto& n : ch.outputs().names()) ren[n] = n + "_" + std::to_string(i);
        for (const auto& s : ch.inputs().subsystems()) in_subs.push_back({ren[s.name], s.dim});
        for (const auto& s : ch.outputs().subsystems()) out_subs.push_back({ren[s.name], s.dim});
    }
    SystemSignature in_sig(in_subs), out_sig(out_subs);
    // all k-fold Kraus products
    std::vector<std::vector<size_t>> idx{{}};
    for (int i = 0; i < k; ++i) {
        std::vector<std::vector<size_t>> next;
        for (const auto& pre : idx)
            for (size_t j = 0; j < ch.kraus().size(); ++j) {
                auto cp = pre;
                cp.push_back(j);
                next.push_back(cp);
            }
        idx = std::move(next);
    }
    for (const auto& combo : idx) {
        LabeledOperator acc;
        for (int i = 1; i <= k; ++i) {
            std::map<std::string, std::string> ren;
            for (const auto& n : ch.inputs().names()) ren[n] = n + "_" + std::to_string(i);
            for (const auto& n : ch.outputs().names()) ren[n] = n + "_" + std::to_string(i);
            LabeledOperator kop(ch.outputs(), ch.inputs(), ch.kraus()[combo[static_cast<size_t>(i - 1)]]);
            kop = kop.relabeled(ren);
            acc = (i == 1) ? kop : tensor(acc, kop);
        }
        // align to the power signatures
        kraus.push_back(LabeledOperator(out_sig, acc.cols(), acc.matrix()).matrix());
    }
    return Channel(ch.name() + "^" + std::to_string(k), in_sig, out_sig, std::move(kraus));
}

RegionTrace p2p_region(const Channel& ch, const LabeledOperator& omega, double eps,
                       const std::vector<double>& theta_grid, const std::vector<double>& ea1_grid) {
    RegionTrace trace;
    trace.channel_id = ch.name();
    trace.control_id = "omega";
    trace.mode = "p2p";
    trace.epsilon = eps;
    const double e0 = eps0_of(eps);
    const double slack = eps > 0 ? std::log2(4 * eps * eps) : 0.0;
    const std::string bport = ch.outputs().names().front();
    auto dil = ch.dilate("E");

    for (double theta : theta_grid) {
        auto sp = split_isometry(omega, "As", theta, "As0", "As1");
        auto omega_p = apply_split(sp, omega);
        auto omega_c = dil.isometry.apply_to(omega_p);

        StatusTracker st;
        const double h00 = st.value(hmin_cond(omega_p.density(), {"As0"}, {"As1"}, e0));
        const double i0 = st.value(imin_coherent(omega_c.density(), {"As0"}, {bport}, e0));
        const double h1 = st.value(hmin_cond(omega_p.density(), {"As1"}, {}, eps));
        const double i1 = st.value(imin_coherent(omega_c.density(), {"As1"}, {"As0", bport}, e0));

        for (double ea1 : ea1_grid) {
            RatePoint pt;
            pt.theta = theta;
            pt.direction = "a0_first";
            pt.slack = slack;
            pt.feasible = st.ok;
            pt.ingredients = {{"Hmin_e0(As0|As1)", h00},
                              {"Imin_e0(As0>B)", i0},
                              {"Hmin_e(As1)", h1},
                              {"Imin_e0(As1>As0B)", i1}};
            const double qa0 = std::min(h00, i0) + slack;
            const double qa1 = std::min(h1 - ea1, i1 + ea1) + slack;
            pt.rates_raw = {{"Q_A0", qa0}, {"Q_A1", qa1}, {"E_A1", ea1}};
            pt.rates = {{"Q_A0", std::max(0.0, qa0)}, {"Q_A1", std::max(0.0, qa1)}, {"E_A1", ea1}};
            trace.points.push_back(pt);
        }
        if (theta == theta_grid.front()) {
            trace.corners["theta0.Q_A0"] = trace.points.back().rates.at("Q_A0");
            trace.corners["theta0.Q_A1"] = trace.points.back().rates.at("Q_A1");
        }
    }
    if (!trace.points.empty()) {
        trace.corners["theta1.Q_A0"] = trace.points.back().rates.at("Q_A0");
        trace.corners["theta1.Q_A1"] = trace.points.back().rates.at("Q_A1");
    }
    return trace;
}

RegionTrace qmac_region(const Channel& ch, const LabeledOperator& omega,
                        const LabeledOperator& delta, double eps,
                        const std::vector<double>& theta_grid, double ea, double eb) {
    RegionTrace trace;
    trace.channel_id = ch.name();
    trace.control_id = "omega x delta";
    trace.mode = "qmac";
    trace.epsilon = eps;
    const double e0 = eps0_of(eps);
    const double slack = eps > 0 ? 4 * std::log2(eps) : 0.0;
    const std::string cport = ch.outputs().names().front();
    auto dil = ch.dilate("E");
    auto sigma = tensor(omega, delta);

    for (double theta : theta_grid) {
        auto sp = split_isometry(sigma, "As", theta, "As0", "As1");
        auto sigma_t = apply_split(sp, sigma);
        auto sigma_c = dil.isometry.apply_to(sigma_t);

        for (int dir = 0; dir < 2; ++dir) {
            const std::string first = dir == 0 ? "As0" : "As1";
            const std::string second = dir == 0 ? "As1" : "As0";
            StatusTracker st;
            const double h00 = st.value(hmin_cond(sigma_t.density(), {first}, {second}, e0));
            const double h11 = st.value(hmin_cond(sigma_t.density(), {second}, {}, eps));
            const double hb = st.value(hmin_cond(sigma_t.density(), {"Bs"}, {}, eps));
            const double i0 = st.value(imin_coherent(sigma_c.density(), {first}, {cport}, e0));
            const double i1 =
                st.value(imin_coherent(sigma_c.density(), {second}, {cport, first, "Bs"}, e0));
            const double ib = st.value(imin_coherent(sigma_c.density(), {"Bs"}, {cport, first}, e0));

            RatePoint pt;
            pt.theta = theta;
            pt.direction = (dir == 0) ? "a0_first" : "a1_first";
            pt.slack = slack;
            pt.feasible = st.ok;
            pt.ingredients = {{"Hmin_e0(" + first + "|" + second + ")", h00},
                              {"Hmin_e(" + second + ")", h11},
                              {"Hmin_e(Bs)", hb},
                              {"Imin_e0(" + first + ">C)", i0},
                              {"Imin_e0(" + second + ">C" + first + "Bs)", i1},
                              {"Imin_e0(Bs>C" + first + ")", ib}};

            // optimal ebit allocation between the two virtual senders
            double best = -1e300, best_e = 0;
            for (double cand :
                 {0.0, ea, std::clamp((h00 - i0) / 2, 0.0, ea), std::clamp(ea - (h11 - i1) / 2, 0.0, ea)}) {
                const double v = std::min(h00 - cand, i0 + cand) +
                                 std::min(h11 - (ea - cand), i1 + (ea - cand));
                if (v > best) {
                    best = v;
                    best_e = cand;
                }
            }
            const double qa = best + 2 * slack;
            auto [qb_core, ebu] = best_assisted_rate(hb, ib, eb);
            (void)ebu;
            const double qb = qb_core + slack;
            pt.ingredients["E_A0_opt"] = best_e;
            pt.rates_raw = {{"Q_A", qa}, {"Q_B", qb}, {"E_A", ea}, {"E_B", eb}};
            pt.rates = {{"Q_A", std::max(0.0, qa)}, {"Q_B", std::max(0.0, qb)}, {"E_A", ea}, {"E_B", eb}};
            trace.points.push_back(pt);

            if (dir == 0 && theta == theta_grid.front()) {
                trace.corners["S.Q_A"] = pt.rates.at("Q_A");
                trace.corners["S.Q_B"] = pt.rates.at("Q_B");
            }
            if (dir == 0 && theta == theta_grid.back()) {
                trace.corners["T.Q_A"] = pt.rates.at("Q_A");
                trace.corners["T.Q_B"] = pt.rates.at("Q_B");
            }
        }
    }
    return trace;
}

namespace {

Channel swap_qic_roles(const Channel& ch) {
    if (ch.inputs().dim_of("Ap") != ch.inputs().dim_of("Bp") ||
        ch.outputs().dim_of("C") != ch.outputs().dim_of("D"))
        throw std::invalid_argument("qic role swap requires matching port dimensions");
    std::map<std::string, std::string> ren{{"Ap", "Bp"}, {"Bp", "Ap"}, {"C", "D"}, {"D", "C"}};
    std::vector<Mat> kraus;
    for (const auto& k : ch.kraus())
        kraus.push_back(LabeledOperator(ch.outputs(), ch.inputs(), k).relabeled(ren).matrix());
    return Channel(ch.name() + "~swapped", ch.inputs(), ch.outputs(), std::move(kraus));
}

}  // namespace

RegionTrace qic_region(const Channel& ch, const LabeledOperator& omega,
                       const LabeledOperator& delta, double eps,
                       const std::vector<double>& theta_grid, const std::vector<double>& q0_grid,
                       QicDirection dir, double ea, double eb) {
    if (dir == QicDirection::b_helps_a) {
        auto swapped = qic_region(swap_qic_roles(ch),
                                  delta.relabeled({{"Bs", "As"}, {"Bp", "Ap"}}),
                                  omega.relabeled({{"As", "Bs"}, {"Ap", "Bp"}}), eps, theta_grid,
                                  q0_grid, QicDirection::a_helps_b, eb, ea);
        RegionTrace out = swapped;
        out.channel_id = ch.name();
        out.points.clear();
        for (auto p : swapped.points) {
            std::swap(p.rates["Q_A"], p.rates["Q_B"]);
            std::swap(p.rates_raw["Q_A"], p.rates_raw["Q_B"]);
            std::swap(p.rates["E_A"], p.rates["E_B"]);
            std::swap(p.rates_raw["E_A"], p.rates_raw["E_B"]);
            p.direction = "b_helps_a";
            out.points.push_back(p);
        }
        return out;
    }

    RegionTrace trace;
    trace.channel_id = ch.name();
    trace.control_id = "omega x delta";
    trace.mode = "qic";
    trace.epsilon = eps;
    const double e0 = eps0_of(eps);
    const double slack = eps > 0 ? std::log2(eps * eps) : 0.0;
    auto dil = ch.dilate("E");
    auto sigma = tensor(omega, delta);
    auto sigma_c0 = dil.isometry.apply_to(sigma);

    // trivial (unsplit) ingredients, theta independent
    StatusTracker st0;
    const double ha_triv = st0.value(hmin_cond(sigma.density(), {"As"}, {}, eps));
    const double ia_triv = st0.value(imin_coherent(sigma_c0.density(), {"As"}, {"C"}, e0));
    const double hb_triv = st0.value(hmin_cond(sigma.density(), {"Bs"}, {}, eps));
    const double ib_triv = st0.value(imin_coherent(sigma_c0.density(), {"Bs"}, {"D"}, e0));

    for (double theta : theta_grid) {
        auto sp = split_isometry(sigma, "As", theta, "As0", "As1");
        auto sigma_t = apply_split(sp, sigma);
        auto sigma_c = dil.isometry.apply_to(sigma_t);

        StatusTracker st;
        const double iq0 = st.value(imin_coherent(sigma_c.density(), {"As0"}, {"D"}, e0));
        const double hq0 = st.value(hmin_cond(sigma_t.density(), {"As0"}, {"As1"}, e0));
        const double ha = st.value(hmin_cond(sigma_t.density(), {"As1"}, {}, eps));
        const double ia = st.value(imin_coherent(sigma_c.density(), {"As1"}, {"C"}, e0));
        const double hb = st.value(hmin_cond(sigma_t.density(), {"Bs"}, {}, eps));
        const double ib = st.value(imin_coherent(sigma_c.density(), {"Bs"}, {"As0", "D"}, e0));

        for (double q0 : q0_grid) {
            RatePoint pt;
            pt.theta = theta;
            pt.direction = "a_helps_b";
            pt.slack = slack;
            pt.ingredients = {{"Imin_e0(As0>D)", iq0}, {"Hmin_e0(As0|As1)", hq0},
                              {"Hmin_e(As1)", ha},    {"Imin_e0(As1>C)", ia},
                              {"Hmin_e(Bs)", hb},     {"Imin_e0(Bs>As0D)", ib},
                              {"Q_0", q0}};
            if (q0 == 0.0) {
                // no help: the product-protocol rectangle, evaluated unsplit
                pt.feasible = st0.ok;
                pt.ingredients["Hmin_e(As)"] = ha_triv;
                pt.ingredients["Imin_e0(As>C)"] = ia_triv;
                pt.ingredients["Imin_e0(Bs>D)"] = ib_triv;
                const double qa = best_assisted_rate(ha_triv, ia_triv, ea).first + slack;
                const double qb = best_assisted_rate(hb_triv, ib_triv, eb).first + slack;
                pt.rates_raw = {{"Q_A", qa}, {"Q_B", qb}, {"Q_0", 0.0}};
                pt.rates = {{"Q_A", std::max(0.0, qa)}, {"Q_B", std::max(0.0, qb)}, {"Q_0", 0.0}};
            } else {
                pt.feasible = st.ok && (q0 < std::min(iq0, hq0) + slack + 1e-12);
                const double qa = best_assisted_rate(ha, ia, ea).first + slack;
                const double qb = best_assisted_rate(hb, ib, eb).first + slack;
                pt.rates_raw = {{"Q_A", qa}, {"Q_B", qb}, {"Q_0", q0}};
                pt.rates = {{"Q_A", std::max(0.0, qa)}, {"Q_B", std::max(0.0, qb)}, {"Q_0", q0}};
            }
            trace.points.push_back(pt);
        }
    }
    return trace;
}

RegionTrace iid_region(const Channel& ch, const LabeledOperator& omega,
                       const LabeledOperator& delta, int k, const std::vector<double>& theta_grid) {
    if (k < 1 || k > 2) throw std::invalid_argument("iid_region: k must be 1 or 2");
    const bool qic = ch.outputs().count() == 2;

    RegionTrace trace;
    trace.channel_id = ch.name();
    trace.control_id = "omega x delta";
    trace.mode = qic ? "iid_qic" : "iid_qmac";
    trace.k = k;

    Channel chk = channel_power(ch, k);
    auto dil = chk.dilate("E");

    auto group = [&](const std::string& base) {
        std::set<std::string> g;
        if (k == 1)
            g.insert(base);
        else
            for (int i = 1; i <= k; ++i) g.insert(base + "_" + std::to_string(i));
        return g;
    };
    auto power_control = [&](const LabeledOperator& x) {
        return (k == 1) ? x : tensor_power(x, k);
    };

    if (!qic) {
        auto sigma = tensor(power_control(omega), power_control(delta));
        auto sigma_c = dil.isometry.apply_to(sigma);
        auto gAs = group("As"), gBs = group("Bs"), gC = group("C");
        std::set<std::string> gBsC = gBs, gAsC = gAs, gAsBs = gAs;
        gBsC.insert(gC.begin(), gC.end());
        gAsC.insert(gC.begin(), gC.end());
        gAsBs.insert(gBs.begin(), gBs.end());

        const double ha = vn_of_ket(sigma, gAs) / k;
        const double hb = vn_of_ket(sigma, gBs) / k;
        const double ia = coh_of_ket(sigma_c, gAs, gBsC) / k;
        const double ib = coh_of_ket(sigma_c, gBs, gAsC) / k;
        const double isum = coh_of_ket(sigma_c, gAsBs, gC) / k;
        const double ia_alone = coh_of_ket(sigma_c, gAs, gC) / k;
        const double ib_alone = coh_of_ket(sigma_c, gBs, gC) / k;

        RatePoint pt;
        pt.direction = "pentagon";
        pt.rates = {{"H_A", ha}, {"I_A_cond", ia}, {"H_B", hb}, {"I_B_cond", ib}, {"I_sum", isum}};
        pt.rates_raw = pt.rates;
        pt.ingredients = {{"I(As>C)", ia_alone}, {"I(Bs>C)", ib_alone}};
        trace.points.push_back(pt);
        trace.corners = {{"S.Q_A", std::max(0.0, std::min(ha, ia))},
                         {"S.Q_B", std::max(0.0, std::min(hb, ib_alone))},
                         {"T.Q_A", std::max(0.0, std::min(ha, ia_alone))},
                         {"T.Q_B", std::max(0.0, std::min(hb, ib))}};
        return trace;
    }

    // QIC: theta-union of the two helping directions
    std::vector<double> grid = theta_grid;
    if (grid.empty())
        for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);

    auto run_direction = [&](const Channel& base, const LabeledOperator& om,
                             const LabeledOperator& de, const std::string& tag, bool swap_rates) {
        Channel bk = channel_power(base, k);
        auto dil2 = bk.dilate("E");
        for (double theta : grid) {
            // split each copy of the Alice control, then take powers
            auto sp = split_isometry(om, "As", theta, "As0", "As1");
            auto om_t = apply_split(sp, om);
            auto sigma = tensor(power_control(om_t), power_control(de));
            auto sigma_c = dil2.isometry.apply_to(sigma);
            auto gA1 = group("As1"), gA0 = group("As0"), gBs = group("Bs"), gC = group("C"),
                 gD = group("D");
            std::set<std::string> gA0D = gA0;
            gA0D.insert(gD.begin(), gD.end());

            const double ha1 = vn_of_ket(sigma, gA1) / k;
            const double ia1 = coh_of_ket(sigma_c, gA1, gC) / k;
            const double hb = vn_of_ket(sigma, gBs) / k;
            const double ib = coh_of_ket(sigma_c, gBs, gA0D) / k;

            RatePoint pt;
            pt.theta = theta;
            pt.direction = tag;
            const double qa = std::max(0.0, std::min(ha1, ia1));
            const double qb = std::max(0.0, std::min(hb, ib));
            pt.rates = {{"Q_A", swap_rates ? qb : qa}, {"Q_B", swap_rates ? qa : qb}};
            pt.rates_raw = {{"Q_A", swap_rates ? std::min(hb, ib) : std::min(ha1, ia1)},
                            {"Q_B", swap_rates ? std::min(ha1, ia1) : std::min(hb, ib)}};
            pt.ingredients = {{"H(As1)", ha1}, {"I(As1>C)", ia1}, {"H(Bs)", hb}, {"I(Bs>As0D)", ib}};
            trace.points.push_back(pt);
        }
    };

    run_direction(ch, omega, delta, "a_helps_b", false);
    run_direction(swap_qic_roles(ch), delta.relabeled({{"Bs", "As"}, {"Bp", "Ap"}}),
                  omega.relabeled({{"As", "Bs"}, {"Ap", "Bp"}}), "b_helps_a", true);
    return trace;
}

std::map<std::string, double> qmac_corner_direct(const Channel& ch, const LabeledOperator& omega,
                                                 const LabeledOperator& delta, double eps,
                                                 const std::string& decode_order) {
    const double e0 = eps0_of(eps);
    const std::string cport = ch.outputs().names().front();
    auto dil = ch.dilate("E");
    auto sigma = tensor(omega, delta);
    auto sigma_c = dil.isometry.apply_to(sigma);

    std::map<std::string, double> out;
    out["Hmin_e(As)"] = hmin_cond(sigma.density(), {"As"}, {}, eps).value;
    out["Hmin_e(Bs)"] = hmin_cond(sigma.density(), {"Bs"}, {}, eps).value;
    if (decode_order == "BA") {
        out["Imin_e0(Bs>C)"] = imin_coherent(sigma_c.density(), {"Bs"}, {cport}, e0).value;
        out["Imin_e0(As>CBs)"] =
            imin_coherent(sigma_c.density(), {"As"}, {cport, "Bs"}, e0).value;
    } else {
        out["Imin_e0(As>C)"] = imin_coherent(sigma_c.density(), {"As"}, {cport}, e0).value;
        out["Imin_e0(Bs>CAs)"] =
            imin_coherent(sigma_c.density(), {"Bs"}, {cport, "As"}, e0).value;
    }
    return out;
}

}  // namespace qsplit
