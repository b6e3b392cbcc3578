// Acceptance suite: one criterion per entry, each printing a pass/fail line
// with the measured numbers. Exit code is the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qsplit/decoupling.hpp"
#include "qsplit/entropy.hpp"
#include "qsplit/region.hpp"

using namespace qsplit;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

std::vector<double> random_dist(RngStream& rng, int n, double floor_mass) {
    std::vector<double> p(static_cast<size_t>(n));
    double tot = 0;
    for (auto& x : p) {
        x = floor_mass + rng.uniform();
        tot += x;
    }
    for (auto& x : p) x /= tot;
    std::sort(p.begin(), p.end(), std::greater<>());
    return p;
}

// 1. analytic values of the conditional min-entropy program
Outcome criterion_entropy_oracles() {
    Outcome o;
    std::ostringstream os;
    double worst = 0, worst_gap = 0;
    RngStream rng(1001, 0);
    for (long d : {2L, 3L, 4L}) {
        auto phi = epr_ket("A", "B", d).density();
        auto r1 = hmin_cond(phi, {"A"}, {"B"}, 0);
        worst = std::max(worst, std::abs(r1.value + std::log2(double(d))));
        worst_gap = std::max(worst_gap, r1.gap);
        o.ok &= r1.status == SolveStatus::optimal;

        auto sig = random_density(SystemSignature{{"B", 3}}, 2, rng);
        auto prod = tensor(maximally_mixed(SystemSignature{{"A", d}}), sig);
        auto r2 = hmin_cond(prod, {"A"}, {"B"}, 0);
        worst = std::max(worst, std::abs(r2.value - std::log2(double(d))));
        worst_gap = std::max(worst_gap, r2.gap);

        auto pure = tensor(basis_ket(SystemSignature{{"A", d}}, 0).density(), sig);
        auto r3 = hmin_cond(pure, {"A"}, {"B"}, 0);
        worst = std::max(worst, std::abs(r3.value));
        worst_gap = std::max(worst_gap, r3.gap);
    }
    o.ok &= worst <= 1e-6 && worst_gap <= 1e-7;
    os << "max |error| " << worst << " (tol 1e-6), max gap " << worst_gap << " (tol 1e-7)";
    o.detail = os.str();
    return o;
}

// 2. op-calculus identities
Outcome criterion_op_calculus() {
    Outcome o;
    RngStream rng(1002, 0);
    double worst = 0;
    for (long d : {2L, 3L, 4L}) {
        for (int t = 0; t < 100; ++t) {
            auto psi = random_ket(SystemSignature{{"A", d}, {"B", d}}, rng);
            auto phi = random_ket(SystemSignature{{"A", d}, {"C", d}}, rng);
            // swap identity
            auto lhs = op_map(phi, {"A"}, {"C"}).apply_to(psi);
            auto rhs = op_map(psi, {"A"}, {"B"}).apply_to(phi);
            worst = std::max(worst, (lhs.vector() - rhs.vector()).norm());
            // EPR contraction
            auto epr = epr_ket("A", "A2", d);
            auto moved = (op_map(psi, {"A"}, {"B"}) * cxd(std::sqrt(double(d)), 0)).apply_to(epr);
            worst = std::max(worst, (moved.vector() - psi.relabeled({{"A", "A2"}}).vector()).norm());
            // op under a leg map
            Mat m(d, d);
            for (long c = 0; c < d; ++c)
                for (long r = 0; r < d; ++r) m(r, c) = cxd(rng.gaussian(), rng.gaussian());
            LabeledOperator mop(SystemSignature{{"C", d}}, SystemSignature{{"A", d}}, m);
            auto left = op_map(mop.apply_to(psi), {"C"}, {"B"});
            auto opb = op_map(psi, {"A"}, {"B"});
            Mat right = opb.matrix() * m.transpose();
            worst = std::max(worst, (left.matrix() - right).norm());
            // trace identity
            auto ob = op_map(psi, {"B"}, {"A"});
            Mat tr = partial_trace(psi.density(), {"B"}).matrix() - ob.matrix() * ob.matrix().adjoint();
            worst = std::max(worst, tr.norm());
        }
    }
    o.ok = worst <= 1e-12;
    std::ostringstream os;
    os << "max identity residual " << worst << " (tol 1e-12)";
    o.detail = os.str();
    return o;
}

// 3. split construction properties
Outcome criterion_split() {
    Outcome o;
    RngStream rng(1003, 0);
    double worst_tv = 0;
    for (int t = 0; t < 100; ++t) {
        int n = 2 + static_cast<int>(rng.uniform() * 5);
        auto p = random_dist(rng, n, 0.02);
        double theta = rng.uniform();
        auto s = split_distributions(p, theta);
        auto push = s.pushforward();
        double tv = 0;
        for (size_t i = 0; i < p.size(); ++i) tv += std::abs(push[i] - p[i]);
        worst_tv = std::max(worst_tv, 0.5 * tv);
    }
    o.ok = worst_tv <= 1e-10;

    // endpoint structure
    auto p = random_dist(rng, 5, 0.05);
    auto s0 = split_distributions(p, 0.0);
    double d0 = 0;
    auto c0 = s0.conditional_given_u(0);
    for (size_t i = 0; i < p.size(); ++i) d0 = std::max(d0, std::abs(c0[i] - p[i]));
    o.ok &= d0 <= 1e-12 && std::abs(s0.p_u[0] - 1.0) <= 1e-12;
    auto s1 = split_distributions(p, 1.0);
    for (long u = 0; u < 5; ++u) {
        auto c = s1.conditional_given_u(u);
        o.ok &= std::abs(c[static_cast<size_t>(u)] - 1.0) <= 1e-12;
    }

    // theta-continuity of the conditional law at step 1e-3
    double max_jump = 0;
    for (int t = 0; t < 5; ++t) {
        auto q = random_dist(rng, 4, 0.35);
        if (q.back() < 0.05) continue;
        auto prev = split_distributions(q, 0.0);
        for (int i = 1; i <= 1000; ++i) {
            auto cur = split_distributions(q, i / 1000.0);
            for (long u = 0; u < 4; ++u) {
                auto a = prev.conditional_given_u(u);
                auto b = cur.conditional_given_u(u);
                for (size_t j = 0; j < a.size(); ++j)
                    max_jump = std::max(max_jump, std::abs(a[j] - b[j]));
            }
            prev = cur;
        }
    }
    o.ok &= max_jump < 1e-2;
    std::ostringstream os;
    os << "max pushforward TV " << worst_tv << " (tol 1e-10), max conditional jump " << max_jump
       << " (tol 1e-2)";
    o.detail = os.str();
    return o;
}

// 4. coherent information is invariant under the splitting isometry
Outcome criterion_split_invariance() {
    Outcome o;
    double worst = 0;
    std::vector<Channel> chans{builtin_channel("qmac_product", {0.2, 0.1}),
                               builtin_channel("qmac_adder", {0.1, 0.05}),
                               builtin_channel("qic_crosstalk", {0.6, 0.05})};
    for (const auto& ch : chans) {
        auto om = default_alice_control(ch);
        auto de = default_bob_control(ch);
        auto sigma = tensor(om, de);
        std::set<std::string> outs;
        for (const auto& n : ch.outputs().names()) outs.insert(n);
        auto base = ch.apply(sigma.density());
        const double ic = coherent_information(base, {"As", "Bs"}, outs);
        for (int i = 0; i <= 40; ++i) {
            const double theta = i / 40.0;
            auto sp = split_isometry(sigma, "As", theta, "As0", "As1");
            auto out = ch.apply(apply_split(sp, sigma).density());
            const double ict = coherent_information(out, {"As0", "As1", "Bs"}, outs);
            worst = std::max(worst, std::abs(ict - ic));
        }
    }
    o.ok = worst <= 1e-9;
    std::ostringstream os;
    os << "max |I(split) - I(unsplit)| " << worst << " over 41 thetas x 3 channels (tol 1e-9)";
    o.detail = os.str();
    return o;
}

// 5. chain rule with equality for coherent information
Outcome criterion_chain_rule() {
    Outcome o;
    RngStream rng(1005, 0);
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
        auto psi = random_ket(SystemSignature{{"A0", 2}, {"A1", 2}, {"B", 2}, {"R", 2}}, rng);
        auto rho = psi.density();
        double lhs = coherent_information(rho, {"A0"}, {"B"}) +
                     coherent_information(rho, {"A1"}, {"B", "A0"});
        double rhs = coherent_information(rho, {"A0", "A1"}, {"B"});
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    o.ok = worst <= 1e-9;
    std::ostringstream os;
    os << "max chain-rule residual " << worst << " over 50 states (tol 1e-9)";
    o.detail = os.str();
    return o;
}

// 6. single-sender decoupling bound by Monte Carlo
Outcome criterion_decoupling_mc() {
    Outcome o;
    RngStream rng(1006, 0);
    int pass = 0;
    double worst_excess = -1e9;
    for (int c = 0; c < 20; ++c) {
        const long da = (c % 2 == 0) ? 2 : 4;
        const long de = 2;
        const long dr = 2;
        auto rho = random_density(SystemSignature{{"A", da}, {"E", de}}, 1 + (c % 4), rng);
        KrausMap t;
        t.inputs = SystemSignature{{"A", da}};
        t.outputs = SystemSignature{{"R", dr}};
        const int nk = 1 + (c % 3);
        for (int k2 = 0; k2 < nk; ++k2) {
            Mat km(dr, da);
            for (long j = 0; j < da; ++j)
                for (long i = 0; i < dr; ++i) km(i, j) = cxd(rng.gaussian(), rng.gaussian()) * 0.4;
            t.kraus.push_back(km);
        }
        DecouplingConfig cfg;
        cfg.trials = 200;
        cfg.rng = RngStream(1006, static_cast<std::uint64_t>(c));
        auto rep = decoupling_mc(rho, t, cfg);
        if (rep.pass) ++pass;
        worst_excess = std::max(worst_excess, rep.mean - 3 * rep.std_error - rep.bound);
    }
    o.ok = pass == 20;
    std::ostringstream os;
    os << pass << "/20 configs with mean - 3SE <= bound (worst excess " << worst_excess << ")";
    o.detail = os.str();
    return o;
}

// 7. one-Haar and product-of-two-Haar lemma harnesses
Outcome criterion_lemma_mc() {
    Outcome o;
    int pass = 0;
    double worst_frac = 1.0;
    RngStream gen(1007, 0);
    std::vector<Channel> chans{
        builtin_channel("qmac_product", {0.0, 0.0}), builtin_channel("qmac_product", {0.2, 0.1}),
        builtin_channel("qmac_adder", {0.0, 0.0}), builtin_channel("qmac_adder", {0.1, 0.1}),
        builtin_channel("qmac_product", {0.4, 0.0})};
    for (size_t i = 0; i < chans.size(); ++i) {
        const auto& ch = chans[i];
        auto om = default_alice_control(ch);
        auto de = default_bob_control(ch);
        DecouplingConfig cfg;
        cfg.trials = 200;
        cfg.k = 20;
        cfg.rng = RngStream(1007, static_cast<std::uint64_t>(i));
        auto psi = (i % 2 == 0) ? epr_ket("As", "R1", 2)
                                : random_ket(SystemSignature{{"As", 2}, {"R1", 2}}, gen);
        auto phi = (i % 2 == 0) ? epr_ket("Bs", "R2", 2)
                                : random_ket(SystemSignature{{"Bs", 2}, {"R2", 2}}, gen);
        auto rep = onehaar_mc(tensor(om, de), "As", "Bs", psi, phi, ch, cfg);
        if (rep.pass) ++pass;
        worst_frac = std::min(worst_frac, rep.pass_fraction);
    }
    for (size_t i = 0; i < chans.size(); ++i) {
        const auto& ch = chans[i];
        auto om = default_alice_control(ch);
        auto de = default_bob_control(ch);
        const double theta = 0.25 * static_cast<double>(i % 3) + 0.25;
        auto sp = split_isometry(om, "As", theta, "As0", "As1");
        auto sigma = tensor(apply_split(sp, om), de);
        DecouplingConfig cfg;
        cfg.trials = 200;
        cfg.k = 20;
        cfg.rng = RngStream(2007, static_cast<std::uint64_t>(i));
        auto rep = product_haar_mc(sigma, "As0", "As1", "Bs", epr_ket("As0", "R0", 2),
                                   epr_ket("As1", "R1", 2), epr_ket("Bs", "R2", 2), ch, cfg);
        if (rep.pass) ++pass;
        worst_frac = std::min(worst_frac, rep.pass_fraction);
    }
    o.ok = pass == 10;
    std::ostringstream os;
    os << pass << "/10 configs meet pass fraction >= 1 - 3/k - 3SE (worst fraction " << worst_frac
       << ", required 0.85)";
    o.detail = os.str();
    return o;
}

// 8. end-to-end split protocol on the identity channel
Outcome criterion_protocol() {
    Outcome o;
    auto ch = builtin_channel("identity", {2});
    auto om = epr_ket("As", "Ap", 2);
    std::ostringstream os;
    for (double theta : {0.0, 0.5, 1.0}) {
        DecouplingConfig cfg;
        cfg.trials = 30;
        cfg.rng = RngStream(1008, static_cast<std::uint64_t>(theta * 100));
        cfg.protocol_tolerance = 0.02;
        LabeledOperator eta, psi;
        if (theta > 0.5) {
            eta = epr_ket("A0", "R0", 2);
            psi = basis_ket(SystemSignature{{"A1", 1}, {"B1", 1}, {"R1", 1}}, 0);
        } else {
            eta = basis_ket(SystemSignature{{"A0", 1}, {"R0", 1}}, 0);
            psi = tensor(epr_ket("A1", "R1", 2), basis_ket(SystemSignature{{"B1", 1}}, 0));
        }
        auto run = p2p_split_protocol(ch, om, theta, eta, psi, cfg);
        const bool dist_ok = run.output_trace_distance <= 0.02;
        const bool bound_ok = !run.derandomized ||
                              run.output_trace_distance <= run.delta_composed + 1e-9;
        o.ok &= dist_ok && bound_ok;
        os << "theta " << theta << ": distance " << run.output_trace_distance << " (tol 0.02"
           << (dist_ok ? "" : ", FAIL") << "), delta " << run.delta_composed << "; ";
    }
    o.detail = os.str();
    return o;
}

// 9. continuity of the split state in theta
Outcome criterion_continuity() {
    Outcome o;
    auto ch = builtin_channel("amplitude_damping", {0.3});
    auto om = epr_ket("As", "Ap", 2);  // uniform weights on 2 symbols
    const double theta0 = 0.45;
    auto probe = [&](double delta) {
        return continuity_probe(om, "As", ch, {theta0, theta0 + delta})[0].purified_distance;
    };
    const double kcal = probe(0.1) / std::sqrt(0.1);  // calibrated once, then frozen
    std::ostringstream os;
    os << "K " << kcal << "; ";
    std::vector<double> deltas{1e-2, 1e-3, 1e-4};
    std::vector<double> dists;
    for (double d : deltas) {
        const double pd = probe(d);
        dists.push_back(pd);
        const bool ok = pd <= kcal * std::sqrt(d);
        o.ok &= ok;
        os << "P(" << d << ") " << pd << " <= " << kcal * std::sqrt(d) << (ok ? "" : " FAIL") << "; ";
    }
    // log-log fitted exponent over the probe points
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < deltas.size(); ++i) {
        const double x = std::log(deltas[i]), y = std::log(dists[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(deltas.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    o.ok &= slope >= 0.45;
    os << "fitted exponent " << slope << " (>= 0.45)";
    o.detail = os.str();
    return o;
}

// 10. smooth min-entropy rate approaches the conditional entropy
Outcome criterion_qaep() {
    Outcome o;
    std::ostringstream os;
    auto check_state = [&](const LabeledOperator& rho, const char* name) {
        auto gaps = qaep_gap(rho, {"A"}, {"B"}, 3, 0.1);
        bool dec = std::abs(gaps[0]) > std::abs(gaps[1]) && std::abs(gaps[1]) > std::abs(gaps[2]);
        o.ok &= dec;
        os << name << " gaps " << gaps[0] << " " << gaps[1] << " " << gaps[2]
           << (dec ? " strictly decreasing; " : " NOT decreasing; ");
    };
    check_state(epr_ket("A", "B", 2).density(), "EPR");
    SystemSignature ab{{"A", 2}, {"B", 2}};
    Mat cls = Mat::Zero(4, 4);
    cls(0, 0) = 0.6;
    cls(3, 3) = 0.4;
    check_state(LabeledOperator(ab, ab, cls), "classical(0.6,0.4)");
    o.detail = os.str();
    return o;
}

// 11. region sanity: pentagon containment, trivial rectangle, corner recovery
Outcome criterion_region() {
    Outcome o;
    std::ostringstream os;
    const double eps = 0.1;
    std::vector<Channel> qmacs{builtin_channel("qmac_product", {0.0, 0.0}),
                               builtin_channel("qmac_product", {0.15, 0.05}),
                               builtin_channel("qmac_adder", {0.05, 0.1})};
    double worst_violation = -1e9;
    for (const auto& ch : qmacs) {
        auto om = default_alice_control(ch);
        auto de = default_bob_control(ch);
        auto pent = iid_region(ch, om, de, 1).points[0].rates;
        auto tr = qmac_region(ch, om, de, eps, {0.0, 0.25, 0.5, 0.75, 1.0});
        for (const auto& p : tr.points) {
            if (!p.feasible) {
                o.ok = false;
                continue;
            }
            const double qa = p.rates.at("Q_A"), qb = p.rates.at("Q_B");
            double v = std::max({qa - pent.at("H_A"), qa - pent.at("I_A_cond"),
                                 qb - pent.at("H_B"), qb - pent.at("I_B_cond"),
                                 qa + qb - pent.at("I_sum")});
            worst_violation = std::max(worst_violation, v);
        }
    }
    o.ok &= worst_violation <= 1e-9;
    os << "pentagon violation " << worst_violation << " (tol 1e-9); ";

    // trivial rectangle at zero crosstalk, q0 = 0
    {
        auto ch = builtin_channel("qic_crosstalk", {0.0, 0.0});
        auto om = default_alice_control(ch);
        auto de = default_bob_control(ch);
        auto tr = qic_region(ch, om, de, eps, {0.3}, {0.0});
        auto dil = ch.dilate("E");
        auto sigma = tensor(om, de);
        auto sc = dil.isometry.apply_to(sigma);
        const double e0 = eps * eps / 800;
        const double qa_expect =
            std::min(hmin_cond(sigma.density(), {"As"}, {}, eps).value,
                     imin_coherent(sc.density(), {"As"}, {"C"}, e0).value) +
            std::log2(eps * eps);
        const double got = tr.points[0].rates_raw.at("Q_A");
        const bool exact = got == qa_expect;
        o.ok &= exact;
        os << "trivial rectangle Q_A " << got << (exact ? " == " : " != ") << qa_expect << "; ";
    }

    // theta endpoints reproduce the successive-cancellation corners
    {
        auto ch = builtin_channel("qmac_product", {0.15, 0.05});
        auto om = default_alice_control(ch);
        auto de = default_bob_control(ch);
        auto tr = qmac_region(ch, om, de, eps, {0.0, 1.0});
        auto ba = qmac_corner_direct(ch, om, de, eps, "BA");
        auto ab = qmac_corner_direct(ch, om, de, eps, "AB");
        const auto& p0 = tr.points[0].ingredients;   // theta 0, a0_first
        const auto& p1 = tr.points[2].ingredients;   // theta 1, a0_first
        bool match = p0.at("Hmin_e(As1)") == ba.at("Hmin_e(As)") &&
                     p0.at("Imin_e0(As1>CAs0Bs)") == ba.at("Imin_e0(As>CBs)") &&
                     p0.at("Imin_e0(Bs>CAs0)") == ba.at("Imin_e0(Bs>C)") &&
                     p1.at("Imin_e0(As0>C)") == ab.at("Imin_e0(As>C)") &&
                     p1.at("Imin_e0(Bs>CAs0)") == ab.at("Imin_e0(Bs>CAs)");
        o.ok &= match;
        os << "endpoint corners " << (match ? "bit-identical" : "MISMATCH");
    }
    o.detail = os.str();
    return o;
}

// 12. byte-identical reruns of the command line tool
Outcome criterion_determinism() {
    Outcome o;
    const char* env = std::getenv("QSPLIT_CLI");
    std::string cli = env ? env : "../tools/qsplit";
    {
        std::ifstream probe(cli);
        if (!probe) cli = "./build/tools/qsplit";
    }
    auto run = [&](const std::string& out) {
        std::string cmd = cli +
                          " region --channel builtin:qmac_product:0.1,0.2 --mode qmac"
                          " --theta-steps 3 --epsilon 0.1 --seed 11 --out " +
                          out + " >/dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    int rc1 = run("/tmp/qsplit_det_a");
    int rc2 = run("/tmp/qsplit_det_b");
    const std::string a_csv = slurp("/tmp/qsplit_det_a.csv"), b_csv = slurp("/tmp/qsplit_det_b.csv");
    const std::string a_js = slurp("/tmp/qsplit_det_a.json"), b_js = slurp("/tmp/qsplit_det_b.json");
    o.ok = rc1 == 0 && rc2 == 0 && !a_csv.empty() && a_csv == b_csv && a_js == b_js;

    // decouple reruns as well
    auto drun = [&](const std::string& out) {
        std::string cmd = cli + " decouple --variant single --trials 60 --seed 7 --out " + out +
                          " >/dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    int rc3 = drun("/tmp/qsplit_det_c.json");
    int rc4 = drun("/tmp/qsplit_det_d.json");
    o.ok &= rc3 == 0 && rc4 == 0 && slurp("/tmp/qsplit_det_c.json") == slurp("/tmp/qsplit_det_d.json");
    o.detail = o.ok ? "region and decouple reruns byte-identical" : "outputs differ or tool failed";
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> crits{
        {1, "entropy oracle suite", criterion_entropy_oracles},
        {2, "op-calculus identities", criterion_op_calculus},
        {3, "split construction", criterion_split},
        {4, "splitting-scheme invariance", criterion_split_invariance},
        {5, "coherent-information chain rule", criterion_chain_rule},
        {6, "decoupling Monte Carlo bound", criterion_decoupling_mc},
        {7, "Haar lemma pass fractions", criterion_lemma_mc},
        {8, "end-to-end split protocol", criterion_protocol},
        {9, "theta continuity scaling", criterion_continuity},
        {10, "min-entropy rate convergence", criterion_qaep},
        {11, "region sanity", criterion_region},
        {12, "determinism", criterion_determinism},
    };

    int only = 0;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
    }

    int failures = 0;
    for (const auto& c : crits) {
        if (only && c.id != only) continue;
        Outcome o = c.fn();
        std::printf("criterion %2d [%s] %s: %s\n", c.id, o.ok ? "PASS" : "FAIL", c.name,
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.ok) ++failures;
    }
    return failures;
}
