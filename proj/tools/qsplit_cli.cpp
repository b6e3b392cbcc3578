// Command-line front end: entropy queries, decoupling Monte Carlo runs and
// rate-region traces with reproducible, seedable outputs.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsplit/decoupling.hpp"
#include "qsplit/entropy.hpp"
#include "qsplit/region.hpp"
#include "qsplit/version.hpp"

using namespace qsplit;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolver = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitBound = 4;
constexpr int kExitUsage = 64;

LabeledOperator load_state_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open state file: " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    std::vector<Subsystem> subs;
    for (const auto& e : j.at("systems"))
        subs.push_back({e.at("label").get<std::string>(), e.at("dim").get<long>()});
    SystemSignature sig(subs);
    const std::string kind = j.value("kind", "density");
    if (kind == "ket") {
        Vec v(sig.total_dim());
        const auto& data = j.at("data");
        for (long i = 0; i < v.size(); ++i)
            v(i) = cxd(data[static_cast<size_t>(i)].at(0).get<double>(),
                       data[static_cast<size_t>(i)].at(1).get<double>());
        return LabeledOperator::ket(subs, v).density();
    }
    Mat m(sig.total_dim(), sig.total_dim());
    const auto& data = j.at("data");
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) {
            const auto& cell = data[static_cast<size_t>(r)][static_cast<size_t>(c)];
            m(r, c) = cxd(cell.at(0).get<double>(), cell.at(1).get<double>());
        }
    return LabeledOperator(subs, subs, m);
}

LabeledOperator resolve_state(const std::string& spec) {
    if (spec == "epr2") return epr_ket("A", "B", 2).density();
    if (spec == "epr3") return epr_ket("A", "B", 3).density();
    if (spec == "epr4") return epr_ket("A", "B", 4).density();
    if (spec == "mixed2") return maximally_mixed(SystemSignature{{"A", 2}});
    if (spec == "ghz3") return ghz_ket({"A", "B", "C"}).density();
    return load_state_file(spec);
}

std::set<std::string> parse_labels(const std::string& csv) {
    std::set<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.insert(tok);
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

ordered_json report_shell(const std::string& command, const ordered_json& config) {
    ordered_json j;
    j["tool"] = "qsplit";
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    return j;
}

std::vector<double> theta_grid_of(int steps) {
    std::vector<double> grid;
    if (steps <= 1) return {0.0};
    for (int i = 0; i < steps; ++i) grid.push_back(double(i) / double(steps - 1));
    return grid;
}

/// Runs fn over the grid with `jobs` workers; results are merged in grid order.
template <typename Fn>
std::vector<RegionTrace> parallel_sweep(const std::vector<double>& grid, int jobs, Fn fn) {
    std::vector<RegionTrace> results(grid.size());
    if (jobs <= 1) {
        for (size_t i = 0; i < grid.size(); ++i) results[i] = fn(grid[i]);
        return results;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= grid.size()) break;
            results[i] = fn(grid[i]);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

RegionTrace merge_traces(std::vector<RegionTrace> parts) {
    RegionTrace out = parts.front();
    out.points.clear();
    for (auto& p : parts) {
        for (auto& pt : p.points) out.points.push_back(std::move(pt));
        for (const auto& [k, v] : p.corners) out.corners[k] = v;
    }
    return out;
}

int run_entropy(const std::string& state_spec, const std::string& quantity,
                const std::string& condition, double epsilon, const std::string& out_path) {
    EntropyQuery q;
    q.state = resolve_state(state_spec);
    q.condition_on = parse_labels(condition);
    q.epsilon = epsilon;
    if (quantity == "vonneumann") q.quantity = Quantity::von_neumann;
    else if (quantity == "coherent") q.quantity = Quantity::coherent_info;
    else if (quantity == "hmin") q.quantity = Quantity::hmin_cond;
    else if (quantity == "hmax") q.quantity = Quantity::hmax_cond;
    else if (quantity == "h2") q.quantity = Quantity::h2_cond;
    else if (quantity == "imin") q.quantity = Quantity::imin_coherent;
    else {
        std::cerr << "unknown quantity: " << quantity << "\n";
        return kExitUsage;
    }
    auto r = evaluate(q);

    ordered_json config{{"state", state_spec}, {"quantity", quantity},
                        {"condition", condition}, {"epsilon", epsilon}};
    ordered_json j = report_shell("entropy", config);
    j["value"] = r.value;
    j["status"] = (r.status == SolveStatus::optimal)
                      ? "optimal"
                      : (r.status == SolveStatus::max_iterations ? "max_iterations" : "infeasible");
    j["gap"] = r.gap;
    j["primal_bound"] = r.primal_bound;
    j["dual_bound"] = r.dual_bound;
    j["iterations"] = r.iterations;
    if (!out_path.empty()) write_file(out_path, j.dump(2) + "\n");
    std::printf("value %.6f\n", r.value);
    std::printf("status %s gap %.3e\n", j["status"].get<std::string>().c_str(), r.gap);
    return r.status == SolveStatus::optimal ? kExitOk : kExitSolver;
}

int run_region(const std::string& channel_spec, const std::string& mode, double epsilon,
               int theta_steps, int k, double ea, double eb, const std::string& q0s,
               const std::string& direction, const std::string& out_base, int jobs,
               std::uint64_t seed) {
    Channel ch = resolve_channel(channel_spec);
    auto grid = theta_grid_of(theta_steps);

    RegionTrace trace;
    if (mode == "p2p") {
        auto om = default_alice_control(ch);
        trace = merge_traces(parallel_sweep(
            grid, jobs, [&](double th) { return p2p_region(ch, om, epsilon, {th}); }));
        trace.mode = "p2p";
    } else if (mode == "qmac") {
        auto om = default_alice_control(ch);
        auto de = default_bob_control(ch);
        trace = merge_traces(parallel_sweep(grid, jobs, [&](double th) {
            return qmac_region(ch, om, de, epsilon, {th}, ea, eb);
        }));
        trace.mode = "qmac";
    } else if (mode == "qic") {
        auto om = default_alice_control(ch);
        auto de = default_bob_control(ch);
        std::vector<double> q0_grid{0.0};
        if (!q0s.empty()) {
            q0_grid.clear();
            std::stringstream ss(q0s);
            std::string tok;
            while (std::getline(ss, tok, ',')) q0_grid.push_back(std::stod(tok));
        }
        auto one = [&](QicDirection d) {
            return merge_traces(parallel_sweep(grid, jobs, [&](double th) {
                return qic_region(ch, om, de, epsilon, {th}, q0_grid, d, ea, eb);
            }));
        };
        if (direction == "both") {
            auto a = one(QicDirection::a_helps_b);
            auto b = one(QicDirection::b_helps_a);
            trace = a;
            for (auto& p : b.points) trace.points.push_back(p);
        } else {
            trace = one(direction == "b_helps_a" ? QicDirection::b_helps_a
                                                 : QicDirection::a_helps_b);
        }
        trace.mode = "qic";
    } else if (mode == "iid") {
        auto om = default_alice_control(ch);
        auto de = ch.inputs().has("Bp") ? default_bob_control(ch) : LabeledOperator();
        if (!ch.inputs().has("Bp")) {
            std::cerr << "iid mode requires a two-sender channel\n";
            return kExitUsage;
        }
        trace = iid_region(ch, om, de, k, ch.outputs().count() == 2 ? grid : std::vector<double>{});
    } else {
        std::cerr << "unknown mode: " << mode << "\n";
        return kExitUsage;
    }
    trace.epsilon = epsilon;
    trace.k = k;

    ordered_json config{{"channel", channel_spec}, {"mode", mode},   {"epsilon", epsilon},
                        {"theta_steps", theta_steps}, {"k", k},      {"ea", ea},
                        {"eb", eb},                {"q0", q0s},      {"direction", direction},
                        {"seed", seed},            {"jobs", jobs}};
    ordered_json j = report_shell("region", config);
    j["trace"] = trace.to_json();
    write_file(out_base + ".json", j.dump(2) + "\n");
    write_file(out_base + ".csv", trace.to_csv());

    int feasible = 0;
    for (const auto& p : trace.points) feasible += p.feasible ? 1 : 0;
    std::printf("points %zu feasible %d\n", trace.points.size(), feasible);
    for (const auto& [k2, v] : trace.corners) std::printf("corner %s %.9g\n", k2.c_str(), v);
    if (!trace.points.empty() && feasible == 0) return kExitInfeasible;
    return kExitOk;
}

int run_decouple(const std::string& variant, const std::string& channel_spec, int trials,
                 std::uint64_t seed, int k, double theta, double epsilon,
                 const std::string& message, const std::string& out_path) {
    DecouplingConfig cfg;
    cfg.trials = trials;
    cfg.rng = RngStream(seed, 0);
    cfg.k = k;
    cfg.epsilon = epsilon;
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    ordered_json config{{"variant", variant}, {"channel", channel_spec}, {"trials", trials},
                        {"seed", seed},       {"k", k},                  {"theta", theta},
                        {"epsilon", epsilon}, {"message", message}};
    ordered_json j = report_shell("decouple", config);

    bool pass = false;
    if (variant == "single") {
        KrausMap t;
        t.inputs = SystemSignature{{"A", 2}};
        t.outputs = SystemSignature{{"R", 2}};
        t.kraus = {Mat::Identity(2, 2)};
        auto rep = decoupling_mc(epr_ket("A", "E", 2).density(), t, cfg);
        j["report"] = rep.to_json();
        pass = rep.pass;
        std::printf("mean %.6f bound %.6f pass %d\n", rep.mean, rep.bound, rep.pass ? 1 : 0);
    } else if (variant == "onehaar" || variant == "twohaar") {
        Channel ch = resolve_channel(channel_spec.empty() ? "builtin:qmac_product:0,0"
                                                          : channel_spec);
        auto om = default_alice_control(ch);
        auto de = default_bob_control(ch);
        TrialReport rep;
        if (variant == "onehaar") {
            rep = onehaar_mc(tensor(om, de), "As", "Bs", epr_ket("As", "R1", om.rows().dim_of("As")),
                             epr_ket("Bs", "R2", de.rows().dim_of("Bs")), ch, cfg);
        } else {
            auto sp = split_isometry(om, "As", theta, "As0", "As1");
            auto sigma = tensor(apply_split(sp, om), de);
            rep = product_haar_mc(sigma, "As0", "As1", "Bs",
                                  epr_ket("As0", "R0", sigma.rows().dim_of("As0")),
                                  epr_ket("As1", "R1", sigma.rows().dim_of("As1")),
                                  epr_ket("Bs", "R2", de.rows().dim_of("Bs")), ch, cfg);
        }
        j["report"] = rep.to_json();
        pass = rep.pass;
        std::printf("pass_fraction %.4f threshold %.4f pass %d\n", rep.pass_fraction,
                    rep.threshold, rep.pass ? 1 : 0);
    } else if (variant == "protocol") {
        Channel ch = resolve_channel(channel_spec.empty() ? "builtin:identity:2" : channel_spec);
        auto om = default_alice_control(ch);
        const long d = om.rows().dim_of("As");
        bool on_a0 = (message == "a0") || (message == "auto" && theta > 0.5);
        LabeledOperator eta, psi;
        if (on_a0) {
            eta = epr_ket("A0", "R0", d);
            psi = basis_ket(SystemSignature{{"A1", 1}, {"B1", 1}, {"R1", 1}}, 0);
        } else {
            eta = basis_ket(SystemSignature{{"A0", 1}, {"R0", 1}}, 0);
            psi = tensor(epr_ket("A1", "R1", d), basis_ket(SystemSignature{{"B1", 1}}, 0));
        }
        auto run = p2p_split_protocol(ch, om, theta, eta, psi, cfg);
        j["report"] = run.to_json();
        pass = run.success;
        std::printf("distance %.6f fidelity %.6f delta %.3f success %d\n",
                    run.output_trace_distance, run.fidelity, run.delta_composed,
                    run.success ? 1 : 0);
    } else {
        std::cerr << "unknown variant: " << variant << "\n";
        return kExitUsage;
    }

    if (!out_path.empty()) write_file(out_path, j.dump(2) + "\n");
    return pass ? kExitOk : kExitBound;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-shot rate-splitting toolkit"};
    app.require_subcommand(1);

    std::string state_spec, quantity, condition, out_path;
    double epsilon = 0;
    auto* entropy = app.add_subcommand("entropy", "evaluate an entropic quantity");
    entropy->add_option("--state", state_spec, "builtin name or state file")->required();
    entropy->add_option("--quantity", quantity,
                        "vonneumann|coherent|hmin|hmax|h2|imin")->required();
    entropy->add_option("--condition", condition, "comma-separated conditioning labels");
    entropy->add_option("--epsilon", epsilon, "smoothing parameter");
    entropy->add_option("--out", out_path, "JSON report path");

    std::string channel_spec, mode = "p2p", q0s, direction = "a_helps_b", out_base = "region";
    int theta_steps = 41, kk = 1, jobs = 1;
    double ea = 0, eb = 0, reps = 0.1;
    std::uint64_t seed = 0;
    auto* region = app.add_subcommand("region", "trace an achievable rate region");
    region->add_option("--channel", channel_spec, "builtin:name:params or channel file")->required();
    region->add_option("--mode", mode, "p2p|qmac|qic|iid");
    region->add_option("--epsilon", reps, "one-shot error parameter");
    region->add_option("--theta-steps", theta_steps, "splitting grid size");
    region->add_option("--k", kk, "tensor power for iid mode (1 or 2)");
    region->add_option("--ea", ea, "Alice ebit budget");
    region->add_option("--eb", eb, "Bob ebit budget");
    region->add_option("--q0", q0s, "comma-separated Q0 grid for qic mode");
    region->add_option("--direction", direction, "a_helps_b|b_helps_a|both");
    region->add_option("--out", out_base, "output base path (.csv and .json)");
    region->add_option("--jobs", jobs, "parallel workers for the theta sweep");
    region->add_option("--seed", seed, "seed echoed into the report");

    std::string variant, dch, message = "auto", dout;
    int trials = 200, dk = 20;
    double dtheta = 0, deps = 0;
    std::uint64_t dseed = 0;
    auto* dec = app.add_subcommand("decouple", "Monte Carlo decoupling checks");
    dec->add_option("--variant", variant, "single|onehaar|twohaar|protocol")->required();
    dec->add_option("--channel", dch, "channel spec for lemma/protocol variants");
    dec->add_option("--trials", trials, "Monte Carlo trials (>= 30)");
    dec->add_option("--seed", dseed, "rng seed");
    dec->add_option("--k", dk, "union-bound parameter");
    dec->add_option("--theta", dtheta, "splitting parameter");
    dec->add_option("--epsilon", deps, "smoothing used on the bound side");
    dec->add_option("--message", message, "protocol message register: auto|a0|a1");
    dec->add_option("--out", dout, "JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    const auto t0 = std::chrono::steady_clock::now();
    int code = kExitOk;
    try {
        if (entropy->parsed())
            code = run_entropy(state_spec, quantity, condition, epsilon, out_path);
        else if (region->parsed())
            code = run_region(channel_spec, mode, reps, theta_steps, kk, ea, eb, q0s, direction,
                              out_base, jobs, seed);
        else if (dec->parsed())
            code = run_decouple(variant, dch, trials, dseed, dk, dtheta, deps, message, dout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    const auto t1 = std::chrono::steady_clock::now();
    std::fprintf(stderr, "runtime_seconds %.3f\n",
                 std::chrono::duration<double>(t1 - t0).count());
    return code;
}
