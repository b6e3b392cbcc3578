#include "qsplit/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qsplit {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

std::vector<Mat> prune_zero_kraus(std::vector<Mat> ks) {
    std::vector<Mat> out;
    for (auto& k : ks)
        if (k.norm() > 1e-14) out.push_back(std::move(k));
    return out;
}

Mat kron2(const Mat& a, const Mat& b) {
    Mat k(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

std::vector<Mat> dephasing_kraus(double p) {
    Mat z = Mat::Identity(2, 2);
    z(1, 1) = -1;
    return prune_zero_kraus({std::sqrt(1 - p) * Mat::Identity(2, 2), std::sqrt(p) * z});
}

std::vector<Mat> depolarizing_kraus(double p) {
    Mat x = Mat::Zero(2, 2), y = Mat::Zero(2, 2), z = Mat::Identity(2, 2);
    x(0, 1) = x(1, 0) = 1;
    y(0, 1) = cxd(0, -1);
    y(1, 0) = cxd(0, 1);
    z(1, 1) = -1;
    return prune_zero_kraus({std::sqrt(1 - 0.75 * p) * Mat::Identity(2, 2), std::sqrt(p / 4) * x,
                             std::sqrt(p / 4) * y, std::sqrt(p / 4) * z});
}

std::vector<Mat> amplitude_damping_kraus(double g) {
    Mat k0 = Mat::Identity(2, 2), k1 = Mat::Zero(2, 2);
    k0(1, 1) = std::sqrt(1 - g);
    k1(0, 1) = std::sqrt(g);
    return prune_zero_kraus({k0, k1});
}

/// All products {A_i (x) B_j} U of two single-wire Kraus lists after a joint
/// unitary U on the two wires.
std::vector<Mat> two_wire_kraus(const std::vector<Mat>& a, const std::vector<Mat>& b, const Mat& u) {
    std::vector<Mat> out;
    for (const auto& ka : a)
        for (const auto& kb : b) out.push_back(kron2(ka, kb) * u);
    return prune_zero_kraus(std::move(out));
}

}  // namespace

LabeledOperator KrausMap::apply(const LabeledOperator& state) const {
    if (kraus.empty()) throw std::invalid_argument("KrausMap: no Kraus operators");
    LabeledOperator acc;
    bool first = true;
    for (const auto& k : kraus) {
        LabeledOperator kop(outputs, inputs, k);
        LabeledOperator term = kop.apply_to(state);
        acc = first ? term : acc + term;
        first = false;
    }
    return acc;
}

Channel::Channel(std::string name, SystemSignature inputs, SystemSignature outputs,
                 std::vector<Mat> kraus, double tp_tol)
    : name_(std::move(name)) {
    map_.inputs = std::move(inputs);
    map_.outputs = std::move(outputs);
    map_.kraus = prune_zero_kraus(std::move(kraus));
    if (map_.kraus.empty()) throw std::invalid_argument("channel " + name_ + ": empty Kraus list");
    const long din = map_.inputs.total_dim();
    const long dout = map_.outputs.total_dim();
    Mat sum = Mat::Zero(din, din);
    for (const auto& k : map_.kraus) {
        if (k.rows() != dout || k.cols() != din)
            throw std::invalid_argument("channel " + name_ + ": Kraus shape mismatch");
        sum += k.adjoint() * k;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(herm(sum - Mat::Identity(din, din)));
    const double deficit = es.eigenvalues().cwiseAbs().maxCoeff();
    if (deficit > tp_tol) {
        std::ostringstream os;
        os << "channel " << name_ << ": not trace preserving, deficit " << deficit
           << ", eigenvalues of (sum K^dag K - I):";
        for (long i = 0; i < es.eigenvalues().size(); ++i) os << " " << es.eigenvalues()(i);
        throw std::invalid_argument(os.str());
    }
}

LabeledOperator Channel::apply(const LabeledOperator& rho) const {
    for (const auto& s : map_.inputs.subsystems())
        if (!rho.rows().has(s.name))
            throw std::invalid_argument("channel " + name_ + ": state lacks port " + s.name);
    return map_.apply(rho);
}

Dilation Channel::dilate(const std::string& env_label) const {
    const long nk = static_cast<long>(map_.kraus.size());
    const long din = map_.inputs.total_dim();
    const long dout = map_.outputs.total_dim();
    Mat v(dout * nk, din);
    for (long o = 0; o < dout; ++o)
        for (long k = 0; k < nk; ++k)
            for (long i = 0; i < din; ++i) v(o * nk + k, i) = map_.kraus[static_cast<size_t>(k)](o, i);
    std::vector<Subsystem> rows = map_.outputs.subsystems();
    rows.push_back({env_label, nk});
    Dilation d;
    d.isometry = LabeledOperator(rows, map_.inputs.subsystems(), v);
    d.env_label = env_label;
    return d;
}

LabeledOperator Channel::apply_complementary(const LabeledOperator& rho,
                                             const std::string& env_label) const {
    auto d = dilate(env_label);
    auto big = d.isometry.apply_to(rho);
    std::set<std::string> drop;
    for (const auto& s : map_.outputs.subsystems()) drop.insert(s.name);
    return partial_trace(big, drop);
}

Channel builtin_channel(const std::string& name, const std::vector<double>& params) {
    auto param = [&](size_t i, double def) { return i < params.size() ? params[i] : def; };

    if (name == "identity") {
        const long d = static_cast<long>(param(0, 2));
        if (d < 1) throw std::invalid_argument("identity: dimension must be >= 1");
        return Channel(name, {{"Ap", d}}, {{"B", d}}, {Mat::Identity(d, d)});
    }
    if (name == "depolarizing")
        return Channel(name, {{"Ap", 2}}, {{"B", 2}}, depolarizing_kraus(param(0, 0.1)));
    if (name == "dephasing")
        return Channel(name, {{"Ap", 2}}, {{"B", 2}}, dephasing_kraus(param(0, 0.5)));
    if (name == "amplitude_damping")
        return Channel(name, {{"Ap", 2}}, {{"B", 2}}, amplitude_damping_kraus(param(0, 0.3)));
    if (name == "erasure") {
        const double p = param(0, 0.5);
        const long d = static_cast<long>(param(1, 2));
        std::vector<Mat> ks;
        Mat keep = Mat::Zero(d + 1, d);
        for (long i = 0; i < d; ++i) keep(i, i) = std::sqrt(1 - p);
        ks.push_back(keep);
        for (long i = 0; i < d; ++i) {
            Mat flag = Mat::Zero(d + 1, d);
            flag(d, i) = std::sqrt(p);
            ks.push_back(flag);
        }
        return Channel(name, {{"Ap", d}}, {{"B", d + 1}}, std::move(ks));
    }
    if (name == "qmac_product") {
        auto ka = amplitude_damping_kraus(param(0, 0.0));
        auto kb = amplitude_damping_kraus(param(1, 0.0));
        return Channel(name, {{"Ap", 2}, {"Bp", 2}}, {{"C", 4}},
                       two_wire_kraus(ka, kb, Mat::Identity(4, 4)));
    }
    if (name == "qmac_adder") {
        Mat cx = Mat::Zero(4, 4);  // |a,b> -> |a, a xor b> in the (Ap, Bp) basis
        cx(0, 0) = cx(1, 1) = cx(3, 2) = cx(2, 3) = 1;
        auto ka = dephasing_kraus(param(0, 0.1));
        auto kb = dephasing_kraus(param(1, 0.1));
        return Channel(name, {{"Ap", 2}, {"Bp", 2}}, {{"C", 4}}, two_wire_kraus(ka, kb, cx));
    }
    if (name == "qic_crosstalk") {
        const double s = param(0, 0.5);
        const double p = param(1, 0.0);
        Mat cp = Mat::Identity(4, 4);
        cp(3, 3) = std::exp(cxd(0, kPi * s));
        auto ka = depolarizing_kraus(p);
        auto kb = depolarizing_kraus(p);
        return Channel(name, {{"Ap", 2}, {"Bp", 2}}, {{"C", 2}, {"D", 2}},
                       two_wire_kraus(ka, kb, cp));
    }
    throw std::invalid_argument("unknown builtin channel: " + name);
}

Channel parse_channel_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    auto read_ports = [&](const char* key) {
        std::vector<Subsystem> subs;
        for (const auto& e : j.at(key))
            subs.push_back({e.at("label").get<std::string>(), e.at("dim").get<long>()});
        return subs;
    };
    const std::vector<Subsystem> in_list = read_ports("inputs");
    const std::vector<Subsystem> out_list = read_ports("outputs");
    long din = 1, dout = 1;
    for (const auto& s : in_list) din *= s.dim;
    for (const auto& s : out_list) dout *= s.dim;

    std::vector<Mat> kraus;
    for (const auto& op : j.at("kraus")) {
        if (static_cast<long>(op.size()) != dout)
            throw std::invalid_argument("channel file: Kraus row count != output dimension");
        Mat k(dout, din);
        for (long r = 0; r < dout; ++r) {
            const auto& row = op[static_cast<size_t>(r)];
            if (static_cast<long>(row.size()) != din)
                throw std::invalid_argument("channel file: Kraus column count != input dimension");
            for (long c = 0; c < din; ++c) {
                const auto& cell = row[static_cast<size_t>(c)];
                k(r, c) = cxd(cell.at(0).get<double>(), cell.at(1).get<double>());
            }
        }
        // matrices are laid out in the listed port order; canonicalize
        LabeledOperator tmp(out_list, in_list, k);
        kraus.push_back(tmp.matrix());
    }
    return Channel(j.value("name", std::string("channel")), SystemSignature(in_list),
                   SystemSignature(out_list), std::move(kraus));
}

Channel load_channel(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open channel file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_channel_json(ss.str());
}

Channel resolve_channel(const std::string& spec) {
    if (spec.rfind("builtin:", 0) == 0) {
        std::string rest = spec.substr(8);
        std::string name = rest;
        std::vector<double> params;
        auto colon = rest.find(':');
        if (colon != std::string::npos) {
            name = rest.substr(0, colon);
            std::stringstream ss(rest.substr(colon + 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) params.push_back(std::stod(tok));
        }
        return builtin_channel(name, params);
    }
    return load_channel(spec);
}

}  // namespace qsplit
