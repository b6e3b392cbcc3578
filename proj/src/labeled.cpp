#include "qsplit/labeled.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qsplit {

namespace {

std::string join_names(const std::vector<Subsystem>& subs) {
    std::ostringstream os;
    for (size_t i = 0; i < subs.size(); ++i) {
        if (i) os << ",";
        os << subs[i].name << ":" << subs[i].dim;
    }
    return os.str();
}

}  // namespace

std::vector<long> placement(const SystemSignature& full, const SystemSignature& sub) {
    std::vector<long> strides(static_cast<size_t>(full.count()), 1);
    for (int i = full.count() - 2; i >= 0; --i)
        strides[static_cast<size_t>(i)] =
            strides[static_cast<size_t>(i + 1)] * full.at(i + 1).dim;

    std::vector<long> pos;  // position in full of each sub subsystem
    pos.reserve(static_cast<size_t>(sub.count()));
    for (int i = 0; i < sub.count(); ++i) {
        int p = full.index_of(sub.at(i).name);
        if (p < 0) throw std::invalid_argument("placement: unknown label " + sub.at(i).name);
        if (full.at(p).dim != sub.at(i).dim)
            throw std::invalid_argument("placement: dimension mismatch on " + sub.at(i).name);
        pos.push_back(p);
    }

    std::vector<long> base(static_cast<size_t>(sub.total_dim()), 0);
    for (long f = 0; f < sub.total_dim(); ++f) {
        auto digits = sub.digits(f);
        long acc = 0;
        for (int i = 0; i < sub.count(); ++i)
            acc += digits[static_cast<size_t>(i)] * strides[static_cast<size_t>(pos[static_cast<size_t>(i)])];
        base[static_cast<size_t>(f)] = acc;
    }
    return base;
}

// --- SystemSignature ----------------------------------------------------------

SystemSignature::SystemSignature(std::initializer_list<Subsystem> subs)
    : SystemSignature(std::vector<Subsystem>(subs)) {}

SystemSignature::SystemSignature(std::vector<Subsystem> subs) : subs_(std::move(subs)) {
    std::sort(subs_.begin(), subs_.end(),
              [](const Subsystem& a, const Subsystem& b) { return a.name < b.name; });
    total_dim_ = 1;
    for (size_t i = 0; i < subs_.size(); ++i) {
        if (subs_[i].dim < 1) throw std::invalid_argument("subsystem dimension must be >= 1");
        if (i > 0 && subs_[i].name == subs_[i - 1].name)
            throw std::invalid_argument("duplicate subsystem name: " + subs_[i].name);
        total_dim_ *= subs_[i].dim;
    }
}

bool SystemSignature::has(const std::string& name) const { return index_of(name) >= 0; }

int SystemSignature::index_of(const std::string& name) const {
    auto it = std::lower_bound(subs_.begin(), subs_.end(), name,
                               [](const Subsystem& s, const std::string& n) { return s.name < n; });
    if (it != subs_.end() && it->name == name) return static_cast<int>(it - subs_.begin());
    return -1;
}

long SystemSignature::dim_of(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw std::invalid_argument("unknown subsystem: " + name);
    return subs_[static_cast<size_t>(i)].dim;
}

std::vector<std::string> SystemSignature::names() const {
    std::vector<std::string> out;
    out.reserve(subs_.size());
    for (const auto& s : subs_) out.push_back(s.name);
    return out;
}

SystemSignature SystemSignature::without(const std::set<std::string>& drop) const {
    for (const auto& d : drop)
        if (!has(d)) throw std::invalid_argument("unknown subsystem: " + d);
    std::vector<Subsystem> kept;
    for (const auto& s : subs_)
        if (!drop.count(s.name)) kept.push_back(s);
    return SystemSignature(kept);
}

SystemSignature SystemSignature::keep(const std::set<std::string>& kept) const {
    std::vector<Subsystem> out;
    for (const auto& s : subs_)
        if (kept.count(s.name)) out.push_back(s);
    if (out.size() != kept.size()) throw std::invalid_argument("keep: unknown subsystem in set");
    return SystemSignature(out);
}

SystemSignature SystemSignature::merged(const SystemSignature& other) const {
    std::vector<Subsystem> all = subs_;
    for (const auto& s : other.subs_) {
        if (has(s.name)) throw std::invalid_argument("subsystem name collision: " + s.name);
        all.push_back(s);
    }
    return SystemSignature(all);
}

bool SystemSignature::operator==(const SystemSignature& o) const {
    if (subs_.size() != o.subs_.size()) return false;
    for (size_t i = 0; i < subs_.size(); ++i)
        if (subs_[i].name != o.subs_[i].name || subs_[i].dim != o.subs_[i].dim) return false;
    return true;
}

long SystemSignature::flat(const std::vector<long>& digits) const {
    long acc = 0;
    for (size_t i = 0; i < subs_.size(); ++i) acc = acc * subs_[i].dim + digits[i];
    return acc;
}

std::vector<long> SystemSignature::digits(long flat_index) const {
    std::vector<long> out(subs_.size(), 0);
    for (size_t i = subs_.size(); i-- > 0;) {
        out[i] = flat_index % subs_[i].dim;
        flat_index /= subs_[i].dim;
    }
    return out;
}

std::string SystemSignature::to_string() const { return "(" + join_names(subs_) + ")"; }

// --- LabeledOperator ------------------------------------------------------------

namespace {

/// Maps caller-order flat indices to canonical-order flat indices.
std::vector<long> sort_map(const std::vector<Subsystem>& caller, const SystemSignature& sorted) {
    const long dim = sorted.total_dim();
    std::vector<long> strides_sorted(static_cast<size_t>(sorted.count()), 1);
    for (int i = sorted.count() - 2; i >= 0; --i)
        strides_sorted[static_cast<size_t>(i)] =
            strides_sorted[static_cast<size_t>(i + 1)] * sorted.at(i + 1).dim;

    std::vector<int> where(caller.size());
    for (size_t i = 0; i < caller.size(); ++i)
        where[i] = sorted.index_of(caller[i].name);

    std::vector<long> map(static_cast<size_t>(dim), 0);
    std::vector<long> digits(caller.size(), 0);
    for (long f = 0; f < dim; ++f) {
        long acc = 0;
        for (size_t i = 0; i < caller.size(); ++i)
            acc += digits[i] * strides_sorted[static_cast<size_t>(where[i])];
        map[static_cast<size_t>(f)] = acc;
        // increment caller-order odometer (last digit fastest)
        for (size_t i = caller.size(); i-- > 0;) {
            if (++digits[i] < caller[i].dim) break;
            digits[i] = 0;
        }
    }
    return map;
}

}  // namespace

LabeledOperator::LabeledOperator(const std::vector<Subsystem>& rows,
                                 const std::vector<Subsystem>& cols, const Mat& m)
    : rows_(rows), cols_(cols) {
    if (m.rows() != rows_.total_dim() || m.cols() != cols_.total_dim())
        throw std::invalid_argument("matrix shape does not match signatures");
    const auto rmap = sort_map(rows, rows_);
    const auto cmap = sort_map(cols, cols_);
    m_.resize(m.rows(), m.cols());
    for (long c = 0; c < m.cols(); ++c)
        for (long r = 0; r < m.rows(); ++r)
            m_(rmap[static_cast<size_t>(r)], cmap[static_cast<size_t>(c)]) = m(r, c);
}

LabeledOperator::LabeledOperator(SystemSignature rows, SystemSignature cols, Mat m)
    : rows_(std::move(rows)), cols_(std::move(cols)), m_(std::move(m)) {
    if (m_.rows() != rows_.total_dim() || m_.cols() != cols_.total_dim())
        throw std::invalid_argument("matrix shape does not match signatures");
}

LabeledOperator LabeledOperator::ket(const std::vector<Subsystem>& rows, const Vec& v) {
    return LabeledOperator(rows, std::vector<Subsystem>{}, Mat(v));
}

Vec LabeledOperator::vector() const {
    if (!is_ket()) throw std::logic_error("vector(): not a ket");
    return m_.col(0);
}

LabeledOperator LabeledOperator::adjoint() const {
    return LabeledOperator(cols_, rows_, m_.adjoint());
}

LabeledOperator LabeledOperator::transpose() const {
    return LabeledOperator(cols_, rows_, m_.transpose());
}

cxd LabeledOperator::trace() const {
    if (!is_square()) throw std::logic_error("trace(): not square");
    return m_.trace();
}

LabeledOperator LabeledOperator::density() const {
    if (!is_ket()) throw std::logic_error("density(): not a ket");
    return LabeledOperator(rows_, rows_, m_ * m_.adjoint());
}

LabeledOperator LabeledOperator::relabeled(const std::map<std::string, std::string>& ren) const {
    auto rename = [&](const SystemSignature& sig) {
        std::vector<Subsystem> subs = sig.subsystems();
        for (auto& s : subs) {
            auto it = ren.find(s.name);
            if (it != ren.end()) s.name = it->second;
        }
        return subs;
    };
    // reuse the permuting constructor: entries are in the old canonical order
    return LabeledOperator(rename(rows_), rename(cols_), m_);
}

LabeledOperator LabeledOperator::operator+(const LabeledOperator& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("operator+: signature mismatch");
    return LabeledOperator(rows_, cols_, m_ + o.m_);
}

LabeledOperator LabeledOperator::operator-(const LabeledOperator& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("operator-: signature mismatch");
    return LabeledOperator(rows_, cols_, m_ - o.m_);
}

LabeledOperator LabeledOperator::operator*(cxd s) const {
    return LabeledOperator(rows_, cols_, m_ * s);
}

namespace {

struct EmbedIndex {
    SystemSignature spect, out;
    std::vector<long> sp_in, x_in, sp_out, y_out;
};

EmbedIndex embed_index(const LabeledOperator& M, const SystemSignature& context) {
    std::set<std::string> xnames;
    for (const auto& s : M.cols().subsystems()) {
        if (!context.has(s.name) || context.dim_of(s.name) != s.dim)
            throw std::invalid_argument("apply: state lacks subsystem " + s.name);
        xnames.insert(s.name);
    }
    EmbedIndex e;
    e.spect = context.without(xnames);
    e.out = e.spect.merged(M.rows());
    e.sp_in = placement(context, e.spect);
    e.x_in = placement(context, M.cols());
    e.sp_out = placement(e.out, e.spect);
    e.y_out = placement(e.out, M.rows());
    return e;
}

/// Builds the matrix of M (x) I aligned to `context` (the state's row
/// signature): output rows (context - M.cols) + M.rows, input cols = context.
LabeledOperator embed(const LabeledOperator& M, const SystemSignature& context) {
    EmbedIndex e = embed_index(M, context);
    Mat full = Mat::Zero(e.out.total_dim(), context.total_dim());
    const Mat& m = M.matrix();
    for (long sp = 0; sp < e.spect.total_dim(); ++sp)
        for (long y = 0; y < M.rows().total_dim(); ++y)
            for (long x = 0; x < M.cols().total_dim(); ++x)
                full(e.sp_out[static_cast<size_t>(sp)] + e.y_out[static_cast<size_t>(y)],
                     e.sp_in[static_cast<size_t>(sp)] + e.x_in[static_cast<size_t>(x)]) = m(y, x);
    return LabeledOperator(e.out, context, std::move(full));
}

/// Applies M to the matching legs of a ket without materializing M (x) I.
LabeledOperator embed_apply_ket(const LabeledOperator& M, const LabeledOperator& ket) {
    EmbedIndex e = embed_index(M, ket.rows());
    const Vec v = ket.vector();
    Vec out = Vec::Zero(e.out.total_dim());
    const Mat& m = M.matrix();
    const long dy = M.rows().total_dim(), dx = M.cols().total_dim();
    for (long sp = 0; sp < e.spect.total_dim(); ++sp) {
        const long bi = e.sp_in[static_cast<size_t>(sp)];
        const long bo = e.sp_out[static_cast<size_t>(sp)];
        for (long y = 0; y < dy; ++y) {
            cxd acc = 0;
            for (long x = 0; x < dx; ++x)
                acc += m(y, x) * v(bi + e.x_in[static_cast<size_t>(x)]);
            out(bo + e.y_out[static_cast<size_t>(y)]) = acc;
        }
    }
    return LabeledOperator(e.out, SystemSignature{}, Mat(out));
}

}  // namespace

LabeledOperator LabeledOperator::apply_to(const LabeledOperator& state) const {
    if (state.is_ket()) {
        if (cols_ == state.rows())
            return LabeledOperator(rows_, SystemSignature{}, m_ * state.vector());
        return embed_apply_ket(*this, state);
    }
    if (!state.is_square()) throw std::invalid_argument("apply_to: state must be ket or square");
    LabeledOperator full = (cols_ == state.rows()) ? *this : embed(*this, state.rows());
    return LabeledOperator(full.rows(), full.rows(),
                           full.matrix() * state.matrix() * full.matrix().adjoint());
}

LabeledOperator LabeledOperator::compose(const LabeledOperator& right) const {
    LabeledOperator full = (cols_ == right.rows()) ? *this : embed(*this, right.rows());
    return LabeledOperator(full.rows(), right.cols(), full.matrix() * right.matrix());
}

// --- helpers -------------------------------------------------------------------

LabeledOperator identity_op(const SystemSignature& sig) {
    return LabeledOperator(sig, sig, Mat::Identity(sig.total_dim(), sig.total_dim()));
}

LabeledOperator basis_ket(const SystemSignature& sig, long flat_index) {
    Vec v = Vec::Zero(sig.total_dim());
    v(flat_index) = 1.0;
    return LabeledOperator(sig, SystemSignature{}, Mat(v));
}

LabeledOperator maximally_mixed(const SystemSignature& sig) {
    const long d = sig.total_dim();
    return LabeledOperator(sig, sig, Mat::Identity(d, d) / static_cast<double>(d));
}

LabeledOperator epr_ket(const std::string& a, const std::string& b, long d) {
    SystemSignature sig{{a, d}, {b, d}};
    Vec v = Vec::Zero(d * d);
    // canonical order sorts (a, b); |ii> is symmetric under that swap
    for (long i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
    return LabeledOperator(sig, SystemSignature{}, Mat(v));
}

LabeledOperator ghz_ket(const std::vector<std::string>& labels, long d) {
    std::vector<Subsystem> subs;
    for (const auto& l : labels) subs.push_back({l, d});
    SystemSignature sig(subs);
    Vec v = Vec::Zero(sig.total_dim());
    long stride = 0;
    {
        long acc = 0, s = 1;
        for (size_t i = labels.size(); i-- > 0;) {
            acc += s;
            s *= d;
        }
        stride = acc;
    }
    for (long i = 0; i < d; ++i) v(i * stride) = 1.0 / std::sqrt(static_cast<double>(d));
    return LabeledOperator(sig, SystemSignature{}, Mat(v));
}

LabeledOperator random_ket(const SystemSignature& sig, RngStream& rng) {
    Vec v(sig.total_dim());
    for (long i = 0; i < v.size(); ++i) v(i) = cxd(rng.gaussian(), rng.gaussian());
    v /= v.norm();
    return LabeledOperator(sig, SystemSignature{}, Mat(v));
}

LabeledOperator random_density(const SystemSignature& sig, long rank, RngStream& rng) {
    const long d = sig.total_dim();
    Mat g(d, rank);
    for (long c = 0; c < rank; ++c)
        for (long r = 0; r < d; ++r) g(r, c) = cxd(rng.gaussian(), rng.gaussian());
    Mat rho = g * g.adjoint();
    rho /= rho.trace().real();
    return LabeledOperator(sig, sig, std::move(rho));
}

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b) {
    SystemSignature rows = a.rows().merged(b.rows());
    SystemSignature cols = a.cols().merged(b.cols());
    const Mat& A = a.matrix();
    const Mat& B = b.matrix();
    Mat k(A.rows() * B.rows(), A.cols() * B.cols());
    for (long i = 0; i < A.rows(); ++i)
        for (long j = 0; j < A.cols(); ++j)
            k.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    // k is laid out in (a then b) order; hand it to the permuting constructor
    std::vector<Subsystem> rlist = a.rows().subsystems();
    for (const auto& s : b.rows().subsystems()) rlist.push_back(s);
    std::vector<Subsystem> clist = a.cols().subsystems();
    for (const auto& s : b.cols().subsystems()) clist.push_back(s);
    return LabeledOperator(rlist, clist, k);
}

LabeledOperator partial_trace(const LabeledOperator& x, const std::set<std::string>& drop) {
    if (!x.is_square()) throw std::invalid_argument("partial_trace: operator not square");
    SystemSignature kept = x.rows().without(drop);
    SystemSignature dropped = x.rows().keep(drop);

    const auto base_k = placement(x.rows(), kept);
    const auto base_d = placement(x.rows(), dropped);

    Mat out = Mat::Zero(kept.total_dim(), kept.total_dim());
    const Mat& m = x.matrix();
    for (long t = 0; t < dropped.total_dim(); ++t) {
        const long bt = base_d[static_cast<size_t>(t)];
        for (long r = 0; r < kept.total_dim(); ++r)
            for (long c = 0; c < kept.total_dim(); ++c)
                out(r, c) += m(base_k[static_cast<size_t>(r)] + bt, base_k[static_cast<size_t>(c)] + bt);
    }
    return LabeledOperator(kept, kept, std::move(out));
}

LabeledOperator op_map(const LabeledOperator& v, const std::set<std::string>& domain,
                       const std::set<std::string>& codomain) {
    if (!v.is_ket()) throw std::invalid_argument("op_map: argument must be a ket");
    std::set<std::string> all;
    for (const auto& n : v.rows().names()) all.insert(n);
    std::set<std::string> both = domain;
    for (const auto& n : codomain) {
        if (!both.insert(n).second)
            throw std::invalid_argument("op_map: domain and codomain overlap on " + n);
    }
    if (both != all)
        throw std::invalid_argument("op_map: domain+codomain must partition the ket's subsystems");

    SystemSignature dsig = v.rows().keep(domain);
    SystemSignature csig = v.rows().keep(codomain);
    const auto base_d = placement(v.rows(), dsig);
    const auto base_c = placement(v.rows(), csig);

    const Vec vec = v.vector();
    Mat out(csig.total_dim(), dsig.total_dim());
    for (long c = 0; c < csig.total_dim(); ++c)
        for (long d = 0; d < dsig.total_dim(); ++d)
            out(c, d) = vec(base_c[static_cast<size_t>(c)] + base_d[static_cast<size_t>(d)]);
    return LabeledOperator(csig, dsig, std::move(out));
}

Mat haar_unitary(long dim, RngStream& rng) {
    Mat a(dim, dim);
    for (long c = 0; c < dim; ++c)
        for (long r = 0; r < dim; ++r)
            a(r, c) = cxd(rng.gaussian(), rng.gaussian()) / std::sqrt(2.0);
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (long i = 0; i < dim; ++i) {
        cxd d = r(i, i);
        double ad = std::abs(d);
        q.col(i) *= (ad > 1e-300) ? d / ad : cxd(1, 0);
    }
    return q;
}

LabeledOperator haar_unitary_op(const SystemSignature& sig, RngStream& rng) {
    return LabeledOperator(sig, sig, haar_unitary(sig.total_dim(), rng));
}

Mat herm(const Mat& m) { return 0.5 * (m + m.adjoint()); }

Mat sqrt_psd(const Mat& m, double clip) {
    Eigen::SelfAdjointEigenSolver<Mat> es(herm(m));
    Eigen::VectorXd ev = es.eigenvalues();
    for (long i = 0; i < ev.size(); ++i) ev(i) = ev(i) > clip ? std::sqrt(ev(i)) : 0.0;
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double trace_norm(const Mat& x) {
    Eigen::SelfAdjointEigenSolver<Mat> es(herm(x));
    return es.eigenvalues().cwiseAbs().sum();
}

double trace_norm(const LabeledOperator& x) { return trace_norm(x.matrix()); }

DistanceReport distances(const LabeledOperator& rho, const LabeledOperator& sigma) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
        throw std::invalid_argument("distances: signature mismatch");
    ensure_density(rho, 1e-9, 1e-9, 1e-9);
    ensure_density(sigma, 1e-9, 1e-9, 1e-9);

    const Mat root = sqrt_psd(rho.matrix()) * sqrt_psd(sigma.matrix());
    Eigen::JacobiSVD<Mat> svd(root);
    double f = svd.singularValues().sum();
    const double tr = std::max(0.0, 1.0 - rho.trace().real());
    const double ts = std::max(0.0, 1.0 - sigma.trace().real());
    f += std::sqrt(tr * ts);
    f = std::min(f, 1.0);

    DistanceReport rep;
    rep.fidelity = f;
    rep.purified_distance = std::sqrt(std::max(0.0, 1.0 - f * f));
    rep.trace_distance = 0.5 * trace_norm(rho.matrix() - sigma.matrix());
    return rep;
}

LabeledOperator purify(const LabeledOperator& rho, const std::string& env_label) {
    if (!rho.is_square()) throw std::invalid_argument("purify: not square");
    Eigen::SelfAdjointEigenSolver<Mat> es(herm(rho.matrix()));
    std::vector<long> kept;
    for (long i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 1e-14) kept.push_back(i);
    if (kept.empty()) throw std::invalid_argument("purify: zero operator");
    const long rank = static_cast<long>(kept.size());

    SystemSignature env{{env_label, rank}};
    SystemSignature full = rho.rows().merged(env);
    const auto base_sys = placement(full, rho.rows());
    const auto base_env = placement(full, env);

    Vec v = Vec::Zero(full.total_dim());
    for (long e = 0; e < rank; ++e) {
        const double w = std::sqrt(es.eigenvalues()(kept[static_cast<size_t>(e)]));
        const auto col = es.eigenvectors().col(kept[static_cast<size_t>(e)]);
        for (long j = 0; j < rho.rows().total_dim(); ++j)
            v(base_sys[static_cast<size_t>(j)] + base_env[static_cast<size_t>(e)]) = w * col(j);
    }
    return LabeledOperator(full, SystemSignature{}, Mat(v));
}

namespace {

/// Extends the (orthonormal) columns collected in `basis` to an orthonormal
/// basis of C^dim using Gram-Schmidt over the standard basis.
void complete_basis(std::vector<Vec>& basis, long dim) {
    for (long cand = 0; cand < dim && static_cast<long>(basis.size()) < dim; ++cand) {
        Vec v = Vec::Zero(dim);
        v(cand) = 1.0;
        for (const auto& b : basis) v -= b * (b.dot(v));
        const double n = v.norm();
        if (n > 1e-8) basis.push_back(v / n);
    }
    if (static_cast<long>(basis.size()) != dim)
        throw std::runtime_error("complete_basis: failed to complete basis");
}

}  // namespace

UhlmannResult uhlmann_isometry(const LabeledOperator& psi, const LabeledOperator& phi, double tau) {
    if (!psi.is_ket() || !phi.is_ket()) throw std::invalid_argument("uhlmann: arguments must be kets");

    std::set<std::string> shared, ponly, qonly;
    for (const auto& n : psi.rows().names())
        (phi.rows().has(n) ? shared : ponly).insert(n);
    for (const auto& n : phi.rows().names())
        if (!psi.rows().has(n)) qonly.insert(n);
    for (const auto& n : shared)
        if (psi.rows().dim_of(n) != phi.rows().dim_of(n))
            throw std::invalid_argument("uhlmann: shared subsystem dimension mismatch on " + n);

    SystemSignature ssig = psi.rows().keep(shared);
    SystemSignature psig = psi.rows().without(shared);
    SystemSignature qsig = phi.rows().without(shared);

    const long dp = psig.total_dim();
    long dq = qsig.total_dim();
    SystemSignature qout = qsig;
    if (dq < dp) {
        long pad = (dp + dq - 1) / dq;
        qout = qsig.merged(SystemSignature{{"uhlmann_pad", pad}});
        dq = qout.total_dim();
    }

    const LabeledOperator psi_s = partial_trace(psi.density(), ponly);
    const LabeledOperator phi_s = partial_trace(phi.density(), qonly);
    const auto rep = distances(psi_s, phi_s);

    Eigen::SelfAdjointEigenSolver<Mat> es(herm(psi_s.matrix()));

    const auto base_s_psi = placement(psi.rows(), ssig);
    const auto base_p_psi = placement(psi.rows(), psig);
    const auto base_s_phi = placement(phi.rows(), ssig);
    const auto base_q_phi = placement(phi.rows(), qsig);
    const Vec vpsi = psi.vector();
    const Vec vphi = phi.vector();

    // embedding of qsig indices into the (possibly padded) output space
    std::vector<long> base_q_out(static_cast<size_t>(qsig.total_dim()), 0);
    if (qout == qsig) {
        for (long x = 0; x < qsig.total_dim(); ++x) base_q_out[static_cast<size_t>(x)] = x;
    } else {
        base_q_out = placement(qout, qsig);  // pad digit fixed at 0
    }

    std::vector<Vec> pbasis, qbasis;
    const long ds = ssig.total_dim();
    for (long i = ds - 1; i >= 0; --i) {  // descending eigenvalues
        const double lam = es.eigenvalues()(i);
        if (lam <= 1e-14) continue;
        const auto e = es.eigenvectors().col(i);
        Vec p = Vec::Zero(dp), q = Vec::Zero(qsig.total_dim());
        for (long s = 0; s < ds; ++s) {
            const cxd w = std::conj(e(s));
            for (long x = 0; x < dp; ++x)
                p(x) += w * vpsi(base_s_psi[static_cast<size_t>(s)] + base_p_psi[static_cast<size_t>(x)]);
            for (long x = 0; x < qsig.total_dim(); ++x)
                q(x) += w * vphi(base_s_phi[static_cast<size_t>(s)] + base_q_phi[static_cast<size_t>(x)]);
        }
        p /= std::sqrt(lam);
        q /= std::sqrt(lam);
        // re-orthonormalize against what we have (exact when marginals agree)
        for (const auto& b : pbasis) p -= b * b.dot(p);
        if (p.norm() < 1e-10) continue;
        p /= p.norm();
        Vec qfull = Vec::Zero(dq);
        for (long x = 0; x < qsig.total_dim(); ++x) qfull(base_q_out[static_cast<size_t>(x)]) = q(x);
        for (const auto& b : qbasis) qfull -= b * b.dot(qfull);
        if (qfull.norm() > 1e-10) qfull /= qfull.norm();
        else qfull.setZero();  // collapsed target direction, patched below
        pbasis.push_back(p);
        qbasis.push_back(qfull);
    }
    // patch any collapsed q directions with orthogonal completion vectors
    {
        std::vector<Vec> fill;
        for (const auto& q : qbasis)
            if (q.norm() > 0.5) fill.push_back(q);
        const size_t good = fill.size();
        complete_basis(fill, dq);
        size_t next = good;
        for (auto& q : qbasis)
            if (q.norm() < 0.5) q = fill[next++];
    }
    complete_basis(pbasis, dp);
    {
        std::vector<Vec> all = qbasis;
        complete_basis(all, dq);
        qbasis = std::move(all);
    }

    Mat w = Mat::Zero(dq, dp);
    for (long i = 0; i < dp; ++i)
        w += qbasis[static_cast<size_t>(i)] * pbasis[static_cast<size_t>(i)].adjoint();

    UhlmannResult res;
    res.isometry = LabeledOperator(qout, psig, std::move(w));
    res.marginal_distance = rep.purified_distance;
    res.degraded = rep.purified_distance > tau;

    LabeledOperator moved = res.isometry.apply_to(psi);
    // overlap against phi, ignoring any pad subsystem (pad leg of moved is |0>)
    if (qout != qsig) {
        const auto base_q = placement(moved.rows(), phi.rows());
        Vec sub(phi.rows().total_dim());
        const Vec mv = moved.vector();
        for (long i = 0; i < sub.size(); ++i) sub(i) = mv(base_q[static_cast<size_t>(i)]);
        res.overlap = std::abs(phi.vector().dot(sub));
    } else {
        res.overlap = std::abs(phi.vector().dot(moved.vector()));
    }
    return res;
}

bool is_hermitian(const Mat& m, double tol) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

void ensure_density(const LabeledOperator& x, double herm_tol, double eig_tol, double trace_tol) {
    if (!x.is_square()) throw std::invalid_argument("density check: not square");
    if (!is_hermitian(x.matrix(), herm_tol)) throw std::invalid_argument("density check: not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(herm(x.matrix()));
    if (es.eigenvalues().minCoeff() < -eig_tol)
        throw std::invalid_argument("density check: negative eigenvalue");
    const double tr = x.trace().real();
    if (tr <= 0 || tr > 1.0 + trace_tol)
        throw std::invalid_argument("density check: trace outside (0, 1]");
}

void ensure_isometry(const LabeledOperator& v, double tol) {
    const Mat g = v.matrix().adjoint() * v.matrix();
    const Mat id = Mat::Identity(g.rows(), g.cols());
    if ((g - id).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("isometry check failed");
}

}  // namespace qsplit
