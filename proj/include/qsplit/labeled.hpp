#pragma once

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qsplit/rng.hpp"

namespace qsplit {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

struct Subsystem {
    std::string name;
    long dim = 1;
};

/// An ordered list of named subsystems. Construction canonicalizes the order
/// lexicographically by name, so two signatures over the same subsystems
/// always compare equal and index the same way.
class SystemSignature {
public:
    SystemSignature() = default;
    SystemSignature(std::initializer_list<Subsystem> subs);
    explicit SystemSignature(std::vector<Subsystem> subs);

    long total_dim() const { return total_dim_; }
    int count() const { return static_cast<int>(subs_.size()); }
    bool scalar() const { return subs_.empty(); }
    const Subsystem& at(int i) const { return subs_[static_cast<size_t>(i)]; }
    const std::vector<Subsystem>& subsystems() const { return subs_; }

    bool has(const std::string& name) const;
    int index_of(const std::string& name) const;  // -1 if absent
    long dim_of(const std::string& name) const;
    std::vector<std::string> names() const;

    SystemSignature without(const std::set<std::string>& drop) const;
    SystemSignature keep(const std::set<std::string>& kept) const;
    /// Disjoint union; throws on name collision.
    SystemSignature merged(const SystemSignature& other) const;

    bool operator==(const SystemSignature& o) const;
    bool operator!=(const SystemSignature& o) const { return !(*this == o); }

    /// Flat index from one digit per subsystem (canonical order, first
    /// subsystem most significant, matching Kronecker products).
    long flat(const std::vector<long>& digits) const;
    std::vector<long> digits(long flat_index) const;

    std::string to_string() const;

private:
    std::vector<Subsystem> subs_;
    long total_dim_ = 1;
};

/// A complex matrix carrying named row and column subsystems. Stores the
/// canonical (name-sorted) subsystem order; constructors accept any order and
/// permute the entries to match. Kets are operators with a scalar column
/// signature.
class LabeledOperator {
public:
    LabeledOperator() = default;

    /// `m` is laid out in the Kronecker order of the given (possibly
    /// unsorted) subsystem lists.
    LabeledOperator(const std::vector<Subsystem>& rows,
                    const std::vector<Subsystem>& cols, const Mat& m);
    LabeledOperator(SystemSignature rows, SystemSignature cols, Mat m);

    static LabeledOperator ket(const std::vector<Subsystem>& rows, const Vec& v);

    const SystemSignature& rows() const { return rows_; }
    const SystemSignature& cols() const { return cols_; }
    const Mat& matrix() const { return m_; }
    Mat& matrix() { return m_; }

    bool is_ket() const { return cols_.scalar(); }
    bool is_square() const { return rows_ == cols_; }
    Vec vector() const;  // requires ket

    LabeledOperator adjoint() const;
    LabeledOperator transpose() const;
    cxd trace() const;
    double norm() const { return m_.norm(); }

    /// Density operator |this><this| of a ket.
    LabeledOperator density() const;

    LabeledOperator relabeled(const std::map<std::string, std::string>& ren) const;

    LabeledOperator operator+(const LabeledOperator& o) const;
    LabeledOperator operator-(const LabeledOperator& o) const;
    LabeledOperator operator*(cxd s) const;

    /// Applies this operator to the named subsystems of `state` (identity on
    /// the rest). For kets returns M|state>, for square operators M state M^dag.
    LabeledOperator apply_to(const LabeledOperator& state) const;

    /// The same embedding without the adjoint on the right: M state (names on
    /// the columns of M must appear in state's rows).
    LabeledOperator compose(const LabeledOperator& right) const;

private:
    SystemSignature rows_, cols_;
    Mat m_;
};

// --- construction helpers ---------------------------------------------------

LabeledOperator identity_op(const SystemSignature& sig);
LabeledOperator basis_ket(const SystemSignature& sig, long flat_index);
LabeledOperator maximally_mixed(const SystemSignature& sig);
/// (1/sqrt(d)) sum_i |ii> on two subsystems of equal dimension.
LabeledOperator epr_ket(const std::string& a, const std::string& b, long d);
LabeledOperator ghz_ket(const std::vector<std::string>& labels, long d = 2);
LabeledOperator random_ket(const SystemSignature& sig, RngStream& rng);
LabeledOperator random_density(const SystemSignature& sig, long rank, RngStream& rng);

// --- core operations ---------------------------------------------------------

/// Kronecker product; subsystem names must be disjoint.
LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b);

/// Trace over the named subsystems of a square operator.
LabeledOperator partial_trace(const LabeledOperator& x, const std::set<std::string>& drop);

/// Bends the `domain` legs of a ket into matrix columns: the basis-dependent
/// map |d>|c> -> |c><d| extended linearly. domain and codomain must partition
/// the ket's subsystems.
LabeledOperator op_map(const LabeledOperator& v, const std::set<std::string>& domain,
                       const std::set<std::string>& codomain);

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// phase-fixed diagonal.
Mat haar_unitary(long dim, RngStream& rng);
LabeledOperator haar_unitary_op(const SystemSignature& sig, RngStream& rng);

struct DistanceReport {
    double fidelity = 0;           // generalized fidelity
    double purified_distance = 0;  // sqrt(1 - F^2)
    double trace_distance = 0;     // (1/2)||rho - sigma||_1
};

/// Generalized fidelity, purified distance and trace distance between two
/// (possibly subnormalized) density operators on the same signature.
DistanceReport distances(const LabeledOperator& rho, const LabeledOperator& sigma);

/// ||x||_1 of a Hermitian operator (sum of absolute eigenvalues, exact).
double trace_norm(const LabeledOperator& x);
double trace_norm(const Mat& x);

/// Standard eigen-decomposition purification; the environment dimension is
/// the rank of rho after clipping eigenvalues below 1e-14.
LabeledOperator purify(const LabeledOperator& rho, const std::string& env_label);

struct UhlmannResult {
    LabeledOperator isometry;        // P -> Q
    double overlap = 0;              // |<phi|(I (x) W)|psi>|
    double marginal_distance = 0;    // purified distance of the shared marginals
    bool degraded = false;           // marginal mismatch exceeded the tolerance
};

/// Given kets psi on (S, P) and phi on (S, Q) with (approximately) equal
/// marginals on the shared group S, constructs an isometry W : P -> Q with
/// (I (x) W)|psi> close to |phi>. A marginal mismatch is reported as a
/// degraded-fidelity result, not an error.
UhlmannResult uhlmann_isometry(const LabeledOperator& psi, const LabeledOperator& phi,
                               double tau = 1e-6);

// --- validation / small numerics ---------------------------------------------

bool is_hermitian(const Mat& m, double tol = 1e-12);
void ensure_density(const LabeledOperator& x, double herm_tol = 1e-12,
                    double eig_tol = 1e-12, double trace_tol = 1e-12);
void ensure_isometry(const LabeledOperator& v, double tol = 1e-10);

/// PSD square root with eigenvalue clipping at `clip`.
Mat sqrt_psd(const Mat& m, double clip = 1e-14);

/// Hermitian part (m + m^dag)/2.
Mat herm(const Mat& m);

/// Flat-index contribution of each multi-index of `sub` when its digits are
/// placed at their positions inside `full`; the full index of a joint
/// configuration is the sum of the placements of its parts.
std::vector<long> placement(const SystemSignature& full, const SystemSignature& sub);

}  // namespace qsplit
