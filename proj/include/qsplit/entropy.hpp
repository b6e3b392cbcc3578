#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qsplit/labeled.hpp"
#include "qsplit/sdp.hpp"

namespace qsplit {

enum class SolveStatus { optimal, max_iterations, infeasible };

/// Result of an entropic quantity. SDP-backed quantities carry the duality
/// gap and the optimizing operators; closed-form ones report gap 0.
struct EntropyResult {
    double value = 0;  // bits
    SolveStatus status = SolveStatus::optimal;
    double gap = 0;            // primal-dual objective gap of the backing SDP
    double primal_bound = 0;   // value derived from the primal iterate (bits)
    double dual_bound = 0;     // value derived from the dual iterate (bits)
    int iterations = 0;
    std::optional<LabeledOperator> sigma;         // optimal conditioning operator
    std::optional<LabeledOperator> rho_smoothed;  // optimal smoothed state (eps > 0)
};

/// Von Neumann entropy (bits) of the reduced state on `subset`; eigenvalues
/// below 1e-14 contribute zero.
double von_neumann(const LabeledOperator& rho, const std::set<std::string>& subset);
double von_neumann(const LabeledOperator& rho);

/// Coherent information I(sender > receiver) = H(receiver) - H(sender+receiver), bits.
double coherent_information(const LabeledOperator& rho, const std::set<std::string>& sender,
                            const std::set<std::string>& receiver);

/// Conditional von Neumann entropy H(A|B) = H(AB) - H(B), bits.
double conditional_von_neumann(const LabeledOperator& rho, const std::set<std::string>& a,
                               const std::set<std::string>& b);

struct HminOptions {
    double tol = 1e-9;
    int max_iter = 200;
    bool strip_pure_legs = true;  // exact reduction; disable only in tests
};

/// Smooth conditional min-entropy H_min^eps(A|B), bits. For eps = 0 this is
/// -log2 min{ Tr sigma : rho <= I_A (x) sigma }; for eps > 0 the smoothing
/// ranges over subnormalized rho' with purified distance at most eps from the
/// (normalized) input. Pure and product-basis-diagonal states dispatch to
/// exact symmetry-reduced programs.
EntropyResult hmin_cond(const LabeledOperator& rho, const std::set<std::string>& a,
                        const std::set<std::string>& b, double eps,
                        const HminOptions& opt = {});

/// H_max^eps(A|B) = -H_min^eps(A|E) on a purification; requires normalized rho.
EntropyResult hmax_cond(const LabeledOperator& rho, const std::set<std::string>& a,
                        const std::set<std::string>& b, double eps,
                        const HminOptions& opt = {});

/// Smooth coherent min-information I_min^eps(A>B) = H_min^eps(A|E) on a
/// purification of the state restricted to A and B.
EntropyResult imin_coherent(const LabeledOperator& rho, const std::set<std::string>& a,
                            const std::set<std::string>& b, double eps,
                            const HminOptions& opt = {});

/// Conditioning-operator policy for the Renyi-2 conditional entropy bound.
struct SigmaPolicy {
    enum class Kind { marginal, fixed, alternating };
    Kind kind = Kind::marginal;
    std::optional<LabeledOperator> sigma;  // for fixed
    int rounds = 0;                        // for alternating

    static SigmaPolicy marginal() { return {}; }
    static SigmaPolicy fixed(LabeledOperator s);
    static SigmaPolicy alternating(int k);
};

/// Lower bound on the sandwiched Renyi-2 conditional entropy H_2(A|B):
/// -log2 Tr[rho (I (x) sigma^{-1/2}) rho (I (x) sigma^{-1/2})] at the policy's
/// sigma. `alternating` runs monotone descent rounds on sigma starting from
/// the marginal. Any fixed sigma certifies a lower bound.
double h2_cond_bound(const LabeledOperator& rho, const std::set<std::string>& a,
                     const std::set<std::string>& b, const SigmaPolicy& policy = {});

/// Unconditional smooth max-entropy H_max^eps(A) (trivial conditioning);
/// at eps = 0 this is the Renyi-1/2 entropy 2 log2 Tr sqrt(rho).
double hmax_unconditional(const LabeledOperator& rho, const std::set<std::string>& a);

/// [ H_min^eps(A^n|B^n)/n - H(A|B) ] for n = 1..n_max over iid copies.
std::vector<double> qaep_gap(const LabeledOperator& rho_ab, const std::set<std::string>& a,
                             const std::set<std::string>& b, int n_max, double eps);

/// n-fold tensor power with subsystem labels suffixed _1.._n.
LabeledOperator tensor_power(const LabeledOperator& x, int n);

enum class Quantity { von_neumann, coherent_info, hmin_cond, hmax_cond, h2_cond, imin_coherent };

struct EntropyQuery {
    Quantity quantity = Quantity::von_neumann;
    LabeledOperator state;
    std::set<std::string> condition_on;  // B group (or receiver, for coherent_info)
    double epsilon = 0;
};

EntropyResult evaluate(const EntropyQuery& q);

}  // namespace qsplit
