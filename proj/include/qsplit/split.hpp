#pragma once

#include <string>
#include <vector>

#include "qsplit/channel.hpp"
#include "qsplit/labeled.hpp"

namespace qsplit {

/// A split of a distribution P over an ordered alphabet into independent
/// factors (P_u, P_v) whose image under max(u, v) reproduces P.
struct SplitSpec {
    std::vector<double> base;  // P over the ordered alphabet (zeros allowed)
    double theta = 0;
    std::vector<double> p_u;
    std::vector<double> p_v;

    /// Pushforward of p_u x p_v under max; equals `base` up to roundoff.
    std::vector<double> pushforward() const;

    /// Conditional law of max(U, V) given U = u.
    std::vector<double> conditional_given_u(long u) const;
};

/// Builds the split via the distribution-function construction
/// F_u = theta F + (1 - theta), F_v = F / F_u. Zero-mass symbols are
/// compacted out before the division and reinserted afterwards.
SplitSpec split_distributions(const std::vector<double>& p, double theta);

/// Isometric embedding of one subsystem into two, seeded by a split of the
/// subsystem's computational-basis weights. The alphabet is ordered by
/// decreasing weight (ties by basis index); columns outside the support are
/// zero, so V^dag V is the support projector.
struct SplitIsometry {
    double theta = 0;
    LabeledOperator matrix;           // source -> (out0, out1)
    SplitSpec spec;                   // over the rank-ordered alphabet
    std::vector<long> order;          // rank -> original basis index
    std::string source, out0, out1;
};

/// Splits the `source` leg of the ket `omega`. Weights are the squared
/// amplitudes of the source computational basis; phases stay with the other
/// legs.
SplitIsometry split_isometry(const LabeledOperator& omega, const std::string& source,
                             double theta, const std::string& out0, const std::string& out1);

/// Applies the splitting isometry to the ket it was built from.
LabeledOperator apply_split(const SplitIsometry& split, const LabeledOperator& omega);

struct ContinuityPoint {
    double theta_lo = 0, theta_hi = 0;
    double purified_distance = 0;
};

/// Purified distances between channel-dilated split states at adjacent grid
/// thetas; feeds the sqrt-scaling check of the continuity bound.
std::vector<ContinuityPoint> continuity_probe(const LabeledOperator& omega,
                                              const std::string& source, const Channel& channel,
                                              const std::vector<double>& theta_grid);

}  // namespace qsplit
