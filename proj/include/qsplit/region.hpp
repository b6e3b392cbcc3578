#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsplit/channel.hpp"
#include "qsplit/entropy.hpp"
#include "qsplit/split.hpp"

namespace qsplit {

struct RatePoint {
    double theta = 0;
    std::string direction;                      // decode-order tag where applicable
    std::map<std::string, double> rates;        // clamped at 0 for plotting
    std::map<std::string, double> rates_raw;    // signed, slack included
    std::map<std::string, double> ingredients;  // entropic values, eps-tagged keys
    double slack = 0;                           // additive log-eps term applied per inequality
    bool feasible = true;
};

struct RegionTrace {
    std::string channel_id;
    std::string control_id;
    std::string mode;  // p2p | qmac | qic | iid_qmac | iid_qic
    double epsilon = 0;
    int k = 1;
    std::vector<RatePoint> points;
    std::map<std::string, double> corners;  // successive-cancellation corner annotations

    std::string to_csv() const;
    nlohmann::ordered_json to_json() const;
};

/// Maximally entangled control kets sized to the channel's input ports.
LabeledOperator default_alice_control(const Channel& ch);  // (As, Ap)
LabeledOperator default_bob_control(const Channel& ch);    // (Bs, Bp)

/// k-fold tensor power of a channel (ports suffixed _1.._k).
Channel channel_power(const Channel& ch, int k);

/// Split transmission region for a point-to-point channel: per theta the
/// Alice0 corner and the Alice1 rate for each entanglement budget.
RegionTrace p2p_region(const Channel& ch, const LabeledOperator& omega, double eps,
                       const std::vector<double>& theta_grid,
                       const std::vector<double>& ea1_grid = {0.0});

/// One-shot rate corners for a two-sender channel (ports Ap, Bp -> C):
/// both decode orders per theta, ebit budgets (ea, eb).
RegionTrace qmac_region(const Channel& ch, const LabeledOperator& omega,
                        const LabeledOperator& delta, double eps,
                        const std::vector<double>& theta_grid, double ea = 0, double eb = 0);

enum class QicDirection { a_helps_b, b_helps_a };

/// One-shot interference-channel region (ports Ap, Bp -> C, D). Alice donates
/// q0 qubits of side information to Damru; q0 = 0 is the trivial product
/// protocol.
RegionTrace qic_region(const Channel& ch, const LabeledOperator& omega,
                       const LabeledOperator& delta, double eps,
                       const std::vector<double>& theta_grid, const std::vector<double>& q0_grid,
                       QicDirection dir = QicDirection::a_helps_b, double ea = 0, double eb = 0);

/// Asymptotic region at finite tensor power k (1 or 2): the coherent
/// information pentagon for a QMAC, or the theta-union of helping rectangles
/// for a QIC.
RegionTrace iid_region(const Channel& ch, const LabeledOperator& omega,
                       const LabeledOperator& delta, int k,
                       const std::vector<double>& theta_grid = {});

/// Entropic ingredients of a successive-cancellation corner evaluated on the
/// unsplit control state; decode_order "BA" decodes Bob first.
std::map<std::string, double> qmac_corner_direct(const Channel& ch, const LabeledOperator& omega,
                                                 const LabeledOperator& delta, double eps,
                                                 const std::string& decode_order);

}  // namespace qsplit
