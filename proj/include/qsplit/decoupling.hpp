#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsplit/channel.hpp"
#include "qsplit/entropy.hpp"
#include "qsplit/labeled.hpp"
#include "qsplit/rng.hpp"
#include "qsplit/split.hpp"

namespace qsplit {

struct DecouplingConfig {
    int trials = 200;           // >= 30
    RngStream rng{0, 0};
    double epsilon = 0;         // smoothing used on the bound side
    int k = 20;                 // union-bound parameter of the lemma harnesses
    double protocol_tolerance = 0.1;  // output distance below which a run counts as a success

    void validate() const;
};

struct TrialReport {
    std::vector<double> trial_values;  // per-trial trace norms
    double mean = 0;
    double std_error = 0;
    double bound = 0;      // min-entropy exponent variant
    double bound_alt = 0;  // Renyi-2 exponent variant (where applicable)
    std::map<std::string, double> bound_inputs;
    double pass_fraction = 1.0;  // fraction of trials meeting the bound (lemma harnesses)
    double threshold = 0;        // required fraction 1 - 3/k
    bool pass = false;

    nlohmann::ordered_json to_json() const;
};

/// omega(U) = sqrt(|bend|) op^{bend -> rest}(sigma) (U (x) I)|phi>, the state
/// obtained by contracting the control with one randomized input.
LabeledOperator intermediary_state(const LabeledOperator& sigma, const std::string& bend,
                                   const LabeledOperator& phi, const Mat& u);

struct AlmostCptpReport {
    KrausMap map;                 // bend -> references of phi
    double trace_at_pi = 0;       // Tr T(pi), exactly 1 for this construction
    double choi_min_eig = 0;      // complete positivity witness
    double haar_avg_distance = 0; // sampled || avg T(U xi) - Tr[xi] T(pi) ||_1
};

/// T(xi) = |bend| op^{bend -> R}(phi) xi op^dag, with its defining property
/// report (the Haar-average property is checked by sampling).
AlmostCptpReport almost_cptp(const LabeledOperator& phi, const std::string& bend, int samples,
                             RngStream rng);

/// Monte Carlo check of the single-sender decoupling bound: the Haar mean of
/// || T(U rho U^dag) - omega^R (x) rho^E ||_1 against
/// 2^{ -H2(A'|R)_omega/2 - H2(A|E)_rho/2 } + 8 eps.
TrialReport decoupling_mc(const LabeledOperator& rho, const KrausMap& t,
                          const DecouplingConfig& cfg);

/// Per-sample check of the one-Haar lemma: fraction of (U1, U2) draws whose
/// contracted-encoder trace norm stays below the k-inflated entropic bound
/// must be at least 1 - 3/k.
TrialReport onehaar_mc(const LabeledOperator& sigma, const std::string& a_reg,
                       const std::string& b_reg, const LabeledOperator& psi,
                       const LabeledOperator& phi, const Channel& channel,
                       const DecouplingConfig& cfg);

/// Three-unitary variant over a product of Haar measures on (a1, b_reg).
TrialReport product_haar_mc(const LabeledOperator& sigma, const std::string& a0,
                            const std::string& a1, const std::string& b_reg,
                            const LabeledOperator& eta, const LabeledOperator& psi,
                            const LabeledOperator& phi, const Channel& channel,
                            const DecouplingConfig& cfg);

struct ProtocolRun {
    bool derandomized = false;
    int samples_used = 0;
    bool success = false;
    double c0 = 1;                      // 1 / Tr[global]
    double output_trace_distance = 0;   // || out - eta (x) psi ||_1
    double fidelity = 0;
    double delta_composed = 0;       // 4 sqrt(2 d0) + 2 sqrt(2 d1) + 2 sqrt(2 e0 + 2 e1)
    double delta_alt = 0;               // alternative composition of the same terms
    std::map<std::string, double> delta_terms;  // dec0, dec1, enc0, enc1 targets
    std::map<std::string, double> measured;     // measured condition values
    std::optional<LabeledOperator> encoder;     // isometric encoder (when dims allow)
    double encoder_defect = 0;
    double sim_norm_loss = 0;           // mass lost inverting the simulated decode

    nlohmann::ordered_json to_json() const;
};

/// End-to-end split transmission over a point-to-point channel (port Ap -> B):
/// op-based random encoder from the split control state, rejection-sampled
/// derandomization against the entropic targets, successive-cancellation
/// decoding with a simulate-and-invert step, all decoders from Uhlmann
/// isometries. eta is Alice0's message ket on (A0, R0); psi is Alice1's on
/// (A1, B1, R1) with B1 the receiver's side information.
ProtocolRun p2p_split_protocol(const Channel& channel, const LabeledOperator& omega, double theta,
                               const LabeledOperator& eta, const LabeledOperator& psi,
                               const DecouplingConfig& cfg);

}  // namespace qsplit
