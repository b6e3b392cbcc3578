#pragma once

#include <string>
#include <vector>

#include "qsplit/labeled.hpp"

namespace qsplit {

/// Completely positive map given by a Kraus list with named input and output
/// ports. Not necessarily trace preserving.
struct KrausMap {
    SystemSignature inputs;
    SystemSignature outputs;
    std::vector<Mat> kraus;  // each outputs.total_dim() x inputs.total_dim()

    LabeledOperator apply(const LabeledOperator& state) const;
};

/// Stinespring dilation V|x> = sum_k (K_k|x>) |k>_env of a Kraus map.
struct Dilation {
    LabeledOperator isometry;  // inputs -> outputs (x) env
    std::string env_label;
};

/// CPTP map with named ports. Kraus storage is canonical; the Stinespring
/// isometry and the complementary channel are derived.
class Channel {
public:
    Channel() = default;
    /// Validates trace preservation (deficit above `tp_tol` throws with an
    /// eigenvalue report).
    Channel(std::string name, SystemSignature inputs, SystemSignature outputs,
            std::vector<Mat> kraus, double tp_tol = 1e-8);

    const std::string& name() const { return name_; }
    const SystemSignature& inputs() const { return map_.inputs; }
    const SystemSignature& outputs() const { return map_.outputs; }
    const std::vector<Mat>& kraus() const { return map_.kraus; }
    const KrausMap& kraus_map() const { return map_; }

    /// Kraus sum on the matching ports of `rho`; other subsystems ride along.
    LabeledOperator apply(const LabeledOperator& rho) const;

    Dilation dilate(const std::string& env_label) const;

    /// Complementary channel output Tr_outputs(V rho V^dag).
    LabeledOperator apply_complementary(const LabeledOperator& rho,
                                        const std::string& env_label) const;

private:
    std::string name_;
    KrausMap map_;
};

/// Catalog channels:
///   identity [d]                    d-dimensional identity, port Ap -> B
///   depolarizing [p]                qubit, Ap -> B
///   dephasing [p]                   qubit phase flip with probability p
///   erasure [p, d]                  d -> d+1 with erasure flag
///   amplitude_damping [g]           qubit
///   qmac_product [g1, g2]           amplitude-damping wires (Ap, Bp) -> C
///   qmac_adder [p1, p2]             CNOT of the inputs, then per-wire phase
///                                   flips, (Ap, Bp) -> C
///   qic_crosstalk [s, p]            parallel wires with a controlled phase of
///                                   strength s, then local depolarizing(p),
///                                   (Ap, Bp) -> (C, D)
Channel builtin_channel(const std::string& name, const std::vector<double>& params);

/// Loads the JSON channel document format (see README).
Channel load_channel(const std::string& path);
Channel parse_channel_json(const std::string& text);

/// "builtin:name:p1,p2" or a filesystem path.
Channel resolve_channel(const std::string& spec);

}  // namespace qsplit
