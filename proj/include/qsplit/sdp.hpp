#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace qsplit::sdp {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;

/// Linear matrix inequality problem over a product of Hermitian PSD blocks:
///
///   minimize    c' y
///   subject to  F(y) = F0 + sum_i y_i F_i  >= 0   (block diagonal)
///
/// F0 and the F_i are Hermitian; the F_i are stored sparsely as elementary
/// entries. Dimension-1 blocks model scalar inequalities.
class Problem {
public:
    explicit Problem(std::vector<long> block_dims) : dims_(std::move(block_dims)) {}

    int num_vars() const { return static_cast<int>(cost_.size()); }
    const std::vector<long>& block_dims() const { return dims_; }

    int add_variable(double cost) {
        cost_.push_back(cost);
        var_parts_.emplace_back();
        return num_vars() - 1;
    }

    /// Adds v E_{rc} + conj(v) E_{cr} (or v E_{rr} with v real) to F_var.
    void add_entry(int var, int block, long r, long c, cxd v);
    /// Same, for the constant term F0.
    void add_const_entry(int block, long r, long c, cxd v);

    struct Part {
        int block;
        long a, b;
        cxd w;
    };  // elementary w E_{ab}

    const std::vector<std::vector<Part>>& parts() const { return var_parts_; }
    const std::vector<Part>& const_parts() const { return const_parts_; }
    const std::vector<double>& cost() const { return cost_; }

private:
    std::vector<long> dims_;
    std::vector<double> cost_;
    std::vector<std::vector<Part>> var_parts_;
    std::vector<Part> const_parts_;
};

enum class Status { optimal, max_iterations, infeasible };

struct Options {
    double tol = 1e-9;       // relative gap and residual target
    int max_iter = 200;
    bool verbose = false;
};

struct Result {
    Status status = Status::max_iterations;
    double primal_obj = 0;  // c'y
    double dual_obj = 0;    // -<F0, X>
    double gap = 0;         // <S, X>
    int iterations = 0;
    std::vector<double> y;
    std::vector<Mat> X;  // dual certificate blocks
    std::vector<Mat> S;  // slack blocks F(y)
};

/// Primal-dual Nesterov-Todd path-following method with a Mehrotra
/// predictor-corrector, dense per-block linear algebra.
Result solve(const Problem& p, const Options& opt = {});

}  // namespace qsplit::sdp
