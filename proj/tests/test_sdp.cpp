#include "doctest.h"

#include "qsplit/sdp.hpp"

#include <cmath>

using namespace qsplit;

TEST_CASE("sdp solves a scalar LP") {
    // minimize y subject to y >= 3 (block: y - 3 >= 0)
    sdp::Problem p({1});
    int y = p.add_variable(1.0);
    p.add_entry(y, 0, 0, 0, 1.0);
    p.add_const_entry(0, 0, 0, -3.0);
    auto r = sdp::solve(p);
    REQUIRE(r.status == sdp::Status::optimal);
    CHECK(r.primal_obj == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(std::abs(r.primal_obj - r.dual_obj) < 1e-7);
}

TEST_CASE("sdp solves min trace t with tI >= A") {
    // optimum is lambda_max(A)
    sdp::Problem p({2});
    int t = p.add_variable(1.0);
    p.add_entry(t, 0, 0, 0, 1.0);
    p.add_entry(t, 0, 1, 1, 1.0);
    // A = [[1, i], [-i, 1]]: eigenvalues 0 and 2
    p.add_const_entry(0, 0, 0, -1.0);
    p.add_const_entry(0, 1, 1, -1.0);
    p.add_const_entry(0, 0, 1, sdp::cxd(0, -1));
    auto r = sdp::solve(p);
    REQUIRE(r.status == sdp::Status::optimal);
    CHECK(r.primal_obj == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(r.gap < 1e-6);
}

TEST_CASE("sdp with matrix variable: min <I, sigma> s.t. sigma >= B blocks") {
    // variables: hermitian sigma (2x2), constraints sigma - B >= 0 and sigma >= 0,
    // minimize trace(sigma). Optimum: trace of the positive part of B.
    // B = diag(0.7, -0.3) -> optimum 0.7.
    sdp::Problem p({2, 2});
    int s00 = p.add_variable(1.0);
    int s11 = p.add_variable(1.0);
    int sre = p.add_variable(0.0);
    int sim = p.add_variable(0.0);
    for (int b = 0; b < 2; ++b) {
        p.add_entry(s00, b, 0, 0, 1.0);
        p.add_entry(s11, b, 1, 1, 1.0);
        p.add_entry(sre, b, 0, 1, 1.0);
        p.add_entry(sim, b, 0, 1, sdp::cxd(0, 1));
    }
    p.add_const_entry(0, 0, 0, -0.7);
    p.add_const_entry(0, 1, 1, 0.3);
    auto r = sdp::solve(p);
    REQUIRE(r.status == sdp::Status::optimal);
    CHECK(r.primal_obj == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(std::abs(r.primal_obj - r.dual_obj) < 1e-6);
}
