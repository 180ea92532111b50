#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "dagi/adam.hpp"
#include "dagi/errors.hpp"
#include "dagi/matrix.hpp"

using dagi::AdamOptimizer;
using dagi::Matrix;

TEST_CASE("zero gradient leaves parameters unchanged and advances the step") {
    AdamOptimizer opt;
    Matrix p(2, 2, {1.0, -2.0, 3.0, 4.0});
    const Matrix before = p;
    opt.begin_step();
    opt.update("w", p, Matrix(2, 2));
    CHECK(p == before);
    CHECK(opt.step_count() == 1);
}

TEST_CASE("first step with unit gradient moves a scalar by almost minus lr") {
    AdamOptimizer opt;
    Matrix p(1, 1, {1.0});
    opt.begin_step();
    opt.update("x", p, Matrix(1, 1, {1.0}));
    // Hand trace: m̂ = v̂ = 1 after bias correction, so the step is
    // −lr / (1 + eps).
    const double expected = 1.0 - 0.01 / (1.0 + 1e-8);
    CHECK(p(0, 0) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(p(0, 0) == doctest::Approx(0.99).epsilon(1e-6));
}

TEST_CASE("descent on a parabola settles near the minimum within 500 steps") {
    AdamOptimizer opt;
    Matrix x(1, 1, {1.0});
    int steps = 0;
    for (; steps < 500; ++steps) {
        if (std::fabs(x(0, 0)) < 0.1) break;
        opt.begin_step();
        opt.update("x", x, Matrix(1, 1, {2.0 * x(0, 0)}));
    }
    CHECK(std::fabs(x(0, 0)) < 0.1);
    CHECK(steps < 500);
}

TEST_CASE("non-finite gradient raises a training error naming the parameter") {
    AdamOptimizer opt;
    Matrix p(1, 2, {1.0, 2.0});
    Matrix g(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()});
    opt.begin_step();
    try {
        opt.update("encoder.w1", p, g);
        FAIL("expected TrainingError");
    } catch (const dagi::TrainingError& e) {
        CHECK(std::string(e.what()).find("encoder.w1") != std::string::npos);
    }
}

TEST_CASE("shape drift and missing begin_step are rejected") {
    AdamOptimizer opt;
    Matrix p(1, 2);
    CHECK_THROWS_AS(opt.update("w", p, Matrix(1, 2)), dagi::ContractError);
    opt.begin_step();
    CHECK_THROWS_AS(opt.update("w", p, Matrix(2, 1)), dagi::DimensionError);
    opt.update("w", p, Matrix(1, 2));
    Matrix wrong(2, 2);
    CHECK_THROWS_AS(opt.update("w", wrong, Matrix(2, 2)), dagi::DimensionError);
}

TEST_CASE("update order across parameters does not change the result") {
    Matrix a1(1, 1, {1.0}), b1(1, 1, {2.0});
    Matrix a2 = a1, b2 = b1;
    const Matrix ga(1, 1, {0.3}), gb(1, 1, {-0.7});
    AdamOptimizer o1, o2;
    for (int s = 0; s < 5; ++s) {
        o1.begin_step();
        o1.update("a", a1, ga);
        o1.update("b", b1, gb);
        o2.begin_step();
        o2.update("b", b2, gb);
        o2.update("a", a2, ga);
    }
    CHECK(a1 == a2);
    CHECK(b1 == b2);
}
