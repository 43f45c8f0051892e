#include <doctest.h>

#include <cmath>
#include <limits>

#include "compforge/optimizers.hpp"

using namespace compforge::optim;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
}

double quadratic(std::span<const double> x, std::span<double> g) {
    // sum_i (i+1) (x_i - i)^2
    double f = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - static_cast<double>(i);
        f += static_cast<double>(i + 1) * d * d;
        g[i] = 2.0 * static_cast<double>(i + 1) * d;
    }
    return f;
}

}  // namespace

TEST_CASE("L-BFGS solves a separable quadratic") {
    const auto r = lbfgs_minimize(quadratic, std::vector<double>(6, 0.0), LbfgsSettings{});
    CHECK_FALSE(r.failed);
    CHECK(r.f < 1e-12);
    for (std::size_t i = 0; i < 6; ++i) CHECK(r.x[i] == doctest::Approx(static_cast<double>(i)).epsilon(1e-6));
}

TEST_CASE("L-BFGS reaches the Rosenbrock minimum") {
    const auto r = lbfgs_minimize(rosenbrock, {-1.2, 1.0}, LbfgsSettings{});
    CHECK_FALSE(r.failed);
    CHECK(r.f < 1e-10);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("L-BFGS copes with poor conditioning") {
    // curvatures from 1 to 1e4 along the axes
    auto fn = [](std::span<const double> x, std::span<double> g) {
        double f = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double c = std::pow(10.0, static_cast<double>(i));
            f += 0.5 * c * (x[i] - 1) * (x[i] - 1);
            g[i] = c * (x[i] - 1);
        }
        return f;
    };
    const auto r = lbfgs_minimize(fn, std::vector<double>(5, 0.0), LbfgsSettings{});
    CHECK(r.converged);
    CHECK(r.f < 1e-12);
}

TEST_CASE("L-BFGS stops at once at a stationary start") {
    const auto r = lbfgs_minimize(quadratic, {0.0, 1.0, 2.0}, LbfgsSettings{});
    CHECK(r.converged);
    CHECK(r.iterations == 0);
}

TEST_CASE("line search refuses non-finite steps") {
    // f = x^2 on (-1, 1) and NaN outside: the first full step from 0.9 overshoots.
    auto fn = [](std::span<const double> x, std::span<double> g) {
        if (std::abs(x[0]) >= 1.0) {
            g[0] = std::numeric_limits<double>::quiet_NaN();
            return std::numeric_limits<double>::quiet_NaN();
        }
        g[0] = 2 * x[0];
        return x[0] * x[0];
    };
    LbfgsSettings s;
    s.lr = 10.0;
    const auto r = lbfgs_minimize(fn, {0.9}, s);
    CHECK_FALSE(r.failed);
    CHECK(std::isfinite(r.f));
    CHECK(r.f < 1e-10);
}

TEST_CASE("L-BFGS reports a non-finite start as a failure") {
    auto fn = [](std::span<const double>, std::span<double> g) {
        g[0] = 0;
        return std::numeric_limits<double>::infinity();
    };
    CHECK(lbfgs_minimize(fn, {0.0}, LbfgsSettings{}).failed);
}

TEST_CASE("Adam descends and keeps the best iterate") {
    AdamSettings s;
    s.lr = 0.05;
    s.max_epochs = 4000;
    const auto r = adam_minimize(quadratic, std::vector<double>(4, 0.0), s);
    CHECK_FALSE(r.failed);
    CHECK(r.f < 1e-6);
    CHECK(r.iterations > 0);
}

TEST_CASE("Adam flags NaN and hands back the start point") {
    int calls = 0;
    auto fn = [&calls](std::span<const double> x, std::span<double> g) {
        g[0] = 1.0;
        return ++calls > 3 ? std::numeric_limits<double>::quiet_NaN() : x[0];
    };
    const auto r = adam_minimize(fn, {0.5}, AdamSettings{});
    CHECK(r.failed);
    CHECK(r.x[0] == 0.5);
}
