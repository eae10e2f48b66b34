// Analytic gradients against central finite differences, via the shared
// checker that the CLI's grad-check command also runs.
#include <functional>
#include <random>

#include "doctest.h"

#include "cdcnn/gradcheck.hpp"
#include "cdcnn/nncore.hpp"

using namespace cdcnn;

TEST_CASE("finite_difference_grad on a known quadratic") {
    // f(p) = p0^2 + 3 p0 p1, grad = (2 p0 + 3 p1, 3 p0)
    auto f = [](std::span<const double> p) { return p[0] * p[0] + 3 * p[0] * p[1]; };
    std::vector<double> p{1.5, -2.0};
    auto g = finite_difference_grad(f, p);
    REQUIRE(g.size() == 2);
    CHECK(g[0] == doctest::Approx(2 * 1.5 + 3 * -2.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(3 * 1.5).epsilon(1e-8));
}

TEST_CASE("gradient suite passes at unit scale") {
    auto report = gradcheck::run(2, 17);
    CHECK(report.cases.size() >= 8);
    CHECK(report.total_checks > 100);
    CHECK(report.worst < 1e-4);
    CHECK(report.passed(1e-4));
}

TEST_CASE("gradient suite is deterministic in its seed") {
    auto a = gradcheck::run(1, 5);
    auto b = gradcheck::run(1, 5);
    REQUIRE(a.cases.size() == b.cases.size());
    CHECK(a.worst == b.worst);
    CHECK(a.total_checks == b.total_checks);
    for (std::size_t i = 0; i < a.cases.size(); ++i) {
        CHECK(a.cases[i].name == b.cases[i].name);
        CHECK(a.cases[i].max_rel_error == b.cases[i].max_rel_error);
    }
}
