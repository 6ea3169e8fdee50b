#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "json.hpp"

#include "carnot/group.hpp"
#include "carnot/heisenberg.hpp"
#include "carnot/probe.hpp"

using namespace carnot;

namespace {
constexpr double kPi = 3.14159265358979323846;

ScalarField affine_field(const GroupSpec& spec) {
    ScalarField f;
    f.spec = &spec;
    f.name = "affine";
    f.eval = [](const Point& p) {
        double s = 1.5;
        for (std::size_t i = 0; i < p.size(); ++i) s += (0.7 + 0.3 * i) * p[i];
        return s;
    };
    return f;
}

Point rand_offaxis(std::mt19937_64& rng, double dmin, double dmax,
                   double theta_max = 2.6) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double theta = theta_max * (2.0 * u(rng) - 1.0);
    const double phi = 2 * kPi * u(rng);
    const double d = dmin + (dmax - dmin) * u(rng);
    const double ratio =
        std::fabs(theta) < 1e-12 ? 1.0 : std::sin(std::fabs(theta)) / std::fabs(theta);
    const double rho = d * ratio;
    return Point{rho * std::cos(phi), rho * std::sin(phi),
                 heis::mu(theta) * rho * rho / 4.0};
}

} // namespace

TEST_CASE("second difference worked examples") {
    const ScalarField f = field_d0sq_exact();
    CHECK(second_diff(f, Point{0, 0, 0}, HorizontalVec{1, 0}) ==
          doctest::Approx(2.0).epsilon(1e-14));

    const GroupSpec& ab = registry("abelian3");
    const ScalarField aff = affine_field(ab);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 30; ++k) {
        const Point p{u(rng), u(rng), u(rng)};
        const HorizontalVec h{u(rng), u(rng)};
        CHECK(std::fabs(second_diff(aff, p, h)) <= 1e-13);
    }

    const double t = 1e-3;
    const double sd = second_diff(f, Point{0, 0, 1}, HorizontalVec{t, 0});
    CHECK(sd / t == doctest::Approx(-8.0 * std::sqrt(kPi)).epsilon(2e-3));
}

TEST_CASE("second difference is exactly symmetric under h -> -h") {
    const ScalarField f = field_d0sq_exact();
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 40; ++k) {
        const Point p{u(rng), u(rng), u(rng)};
        const HorizontalVec h{0.1 * u(rng), 0.1 * u(rng)};
        HorizontalVec m = h;
        m[0] = -m[0];
        m[1] = -m[1];
        CHECK(second_diff(f, p, h) == second_diff(f, p, m));
    }
}

TEST_CASE("scan verdicts: bounded for d0^2, blowup for -d0^2") {
    std::mt19937_64 rng(33);
    ScanConfig config;
    config.grid.push_back(Point{0, 0, 0});
    config.grid.push_back(Point{0, 0, 0.5});
    config.grid.push_back(Point{0, 0, -0.8});
    for (int k = 0; k < 12; ++k) config.grid.push_back(rand_offaxis(rng, 0.3, 2.0));
    config.dirs = default_directions(registry("heisenberg"), 6);

    const ProbeReport bounded = semiconcavity_scan(field_d0sq_exact(), config);
    CHECK(bounded.verdict == Verdict::bounded);
    CHECK(bounded.failed_evals == 0);

    ScanConfig near_axis;
    near_axis.grid = {Point{0, 0, 1}};
    near_axis.dirs = default_directions(registry("heisenberg"), 2);
    const ProbeReport blow =
        semiconcavity_scan(field_negate(field_d0sq_exact()), near_axis);
    CHECK(blow.verdict == Verdict::blowup);
    // Positive quotients growing like 1/|h| for the negated field.
    CHECK(blow.per_scale_sup.back().second > 0.0);
}

TEST_CASE("scan config validation and failure accounting") {
    ScanConfig config;
    config.grid = {Point{0, 0, 0}};
    config.dirs = default_directions(registry("heisenberg"), 2);
    config.ladder = {1e-1, 1e-2};
    CHECK_THROWS_AS(semiconcavity_scan(field_d0sq_exact(), config), config_error);
    config.ladder = {1e-1, 1e-2, 1e-2};
    CHECK_THROWS_AS(semiconcavity_scan(field_d0sq_exact(), config), config_error);

    ScalarField broken;
    broken.spec = &registry("heisenberg");
    broken.name = "broken";
    broken.eval = [](const Point&) -> double {
        throw domain_error("always fails");
    };
    config.ladder = {1e-1, 1e-2, 1e-3};
    CHECK_THROWS_AS(semiconcavity_scan(broken, config), config_error);
}

TEST_CASE("first-order limit hits -4 d0 on the center") {
    const ScalarField f = field_d0sq_exact();
    const std::vector<double> ladder = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};

    const auto l1 = first_order_limit(f, Point{0, 0, 1}, HorizontalVec{1, 0}, ladder);
    CHECK(!l1.inconclusive);
    CHECK(l1.error_estimate <= 1e-4);
    CHECK(l1.quotients.size() == ladder.size());
    CHECK(l1.limit ==
          doctest::Approx(-8.0 * std::sqrt(kPi)).epsilon(0.01));

    const auto l4 = first_order_limit(f, Point{0, 0, 4}, HorizontalVec{0, 1}, ladder);
    CHECK(l4.limit ==
          doctest::Approx(-16.0 * std::sqrt(kPi)).epsilon(0.01));

    // At a smooth point the first-order quotient vanishes.
    const auto smooth =
        first_order_limit(f, Point{1, 0, 0.2}, HorizontalVec{1, 0}, ladder);
    CHECK(std::fabs(smooth.limit) <= 1e-2);
}

TEST_CASE("fd horizontal Hessian agrees with the closed-form bundle") {
    const ScalarField f = field_d0sq_exact();
    std::mt19937_64 rng(34);
    for (int k = 0; k < 10; ++k) {
        const Point p = rand_offaxis(rng, 0.5, 1.8, 2.2);
        const auto fd = fd_horizontal_hessian(f, p, 1e-4);
        const auto b = heis::derivatives(p);
        CHECK(std::fabs(fd[0] - b.horizontal_hess[0][0]) <= 1e-4);
        CHECK(std::fabs(fd[3] - b.horizontal_hess[1][1]) <= 1e-4);
        CHECK(std::fabs(fd[1] - b.horizontal_hess[0][1]) <= 1e-4);
        CHECK(fd[1] == fd[2]);
    }
}

TEST_CASE("fd horizontal Hessian of |p1|^2 is twice the identity") {
    for (const auto& name : {"heisenberg", "rxh"}) {
        const GroupSpec& spec = registry(name);
        ScalarField f;
        f.spec = &spec;
        f.name = "first_layer_sq";
        f.eval = [&spec](const Point& p) {
            double s = 0.0;
            for (int i = 0; i < spec.n1(); ++i) s += p[i] * p[i];
            return s;
        };
        std::mt19937_64 rng(35);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        std::vector<double> v(spec.n());
        for (double& x : v) x = u(rng);
        const auto fd = fd_horizontal_hessian(f, Point(v), 1e-4);
        const int m = spec.n1();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                CHECK(std::fabs(fd[i * m + j] - (i == j ? 2.0 : 0.0)) <= 1e-7);
    }

    const GroupSpec& ab = registry("abelian3");
    const auto fd = fd_horizontal_hessian(affine_field(ab), Point{0.3, -0.7, 0.2},
                                          1e-4);
    for (double v : fd) CHECK(std::fabs(v) <= 1e-9);
}

TEST_CASE("per-scale sup respects a known curvature bound") {
    // f = x^2 + x y restricted to p . tau h has second derivative
    // h^T [[2,1],[1,0]] h; the largest eigenvalue is 1 + sqrt(2).
    const GroupSpec& spec = registry("heisenberg");
    ScalarField f;
    f.spec = &spec;
    f.name = "quadratic_poly";
    f.eval = [](const Point& p) { return p[0] * p[0] + p[0] * p[1]; };
    std::mt19937_64 rng(36);
    std::uniform_real_distribution<double> u(-1, 1);
    ScanConfig config;
    for (int k = 0; k < 10; ++k)
        config.grid.push_back(Point{u(rng), u(rng), u(rng)});
    config.dirs = default_directions(spec, 8);
    const ProbeReport rep = semiconcavity_scan(f, config);
    CHECK(rep.verdict == Verdict::bounded);
    const double bound = 1.0 + std::sqrt(2.0);
    for (const auto& [lvl, sup] : rep.per_scale_sup) {
        CHECK(sup <= bound + 1e-9);
        CHECK(sup >= 2.0 - 1e-9); // the e1 direction already gives 2
    }
}

TEST_CASE("compositions with power profiles") {
    const ScalarField d0 = field_d0_exact();
    const ScalarField sq =
        compose_with_psi([](double t) { return t * t; }, d0, "d0sq_via_psi");
    std::mt19937_64 rng(37);
    for (int k = 0; k < 20; ++k) {
        const Point p = rand_offaxis(rng, 0.2, 2.0);
        CHECK(sq(p) ==
              doctest::Approx(heis::d0_squared_exact(p)).epsilon(1e-12));
    }

    const ScalarField cube =
        compose_with_psi([](double t) { return t * t * t; }, d0, "d0cube");
    ScanConfig config;
    config.grid.push_back(Point{0, 0, 0});
    config.grid.push_back(Point{0, 0, 0.6});
    for (int k = 0; k < 10; ++k) config.grid.push_back(rand_offaxis(rng, 0.2, 2.0));
    config.dirs = default_directions(registry("heisenberg"), 4);
    CHECK(semiconcavity_scan(cube, config).verdict == Verdict::bounded);

    // The identity profile keeps the center corner: |quotient2| doubles.
    ScanConfig axis;
    axis.grid = {Point{0, 0, 1}};
    axis.dirs = {HorizontalVec{1, 0}};
    CHECK(semiconcavity_scan(d0, axis).verdict == Verdict::blowup);
}

TEST_CASE("probe report serialization") {
    ScanConfig config;
    config.grid = {Point{0, 0, 0}, Point{0.5, 0.2, 0.1}};
    config.dirs = default_directions(registry("heisenberg"), 2);
    const ProbeReport rep = semiconcavity_scan(field_d0sq_exact(), config);

    for (const auto& smp : rep.samples) {
        const double hnorm = smp.level; // unit directions
        CHECK(std::fabs(smp.quotient2 * hnorm * hnorm - smp.second_diff) <=
              1e-14 * std::max(1.0, std::fabs(smp.second_diff)));
        CHECK(std::fabs(smp.quotient1 * hnorm - smp.second_diff) <=
              1e-14 * std::max(1.0, std::fabs(smp.second_diff)));
    }

    const auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["verdict"] == "bounded");
    CHECK(j["samples"].size() == rep.samples.size());
    CHECK(j["per_scale_sup"].size() == config.ladder.size());

    const std::string file = "test_probe_report.csv";
    rep.write_csv(file);
    std::FILE* fp = std::fopen(file.c_str(), "rb");
    REQUIRE(fp != nullptr);
    std::fclose(fp);
    std::remove(file.c_str());
}
