#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "carnot/geodesic.hpp"
#include "carnot/group.hpp"
#include "carnot/heisenberg.hpp"

using namespace carnot;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Test-side integrator for the control ODE, independent of endpoint_map's
// exact group stepping.
Point integrate_controls_rk4(const GroupSpec& spec, const PiecewiseControls& c,
                             const Point& p0, int substeps) {
    const int m = spec.n1();
    std::vector<double> p = p0.c;
    auto rhs = [&](const std::vector<double>& st, const double* u,
                   std::vector<double>& out) {
        if (spec.law() == GroupLaw::bilinear) {
            const int off2 = spec.layer_offset(2);
            std::vector<double> corr(spec.n2(), 0.0);
            spec.apply_bilinear(st.data(), u, corr.data());
            for (int j = 0; j < m; ++j) out[j] = u[j];
            for (int k2 = 0; k2 < spec.n2(); ++k2) out[off2 + k2] = corr[k2];
        } else {
            const double x = st[0], y = st[1], z = st[2];
            out[0] = u[0];
            out[1] = u[1];
            out[2] = -0.5 * y * u[0] + 0.5 * x * u[1];
            out[3] = -(x * y / 12.0 + 0.5 * z) * u[0] + x * x / 12.0 * u[1];
        }
    };
    const int n = spec.n();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (int seg = 0; seg < c.segments; ++seg) {
        const double* u = c.u.data() + seg * m;
        const double dt = 1.0 / (c.segments * substeps);
        for (int s = 0; s < substeps; ++s) {
            rhs(p, u, k1);
            for (int i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * dt * k1[i];
            rhs(tmp, u, k2);
            for (int i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * dt * k2[i];
            rhs(tmp, u, k3);
            for (int i = 0; i < n; ++i) tmp[i] = p[i] + dt * k3[i];
            rhs(tmp, u, k4);
            for (int i = 0; i < n; ++i)
                p[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
    }
    return Point(p);
}

} // namespace

TEST_CASE("hamiltonian worked values") {
    const GroupSpec& h = registry("heisenberg");
    CHECK(hamiltonian(h, zero_point(h), Covector{1, 0, 0}) == doctest::Approx(0.5));
    CHECK(hamiltonian(h, zero_point(h), Covector{0, 0, 1}) == doctest::Approx(0.0));
    CHECK(hamiltonian(h, Point{1, 0, 0}, Covector{0, 0, 1}) ==
          doctest::Approx(1.0 / 8.0));
    CHECK_THROWS_AS(hamiltonian(h, zero_point(h), Covector{1, 0}),
                    dimension_error);
}

TEST_CASE("flow: straight line, stationary cases, divergence guard") {
    const GroupSpec& h = registry("heisenberg");

    const auto straight = flow_extremal(h, Covector{1, 0, 0}, 64);
    const Point& end = straight.points.back();
    CHECK(end[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(end[1]) <= 1e-12);
    CHECK(std::fabs(end[2]) <= 1e-12);
    CHECK(straight.energy == doctest::Approx(0.5));

    const auto rest = flow_extremal(h, Covector{0, 0, 0}, 16);
    for (double v : rest.points.back().c) CHECK(v == 0.0);

    const auto vertical = flow_extremal(h, Covector{0, 0, 7.5}, 64);
    for (double v : vertical.points.back().c) CHECK(std::fabs(v) <= 1e-14);
    CHECK(vertical.energy == doctest::Approx(0.0));

    CHECK_THROWS_AS(flow_extremal(h, Covector{1, 0, 0}, 8), config_error);

    try {
        flow_extremal(h, Covector{1e200, 0, 1e200}, 16);
        FAIL("expected divergence_error");
    } catch (const divergence_error& e) {
        CHECK(e.time() > 0.0);
        CHECK(e.time() <= 1.0);
    }
}

TEST_CASE("flow conserves H and keeps vertical covectors frozen") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    for (const auto& name : registry_names()) {
        const GroupSpec& spec = registry(name);
        for (int k = 0; k < 4; ++k) {
            std::vector<double> xi(spec.n());
            for (double& x : xi) x = u(rng);
            const auto path = flow_extremal(spec, Covector(xi), 1024);
            CHECK(path.hamiltonian_drift <= 1e-8);
            CHECK(path.energy == doctest::Approx(hamiltonian(
                                     spec, zero_point(spec), Covector(xi))));
            if (spec.step() == 2) {
                const int off2 = spec.layer_offset(2);
                for (const auto& cv : path.covectors)
                    for (int j = 0; j < spec.n2(); ++j)
                        CHECK(std::fabs(cv[off2 + j] - xi[off2 + j]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("endpoint map: worked examples") {
    const GroupSpec& rxh = registry("rxh");
    PiecewiseControls c1{1, {1.0, 0.0, 0.0}};
    const Point e1 = endpoint_map(rxh, c1, zero_point(rxh));
    CHECK(e1[0] == doctest::Approx(1.0));
    for (int i = 1; i < 4; ++i) CHECK(std::fabs(e1[i]) <= 1e-15);

    const GroupSpec& h = registry("heisenberg");
    PiecewiseControls czero{3, std::vector<double>(6, 0.0)};
    const Point stay = endpoint_map(h, czero, Point{0.4, -0.2, 0.9});
    CHECK(stay[0] == doctest::Approx(0.4));
    CHECK(stay[2] == doctest::Approx(0.9));

    PiecewiseControls two{2, {1.0, 0.0, 0.0, 1.0}}; // (1,0) then (0,1)
    const Point corner = endpoint_map(h, two, zero_point(h));
    CHECK(corner[0] == doctest::Approx(0.5));
    CHECK(corner[1] == doctest::Approx(0.5));
    CHECK(corner[2] == doctest::Approx(0.125));

    CHECK_THROWS_AS(endpoint_map(h, PiecewiseControls{2, {1.0, 2.0, 3.0}},
                                 zero_point(h)),
                    dimension_error);
}

TEST_CASE("exact group stepping equals an RK4 control integration") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& name : {"heisenberg", "rxh", "engel"}) {
        const GroupSpec& spec = registry(name);
        const int m = spec.n1();
        PiecewiseControls c{6, std::vector<double>(6 * m)};
        for (double& x : c.u) x = u(rng);
        const Point a = endpoint_map(spec, c, zero_point(spec));
        const Point b = integrate_controls_rk4(spec, c, zero_point(spec), 64);
        for (int i = 0; i < spec.n(); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("shooting distance: worked targets") {
    const GroupSpec& h = registry("heisenberg");

    const auto zero = shoot_distance(h, zero_point(h));
    CHECK(zero.distance == 0.0);

    const auto line = shoot_distance(h, Point{1, 0, 0});
    CHECK(line.distance == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(line.terminal_residual <= 1e-8 * 2.0);

    const auto axis = shoot_distance(h, Point{0, 0, 1});
    CHECK(axis.distance == doctest::Approx(2.0 * std::sqrt(kPi)).epsilon(1e-5));

    const GroupSpec& e = registry("engel");
    const auto eng = shoot_distance(e, Point{0, 1, 0, 0});
    CHECK(eng.distance == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("shooting respects the horizontal projection lower bound") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    const GroupSpec& h = registry("heisenberg");
    for (int k = 0; k < 3; ++k) {
        const Point q{u(rng), u(rng), 0.4 * u(rng)};
        const auto res = shoot_distance(h, q);
        CHECK(res.distance >= std::hypot(q[0], q[1]) - 1e-8);
    }
}

TEST_CASE("shooting fails cleanly on unreachable targets") {
    const GroupSpec& ab = registry("abelian3");
    // With a trivial bracket the vertical direction is unreachable.
    CHECK_THROWS_AS(shoot_distance(ab, Point{0, 0, 1}), unreached_target);
}

TEST_CASE("control oracle: worked targets and failure path") {
    const GroupSpec& h = registry("heisenberg");
    CHECK(control_oracle_distance(h, Point{1, 0, 0}, 8) ==
          doctest::Approx(1.0).epsilon(1e-4));
    CHECK(control_oracle_distance(h, Point{0, 0, 1}, 32) ==
          doctest::Approx(2.0 * std::sqrt(kPi)).epsilon(1e-2));

    CHECK_THROWS_AS(control_oracle_distance(h, Point{1, 0, 0}, 2), config_error);
    CHECK_THROWS_AS(control_oracle_distance(h, Point{1, 0, 0}, 100), config_error);

    const GroupSpec& ab = registry("abelian3");
    CHECK_THROWS_AS(control_oracle_distance(ab, Point{0, 0, 1}, 8), oracle_failure);
}

TEST_CASE("oracle and shooting agree with the closed form off the axis") {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const GroupSpec& h = registry("heisenberg");
    for (int k = 0; k < 5; ++k) {
        const double rho = 0.4 + 0.5 * u(rng);
        const double phi = 2 * kPi * u(rng);
        const double theta = -2.0 + 4.0 * u(rng);
        const Point q{rho * std::cos(phi), rho * std::sin(phi),
                      heis::mu(theta) * rho * rho / 4.0};
        const double exact = std::sqrt(heis::d0_squared_exact(q));
        CHECK(shoot_distance(h, q).distance ==
              doctest::Approx(exact).epsilon(1e-4));
        CHECK(control_oracle_distance(h, q, 24) ==
              doctest::Approx(exact).epsilon(1e-2));
    }
}

TEST_CASE("path CSV dump") {
    const GroupSpec& h = registry("heisenberg");
    const auto path = flow_extremal(h, Covector{0.3, -0.2, 1.0}, 32);
    const std::string file = "test_path_dump.csv";
    write_path_csv(path, file);
    std::ifstream in(file);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,p_1,p_2,p_3,xi_1,xi_2,xi_3");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 33);
    in.close();
    std::remove(file.c_str());
}
