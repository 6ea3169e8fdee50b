#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "carnot/group.hpp"

using namespace carnot;

namespace {

Point rand_point(const GroupSpec& spec, std::mt19937_64& rng, double scale = 2.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(spec.n());
    for (double& x : v) x = u(rng);
    return Point(v);
}

} // namespace

TEST_CASE("multiplication worked examples") {
    const GroupSpec& h = registry("heisenberg");
    const Point r = multiply(h, Point{1, 0, 0}, Point{0, 1, 0});
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(1.0));
    CHECK(r[2] == doctest::Approx(0.5));

    const GroupSpec& e = registry("engel");
    const Point s = multiply(e, Point{1, 0, 0, 0}, Point{0, 1, 0, 0});
    CHECK(s[2] == doctest::Approx(0.5));
    CHECK(s[3] == doctest::Approx(1.0 / 12.0));

    std::mt19937_64 rng(1);
    for (const auto& name : registry_names()) {
        const GroupSpec& spec = registry(name);
        const Point p = rand_point(spec, rng);
        const Point pe = multiply(spec, p, zero_point(spec));
        for (int i = 0; i < spec.n(); ++i) CHECK(pe[i] == p[i]);
    }
}

TEST_CASE("inverse is negation and a two-sided inverse") {
    const GroupSpec& h = registry("heisenberg");
    const Point m = inverse(h, Point{1, 2, 3});
    CHECK(m[0] == -1.0);
    CHECK(m[1] == -2.0);
    CHECK(m[2] == -3.0);

    std::mt19937_64 rng(2);
    for (const auto& name : registry_names()) {
        const GroupSpec& spec = registry(name);
        const Point z = inverse(spec, zero_point(spec));
        for (int i = 0; i < spec.n(); ++i) CHECK(z[i] == 0.0);
        for (int k = 0; k < 20; ++k) {
            const Point p = rand_point(spec, rng);
            const Point pid = multiply(spec, p, inverse(spec, p));
            for (int i = 0; i < spec.n(); ++i)
                CHECK(std::fabs(pid[i]) <= 1e-12);
        }
    }
}

TEST_CASE("dilation weights and identity dilation") {
    const GroupSpec& h = registry("heisenberg");
    const Point d = dilate(h, 2.0, Point{1, 1, 1});
    CHECK(d[0] == 2.0);
    CHECK(d[1] == 2.0);
    CHECK(d[2] == 4.0);

    const GroupSpec& e = registry("engel");
    const Point de = dilate(e, 2.0, Point{1, 1, 1, 1});
    CHECK(de[2] == 4.0);
    CHECK(de[3] == 8.0);

    std::mt19937_64 rng(3);
    const Point p = rand_point(h, rng);
    const Point same = dilate(h, 1.0, p);
    for (int i = 0; i < 3; ++i) CHECK(same[i] == p[i]);

    CHECK_THROWS_AS(dilate(h, 0.0, p), domain_error);
    CHECK_THROWS_AS(dilate(h, -1.0, p), domain_error);
}

TEST_CASE("group axioms hold on random triples") {
    std::mt19937_64 rng(4);
    for (const auto& name : registry_names()) {
        const GroupSpec& spec = registry(name);
        for (int k = 0; k < 60; ++k) {
            const Point p = rand_point(spec, rng), q = rand_point(spec, rng),
                        w = rand_point(spec, rng);
            const Point a = multiply(spec, multiply(spec, p, q), w);
            const Point b = multiply(spec, p, multiply(spec, q, w));
            for (int i = 0; i < spec.n(); ++i)
                CHECK(std::fabs(a[i] - b[i]) <= 1e-12);
        }
    }
}

TEST_CASE("dilations are automorphisms") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ur(0.3, 2.5);
    for (const auto& name : registry_names()) {
        const GroupSpec& spec = registry(name);
        for (int k = 0; k < 40; ++k) {
            const Point p = rand_point(spec, rng), q = rand_point(spec, rng);
            const double r = ur(rng);
            const Point a = dilate(spec, r, multiply(spec, p, q));
            const Point b = multiply(spec, dilate(spec, r, p), dilate(spec, r, q));
            for (int i = 0; i < spec.n(); ++i)
                CHECK(std::fabs(a[i] - b[i]) <=
                      1e-10 * std::max(1.0, std::fabs(a[i])));
        }
    }
}

TEST_CASE("bilinear form is exactly skew and obeys the correction bound") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ur(-3.0, 3.0);
    for (const auto& name : registry_names()) {
        const GroupSpec& spec = registry(name);
        if (spec.law() != GroupLaw::bilinear || spec.n2() == 0) continue;
        const int m = spec.n1();
        std::vector<double> u(m), v(m), buv(spec.n2()), bvu(spec.n2());
        for (int k = 0; k < 50; ++k) {
            for (double& x : u) x = ur(rng);
            for (double& x : v) x = ur(rng);
            spec.apply_bilinear(u.data(), v.data(), buv.data());
            spec.apply_bilinear(v.data(), u.data(), bvu.data());
            double nu = 0, nv = 0, nb = 0;
            for (int i = 0; i < m; ++i) {
                nu += u[i] * u[i];
                nv += v[i] * v[i];
            }
            for (int i = 0; i < spec.n2(); ++i) {
                CHECK(buv[i] == -bvu[i]); // exact skewness
                nb += buv[i] * buv[i];
            }
            CHECK(std::sqrt(nb) <= spec.c0() * std::sqrt(nu * nv) + 1e-14);
        }
    }
    CHECK(registry("heisenberg").c0() == doctest::Approx(1.0));
}

TEST_CASE("homogeneous norm examples and 1-homogeneity") {
    const GroupSpec& h = registry("heisenberg");
    CHECK(homogeneous_norm(h, Point{0, 0, 1}) == doctest::Approx(1.0));
    CHECK(homogeneous_norm(h, Point{1, 0, 0}) == doctest::Approx(1.0));

    std::mt19937_64 rng(7);
    for (const auto& name : registry_names()) {
        const GroupSpec& spec = registry(name);
        for (int k = 0; k < 20; ++k) {
            Point p = rand_point(spec, rng);
            const double n1 = homogeneous_norm(spec, p);
            if (n1 < 1e-9) continue;
            CHECK(homogeneous_norm(spec, dilate(spec, 3.0, p)) / n1 ==
                  doctest::Approx(3.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("horizontal embedding and left translation") {
    const GroupSpec& h = registry("heisenberg");
    const HorizontalVec e1{1.0, 0.0};
    const Point p{0, 0, 1};
    const Point tau0 = left_translate(h, p, e1, 0.0);
    for (int i = 0; i < 3; ++i) CHECK(tau0[i] == p[i]);

    const Point emb = left_translate(h, zero_point(h), e1, 1.0);
    CHECK(emb[0] == 1.0);
    CHECK(emb[1] == 0.0);
    CHECK(emb[2] == 0.0);

    const Point moved = left_translate(h, p, e1, 1.0);
    CHECK(moved[0] == doctest::Approx(1.0));
    CHECK(moved[1] == doctest::Approx(0.0));
    CHECK(moved[2] == doctest::Approx(1.0));
}

TEST_CASE("dimension mismatch reports the offending layer") {
    const GroupSpec& h = registry("heisenberg");
    try {
        multiply(h, Point{1, 2}, Point{1, 2, 3});
        FAIL("expected dimension_error");
    } catch (const dimension_error& e) {
        CHECK(e.layer() >= 1);
        CHECK(std::string(e.what()).find("layer") != std::string::npos);
    }
}

TEST_CASE("spec JSON round trip and registry") {
    const auto names = registry_names();
    CHECK(std::find(names.begin(), names.end(), "heisenberg") != names.end());
    CHECK(std::find(names.begin(), names.end(), "rxh") != names.end());
    CHECK(std::find(names.begin(), names.end(), "engel") != names.end());
    CHECK(std::find(names.begin(), names.end(), "abelian3") != names.end());

    for (const auto& name : names) {
        const GroupSpec& spec = registry(name);
        const GroupSpec back = GroupSpec::from_json(spec.to_json());
        CHECK(back.name() == spec.name());
        CHECK(back.step() == spec.step());
        CHECK(back.layer_dims() == spec.layer_dims());
        CHECK(back.matrices() == spec.matrices());
    }
    CHECK_THROWS_AS(registry("nope"), config_error);
    CHECK_THROWS_AS(GroupSpec::bilinear("bad", 2, 1, {{0, 1, 1, 0}}), config_error);
}
