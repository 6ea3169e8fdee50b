#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "carnot/geodesic.hpp"
#include "carnot/group.hpp"
#include "carnot/probe.hpp"

namespace carnot {

/// Hamiltonian profile Phi: continuous, convex, non-decreasing, Phi(0) = 0.
class PhiSpec {
public:
    enum class Kind { power, quadratic, tabulated };

    static PhiSpec power(double alpha);     // Phi(tau) = tau^alpha / alpha, alpha in (1,2]
    static PhiSpec quadratic();             // Phi(tau) = tau^2 / 2
    static PhiSpec tabulated(std::vector<std::pair<double, double>> table);

    Kind kind() const noexcept { return kind_; }
    double alpha() const noexcept { return alpha_; }
    const std::vector<std::pair<double, double>>& table() const noexcept {
        return table_;
    }

    double value(double tau) const;

private:
    PhiSpec() = default;
    Kind kind_ = Kind::quadratic;
    double alpha_ = 2.0;
    std::vector<std::pair<double, double>> table_;
};

/// Phi*(s) = sup_{tau >= 0} { s tau - Phi(tau) }. Closed form for the power
/// kinds; grid sup with golden-section polish for tabulated profiles.
double legendre_conjugate(const PhiSpec& phi, double s);

/// Initial datum g for the Cauchy problem.
class InitialDatum {
public:
    enum class Kind { constant, distance, capped_distance, cloud_distance };

    static InitialDatum constant(double c);
    static InitialDatum distance();                    // g = d0, unbounded
    static InitialDatum capped_distance(double cap);   // g = min(d0, cap)
    static InitialDatum cloud_distance(std::vector<Point> cloud);

    Kind kind() const noexcept { return kind_; }
    bool bounded() const noexcept { return bounded_; }
    double inf_bound() const noexcept { return inf_; }
    double sup_bound() const noexcept { return sup_; } // finite only if bounded
    /// Lipschitz constant w.r.t. the CC metric (1 for distance kinds).
    double cc_lipschitz() const noexcept { return lipschitz_; }
    double constant_value() const noexcept { return c_; }
    double cap() const noexcept { return cap_; }
    const std::vector<Point>& cloud() const noexcept { return cloud_; }

private:
    InitialDatum() = default;
    Kind kind_ = Kind::constant;
    double c_ = 0.0;
    double cap_ = 0.0;
    std::vector<Point> cloud_;
    bool bounded_ = true;
    double inf_ = 0.0, sup_ = 0.0;
    double lipschitz_ = 0.0;
};

/// Pluggable distance backend: d0 from the identity; pair distances reduce
/// through the group law.
struct DistanceBackend {
    const GroupSpec* spec = nullptr;
    std::string name;
    std::function<double(const Point&)> d0;

    double between(const Point& p, const Point& q) const {
        return d0(multiply(*spec, inverse(*spec, q), p));
    }
};

DistanceBackend make_exact_backend(); // Heisenberg closed form
DistanceBackend make_shoot_backend(const GroupSpec& spec,
                                   const ShootOptions& opts = {});
DistanceBackend make_oracle_backend(const GroupSpec& spec, int segments,
                                    const OracleOptions& opts = {});
DistanceBackend default_backend(const GroupSpec& spec);

double eval_datum(const GroupSpec& spec, const InitialDatum& g,
                  const DistanceBackend& backend, const Point& p);

struct HopfLaxResult {
    double value = 0.0;
    Point argmin;
    double search_radius = 0.0;
    long evaluations = 0;
    double refinement_gap = 0.0;
};

struct HopfLaxOptions {
    int samples = 4096;      // low-discrepancy seeds inside the search ball
    int refine_seeds = 8;    // best seeds refined by a simplex pass
    int refine_evals = 220;
    std::uint64_t seq_index = 1;
    double radius_slack = 1.0; // the "+1" in the radius equation
};

/// Radius R with t Phi*(R/t) = osc(g) + slack for bounded g, or
/// t Phi*(R/t) - Lip R = slack for CC-Lipschitz unbounded g.
double hopf_lax_search_radius(const InitialDatum& g, const PhiSpec& phi, double t,
                              double slack = 1.0);

/// u(t,p) = inf_q [ g(q) + t Phi*(d(p,q)/t) ], minimized inside the search
/// ball with low-discrepancy seeding (gauge pre-filter, exact CC filter) and
/// simplex refinement. Deterministic for fixed options.
HopfLaxResult hopf_lax_value(const GroupSpec& spec, const InitialDatum& g,
                             const PhiSpec& phi, double t, const Point& p,
                             const DistanceBackend& backend,
                             const HopfLaxOptions& opts = {});

/// Deterministic field p -> u(t,p) for probing; the seed cloud and its CC
/// distances are computed once and shared across evaluations.
ScalarField hopf_lax_field(const GroupSpec& spec, const InitialDatum& g,
                           const PhiSpec& phi, double t,
                           const DistanceBackend& backend,
                           const HopfLaxOptions& opts = {});

/// min over the cloud of backend distances d(p, q).
double dist_to_set(const GroupSpec& spec, const std::vector<Point>& cloud,
                   const Point& p, const DistanceBackend& backend);

/// | |grad_H f(p)|_fd - 1 |, the eikonal defect of a presumed distance.
double eikonal_residual(const ScalarField& f, const Point& p, double step);

/// Problem description loaded from JSON; results stream to JSON-lines.
struct HopfLaxProblem {
    std::string group;
    PhiSpec phi = PhiSpec::quadratic();
    InitialDatum g = InitialDatum::constant(0.0);
    std::vector<double> times;
    std::vector<Point> points;
    std::string backend_name; // empty: pick by group
    HopfLaxOptions options;
    bool probe_after = false;
};

HopfLaxProblem load_problem(const std::string& json_text);
std::string result_json_line(const GroupSpec& spec, double t, const Point& p,
                             const HopfLaxResult& r);

} // namespace carnot
