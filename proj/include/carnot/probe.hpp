#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "carnot/geodesic.hpp"
#include "carnot/group.hpp"

namespace carnot {

/// A deterministic scalar function on a group (closed-form, solver-backed or
/// a composition). Solver-backed fields pin their seeds at construction.
struct ScalarField {
    const GroupSpec* spec = nullptr;
    std::string name;
    std::function<double(const Point&)> eval;

    double operator()(const Point& p) const { return eval(p); }
};

/// Group-translated second difference f(p.h) + f(p.h^{-1}) - 2 f(p).
double second_diff(const ScalarField& f, const Point& p, const HorizontalVec& h);

enum class Verdict { bounded, blowup, inconclusive };
const char* to_string(Verdict v);

struct ProbeSample {
    std::size_t point_index = 0;
    std::size_t dir_index = 0;
    Point p;
    HorizontalVec h;
    double level = 0.0; // |h|
    double second_diff = 0.0;
    double quotient2 = 0.0; // second_diff / |h|^2
    double quotient1 = 0.0; // second_diff / |h|
    bool failed = false;
};

struct ProbeReport {
    std::vector<ProbeSample> samples;
    std::vector<std::pair<double, double>> per_scale_sup; // (|h| level, sup q2)
    Verdict verdict = Verdict::inconclusive;
    std::size_t failed_evals = 0;
    std::size_t total_evals = 0;
    std::string field_name;
    std::string config_echo; // JSON

    std::string to_json() const;
    void write_csv(const std::string& filename) const;
};

struct ScanConfig {
    std::vector<Point> grid;
    std::vector<double> ladder = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    std::vector<HorizontalVec> dirs;
    double tolerated_failure_fraction = 0.01;
    double stabilization_tol = 0.10; // bounded: last two sups within 10%
    double blowup_factor = 2.0;      // blowup: |sup| at least doubles per level
};

/// Fills samples and per-scale suprema of quotient2 over grid x dirs, and
/// classifies: bounded when the two finest sups agree to stabilization_tol,
/// blowup when |sup| grows at least blowup_factor level-over-level.
ProbeReport semiconcavity_scan(const ScalarField& f, const ScanConfig& config);

/// n1 coordinate axes plus n_random extra unit directions (pinned stream).
std::vector<HorizontalVec> default_directions(const GroupSpec& spec,
                                              int n_random = 8,
                                              std::uint64_t seq_index = 41);

struct FirstOrderLimit {
    double limit = 0.0;          // Richardson-extrapolated quotient1
    double error_estimate = 0.0; // magnitude of the last extrapolation update
    bool inconclusive = false;   // raw quotient sequence not monotone
    std::vector<double> quotients;
};

FirstOrderLimit first_order_limit(const ScalarField& f, const Point& p,
                                  const HorizontalVec& dir,
                                  const std::vector<double>& ladder);

/// Central second differences along group-translated horizontal rays;
/// off-diagonal entries from the polarization identity. Flat m x m, row-major.
std::vector<double> fd_horizontal_hessian(const ScalarField& f, const Point& p,
                                          double step);

/// Horizontal gradient by central group differences (component i along e_i).
std::vector<double> fd_horizontal_gradient(const ScalarField& f, const Point& p,
                                           double step);

ScalarField compose_with_psi(const std::function<double(double)>& psi,
                             const ScalarField& f_dist, const std::string& name);

/// Built-in fields.
ScalarField field_d0sq_exact();             // Heisenberg closed form
ScalarField field_d0_exact();               // sqrt of the closed form
ScalarField field_negate(const ScalarField& f);
ScalarField field_shoot_d0(const GroupSpec& spec, const ShootOptions& opts = {});
ScalarField field_oracle_d0(const GroupSpec& spec, int segments,
                            const OracleOptions& opts = {});
/// Thread-safe exact-key memoization (for expensive solver-backed fields).
ScalarField field_memoized(const ScalarField& f);

} // namespace carnot
