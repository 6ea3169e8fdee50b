#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "carnot/group.hpp"

namespace carnot {

/// Dual coordinates at a base point, identified with R^n.
struct Covector {
    std::vector<double> xi;

    Covector() = default;
    explicit Covector(std::vector<double> v) : xi(std::move(v)) {}
    Covector(std::initializer_list<double> v) : xi(v) {}

    std::size_t size() const noexcept { return xi.size(); }
    double operator[](std::size_t i) const { return xi[i]; }
    double& operator[](std::size_t i) { return xi[i]; }
    double norm() const;
};

/// A sampled normal extremal: point + covector per node on [0,1].
struct ExtremalPath {
    std::vector<double> times;
    std::vector<Point> points;
    std::vector<Covector> covectors;
    double energy = 0.0;            // H(0); equals the path energy J
    double hamiltonian_drift = 0.0; // max |H(t) - H(0)| over nodes
};

/// H(p, xi) = 1/2 sum_j <xi, X_j(p)>^2.
double hamiltonian(const GroupSpec& spec, const Point& p, const Covector& xi);

/// Controls u_j(t) = <xi, X_j(p)>.
void controls_at(const GroupSpec& spec, const double* p, const double* xi,
                 double* u);

/// Classical fixed-step RK4 integration of the Hamilton equations from
/// (0, xi0) on [0,1]. Throws divergence_error (with the offending time) if
/// the state leaves the finite range.
ExtremalPath flow_extremal(const GroupSpec& spec, const Covector& xi0, int steps);

/// Piecewise-constant control on a uniform grid: segments x n1, row-major.
struct PiecewiseControls {
    int segments = 0;
    std::vector<double> u;

    double value(int seg, int j, int n1) const { return u[seg * n1 + j]; }
};

/// Terminal point of the horizontal curve driven by u from p0. Constant
/// controls flow along one-parameter subgroups, so each interval is a single
/// exact group step.
Point endpoint_map(const GroupSpec& spec, const PiecewiseControls& controls,
                   const Point& p0);

struct ShootOptions {
    int starts = 64;           // multi-start count per radius round
    int coarse_steps = 160;    // flow steps during the search phase
    int fine_steps = 1536;     // flow steps during polish
    int polish_candidates = 8; // best coarse candidates refined to the gap
    int max_doublings = 4;     // search radius doublings
    double accept_rel = 1e-8;  // terminal residual gap, relative to 1 + |q|
    double coarse_gate_rel = 1e-3;
    double stabilization_rel = 1e-6;
    double initial_radius = 0.0; // 0: use 2 * n * |q|_G
    std::uint64_t seq_index = 1; // low-discrepancy stream offset
};

struct ShootingResult {
    double distance = 0.0;
    Covector best_covector;
    double terminal_residual = 0.0;
    int starts_tried = 0;
    double search_radius = 0.0;
};

/// Multi-start shooting for d(0, q): covectors are sampled in a ball whose
/// radius doubles until the best distance stabilizes; each start runs a
/// simplex minimization of the terminal residual, and accepted starts are
/// reduced by min sqrt(2 * energy) with a deterministic tie-break.
ShootingResult shoot_distance(const GroupSpec& spec, const Point& q,
                              const ShootOptions& opts = {});

struct OracleOptions {
    int restarts = 8;
    double target_residual = 1e-6;
    double rho_init = 10.0;
    double rho_max = 1e8;
    int inner_iters = 120;
    std::uint64_t seq_index = 977; // perturbation stream
};

/// Independent distance estimate: minimizes sum |u_k|^2 dt over
/// piecewise-constant controls subject to endpoint_map = q, by quadratic
/// penalty continuation with an L-BFGS inner loop and pinned random
/// restarts. Returns the best sqrt(2 * energy).
double control_oracle_distance(const GroupSpec& spec, const Point& q,
                               int segments, const OracleOptions& opts = {});

/// CSV dump: t, p_1..p_n, xi_1..xi_n per node.
void write_path_csv(const ExtremalPath& path, const std::string& filename);

} // namespace carnot
