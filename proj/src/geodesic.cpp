#include "carnot/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "carnot/optim.hpp"
#include "carnot/parallel.hpp"

namespace carnot {

double Covector::norm() const {
    double s = 0.0;
    for (double v : xi) s += v * v;
    return std::sqrt(s);
}

namespace {

bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace

void controls_at(const GroupSpec& spec, const double* p, const double* xi,
                 double* u) {
    const int m = spec.n1();
    if (spec.law() == GroupLaw::bilinear) {
        const int off2 = spec.layer_offset(2);
        for (int j = 0; j < m; ++j) u[j] = xi[j];
        const auto& mats = spec.matrices();
        for (std::size_t k = 0; k < mats.size(); ++k) {
            const double xk = xi[off2 + k];
            if (xk == 0.0) continue;
            const double* bk = mats[k].data();
            for (int j = 0; j < m; ++j) {
                double col = 0.0; // (p^T B_k)_j
                for (int i = 0; i < m; ++i) col += p[i] * bk[i * m + j];
                u[j] += xk * col;
            }
        }
        return;
    }
    const double x = p[0], y = p[1], z = p[2];
    u[0] = xi[0] - 0.5 * y * xi[2] - (x * y / 12.0 + 0.5 * z) * xi[3];
    u[1] = xi[1] + 0.5 * x * xi[2] + x * x / 12.0 * xi[3];
}

double hamiltonian(const GroupSpec& spec, const Point& p, const Covector& xi) {
    check_point(spec, p, "hamiltonian");
    if (xi.size() != static_cast<std::size_t>(spec.n()))
        throw dimension_error("hamiltonian: covector dimension mismatch", 0);
    std::vector<double> u(spec.n1());
    controls_at(spec, p.c.data(), xi.xi.data(), u.data());
    double h = 0.0;
    for (double v : u) h += v * v;
    return 0.5 * h;
}

namespace {

// State layout: [p(0..n-1), xi(n..2n-1)].
struct FlowWorkspace {
    const GroupSpec& spec;
    std::vector<double> u, k1, k2, k3, k4, tmp;

    explicit FlowWorkspace(const GroupSpec& s)
        : spec(s), u(s.n1()), k1(2 * s.n()), k2(2 * s.n()), k3(2 * s.n()),
          k4(2 * s.n()), tmp(2 * s.n()) {}

    void rhs(const double* st, double* out) {
        const int n = spec.n();
        const int m = spec.n1();
        const double* p = st;
        const double* xi = st + n;
        controls_at(spec, p, xi, u.data());
        if (spec.law() == GroupLaw::bilinear) {
            const int off2 = spec.layer_offset(2);
            const int n2 = spec.n2();
            for (int j = 0; j < m; ++j) out[j] = u[j];
            const auto& mats = spec.matrices();
            for (int k = 0; k < n2; ++k)
                out[off2 + k] = 0.0;
            std::vector<double>& bu = tmp; // reuse: B_k u scratch per k
            for (int k = 0; k < n2; ++k) {
                const double* bk = mats[k].data();
                double s = 0.0;
                for (int i = 0; i < m; ++i) {
                    double row = 0.0;
                    for (int j = 0; j < m; ++j) row += bk[i * m + j] * u[j];
                    bu[i] = row;
                    s += p[i] * row;
                }
                out[off2 + k] = s; // dp2_k = B_k(p1, u)
                const double xk = xi[off2 + k];
                if (k == 0)
                    for (int i = 0; i < m; ++i) out[n + i] = -xk * bu[i];
                else
                    for (int i = 0; i < m; ++i) out[n + i] -= xk * bu[i];
            }
            if (n2 == 0)
                for (int i = 0; i < m; ++i) out[n + i] = 0.0;
            for (int k = 0; k < n2; ++k) out[n + off2 + k] = 0.0;
            return;
        }
        // Engel: dp = u1 X1 + u2 X2, dxi = -dH/dp.
        const double x = p[0], y = p[1], z = p[2];
        const double u1 = u[0], u2 = u[1];
        out[0] = u1;
        out[1] = u2;
        out[2] = -0.5 * y * u1 + 0.5 * x * u2;
        out[3] = -(x * y / 12.0 + 0.5 * z) * u1 + x * x / 12.0 * u2;
        const double xi3 = xi[2], xi4 = xi[3];
        const double dHx = u1 * (-y / 12.0 * xi4) + u2 * (0.5 * xi3 + x / 6.0 * xi4);
        const double dHy = u1 * (-0.5 * xi3 - x / 12.0 * xi4);
        const double dHz = u1 * (-0.5 * xi4);
        out[4] = -dHx;
        out[5] = -dHy;
        out[6] = -dHz;
        out[7] = 0.0;
    }
};

} // namespace

ExtremalPath flow_extremal(const GroupSpec& spec, const Covector& xi0, int steps) {
    if (steps < 16) throw config_error("flow_extremal: steps must be >= 16");
    if (xi0.size() != static_cast<std::size_t>(spec.n()))
        throw dimension_error("flow_extremal: covector dimension mismatch", 0);
    const int n = spec.n();
    const double dt = 1.0 / steps;

    FlowWorkspace ws(spec);
    std::vector<double> st(2 * n, 0.0);
    for (int i = 0; i < n; ++i) st[n + i] = xi0[i];

    ExtremalPath path;
    path.times.reserve(steps + 1);
    path.points.reserve(steps + 1);
    path.covectors.reserve(steps + 1);

    auto record = [&](double t) {
        path.times.push_back(t);
        path.points.push_back(
            Point(std::vector<double>(st.begin(), st.begin() + n)));
        path.covectors.push_back(
            Covector(std::vector<double>(st.begin() + n, st.end())));
    };
    record(0.0);
    path.energy = hamiltonian(spec, path.points[0], xi0);

    std::vector<double> stage(2 * n);
    for (int step = 0; step < steps; ++step) {
        ws.rhs(st.data(), ws.k1.data());
        for (int i = 0; i < 2 * n; ++i) stage[i] = st[i] + 0.5 * dt * ws.k1[i];
        ws.rhs(stage.data(), ws.k2.data());
        for (int i = 0; i < 2 * n; ++i) stage[i] = st[i] + 0.5 * dt * ws.k2[i];
        ws.rhs(stage.data(), ws.k3.data());
        for (int i = 0; i < 2 * n; ++i) stage[i] = st[i] + dt * ws.k3[i];
        ws.rhs(stage.data(), ws.k4.data());
        for (int i = 0; i < 2 * n; ++i)
            st[i] += dt / 6.0 *
                     (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
        const double t = (step + 1) * dt;
        for (double v : st)
            if (!std::isfinite(v))
                throw divergence_error("flow_extremal: non-finite state", t);
        record(t);
    }

    double drift = 0.0;
    for (std::size_t i = 0; i < path.times.size(); ++i)
        drift = std::max(drift, std::fabs(hamiltonian(spec, path.points[i],
                                                      path.covectors[i]) -
                                          path.energy));
    path.hamiltonian_drift = drift;
    return path;
}

namespace {

// Endpoint-only flow, no path recording.
void flow_endpoint(FlowWorkspace& ws, const std::vector<double>& xi0, int steps,
                   std::vector<double>& st) {
    const int n = ws.spec.n();
    const double dt = 1.0 / steps;
    st.assign(2 * n, 0.0);
    for (int i = 0; i < n; ++i) st[n + i] = xi0[i];
    std::vector<double> stage(2 * n);
    for (int step = 0; step < steps; ++step) {
        ws.rhs(st.data(), ws.k1.data());
        for (int i = 0; i < 2 * n; ++i) stage[i] = st[i] + 0.5 * dt * ws.k1[i];
        ws.rhs(stage.data(), ws.k2.data());
        for (int i = 0; i < 2 * n; ++i) stage[i] = st[i] + 0.5 * dt * ws.k2[i];
        ws.rhs(stage.data(), ws.k3.data());
        for (int i = 0; i < 2 * n; ++i) stage[i] = st[i] + dt * ws.k3[i];
        ws.rhs(stage.data(), ws.k4.data());
        for (int i = 0; i < 2 * n; ++i)
            st[i] += dt / 6.0 *
                     (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}

} // namespace

Point endpoint_map(const GroupSpec& spec, const PiecewiseControls& controls,
                   const Point& p0) {
    check_point(spec, p0, "endpoint_map");
    const int m = spec.n1();
    if (controls.segments < 1)
        throw config_error("endpoint_map: need at least one control interval");
    if (controls.u.size() != static_cast<std::size_t>(controls.segments) * m)
        throw dimension_error("endpoint_map: controls do not match n1", 1);
    const double dt = 1.0 / controls.segments;
    Point p = p0;
    HorizontalVec step(std::vector<double>(m, 0.0));
    for (int s = 0; s < controls.segments; ++s) {
        for (int j = 0; j < m; ++j) step[j] = controls.value(s, j, m) * dt;
        p = multiply(spec, p, embed(spec, step));
    }
    return p;
}

ShootingResult shoot_distance(const GroupSpec& spec, const Point& q,
                              const ShootOptions& opts) {
    check_point(spec, q, "shoot_distance");
    const int n = spec.n();

    double qnorm = 0.0;
    for (double v : q.c) qnorm += v * v;
    qnorm = std::sqrt(qnorm);
    if (qnorm == 0.0) {
        ShootingResult r;
        r.best_covector = Covector(std::vector<double>(n, 0.0));
        r.search_radius = opts.initial_radius;
        return r;
    }

    const double gap = opts.accept_rel * (1.0 + qnorm);
    const double coarse_gate = opts.coarse_gate_rel * (1.0 + qnorm);
    double radius = opts.initial_radius > 0.0
                        ? opts.initial_radius
                        : 2.0 * n * homogeneous_norm(spec, q);

    struct Candidate {
        std::vector<double> xi;
        double resid = std::numeric_limits<double>::infinity();
        double energy = std::numeric_limits<double>::infinity();
        bool ok = false;
    };

    auto residual_obj = [&](int steps) {
        return [&spec, &q, steps](const std::vector<double>& xi) {
            FlowWorkspace ws(spec);
            std::vector<double> st;
            flow_endpoint(ws, xi, steps, st);
            double s = 0.0;
            for (int i = 0; i < spec.n(); ++i) {
                if (!std::isfinite(st[i])) return 1e100;
                const double d = st[i] - q[i];
                s += d * d;
            }
            return s;
        };
    };
    const auto coarse_obj = residual_obj(opts.coarse_steps);
    const auto fine_obj = residual_obj(opts.fine_steps);

    auto first_layer_energy = [&](const std::vector<double>& xi) {
        double e = 0.0;
        for (int j = 0; j < spec.n1(); ++j) e += xi[j] * xi[j];
        return 0.5 * e;
    };

    ShootingResult best;
    best.distance = std::numeric_limits<double>::infinity();
    best.terminal_residual = std::numeric_limits<double>::infinity();
    double best_failed_resid = std::numeric_limits<double>::infinity();
    double prev_round_d = std::numeric_limits<double>::quiet_NaN();
    int starts_tried = 0;

    for (int round = 0; round <= opts.max_doublings; ++round) {
        std::vector<Candidate> cands(opts.starts);
        const std::uint64_t base =
            opts.seq_index + static_cast<std::uint64_t>(round) * opts.starts;
        parallel_for(opts.starts, [&](std::size_t s) {
            Candidate& c = cands[s];
            std::vector<double> xi0 = optim::ball_point(base + s, n, radius);
            optim::NelderMeadOptions nm;
            nm.max_evals = 320;
            nm.init_scale = std::max(0.05, 0.02 * radius);
            nm.f_tol = 1e-18;
            nm.x_tol = 1e-10;
            auto r = optim::nelder_mead(coarse_obj, xi0, nm);
            c.xi = r.x;
            c.resid = std::sqrt(std::max(0.0, r.f));
            c.energy = first_layer_energy(r.x);
            c.ok = c.resid <= coarse_gate;
        });
        starts_tried += opts.starts;

        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (cands[i].ok)
                order.push_back(i);
            else
                best_failed_resid = std::min(best_failed_resid, cands[i].resid);
        }
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                         std::size_t b) {
            return cands[a].energy < cands[b].energy;
        });
        if (order.size() > static_cast<std::size_t>(opts.polish_candidates))
            order.resize(opts.polish_candidates);

        std::vector<Candidate> polished(order.size());
        parallel_for(order.size(), [&](std::size_t i) {
            const Candidate& c = cands[order[i]];
            optim::NelderMeadOptions nm;
            nm.max_evals = 700;
            double xin = 0.0;
            for (double v : c.xi) xin = std::max(xin, std::fabs(v));
            nm.init_scale = 1e-3 * (1.0 + xin);
            nm.f_tol = 1e-24;
            nm.x_tol = 1e-13;
            auto r = optim::nelder_mead(fine_obj, c.xi, nm);
            Candidate& p = polished[i];
            p.xi = r.x;
            p.resid = std::sqrt(std::max(0.0, r.f));
            p.energy = first_layer_energy(r.x);
            p.ok = p.resid <= gap;
        });

        bool round_found = false;
        double round_d = std::numeric_limits<double>::infinity();
        for (const Candidate& c : polished) {
            if (!c.ok) {
                best_failed_resid = std::min(best_failed_resid, c.resid);
                continue;
            }
            round_found = true;
            const double d = std::sqrt(2.0 * c.energy);
            round_d = std::min(round_d, d);
            const double dn = Covector(c.xi).norm();
            const double bn = best.best_covector.xi.empty()
                                  ? std::numeric_limits<double>::infinity()
                                  : best.best_covector.norm();
            const bool better =
                d < best.distance ||
                (d == best.distance &&
                 (dn < bn || (dn == bn && lex_less(c.xi, best.best_covector.xi))));
            if (better) {
                best.distance = d;
                best.best_covector = Covector(c.xi);
                best.terminal_residual = c.resid;
                best.search_radius = radius;
            }
        }

        if (round_found && !std::isnan(prev_round_d)) {
            const double rel = std::fabs(round_d - prev_round_d) /
                               std::max({round_d, prev_round_d, 1e-300});
            if (rel <= opts.stabilization_rel) break;
        }
        if (round_found) prev_round_d = round_d;
        radius *= 2.0;
    }

    best.starts_tried = starts_tried;
    if (!std::isfinite(best.distance))
        throw unreached_target("shoot_distance: no start reached the target",
                               best_failed_resid);
    return best;
}

double control_oracle_distance(const GroupSpec& spec, const Point& q,
                               int segments, const OracleOptions& opts) {
    check_point(spec, q, "control_oracle_distance");
    if (segments < 4 || segments > 64)
        throw config_error("control_oracle_distance: segments must be in [4, 64]");
    const int m = spec.n1();
    const int n = spec.n();
    const int dim = segments * m;
    const double dt = 1.0 / segments;

    auto endpoint_of = [&](const std::vector<double>& u) {
        PiecewiseControls c{segments, u};
        return endpoint_map(spec, c, zero_point(spec));
    };
    auto resid2_to = [&](const std::vector<double>& u, const Point& target) {
        const Point e = endpoint_of(u);
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = e[i] - target[i];
            s += d * d;
        }
        return s;
    };
    auto energy2 = [&](const std::vector<double>& u) { // sum |u_k|^2 dt = 2J
        double s = 0.0;
        for (double v : u) s += v * v;
        return s * dt;
    };

    auto solve_dense = [](std::vector<double>& a, std::vector<double>& b, int N) {
        for (int col = 0; col < N; ++col) {
            int piv = col;
            for (int row = col + 1; row < N; ++row)
                if (std::fabs(a[row * N + col]) > std::fabs(a[piv * N + col]))
                    piv = row;
            for (int j = 0; j < N; ++j) std::swap(a[col * N + j], a[piv * N + j]);
            std::swap(b[col], b[piv]);
            const double d = a[col * N + col];
            if (d == 0.0) return false;
            for (int row = col + 1; row < N; ++row) {
                const double f = a[row * N + col] / d;
                if (f == 0.0) continue;
                for (int j = col; j < N; ++j) a[row * N + j] -= f * a[col * N + j];
                b[row] -= f * b[col];
            }
        }
        for (int col = N - 1; col >= 0; --col) {
            for (int j = col + 1; j < N; ++j) b[col] -= a[col * N + j] * b[j];
            b[col] /= a[col * N + col];
        }
        return true;
    };

    // Newton on the KKT system of  min sum|u_k|^2 dt  s.t. E(u) = target,
    // warm-started from the continuation multipliers. The endpoint map is
    // polynomial in the controls, so the central-difference Hessian of
    // lam^T E is exact to roundoff.
    auto kkt_polish = [&](std::vector<double>& u, std::vector<double> lam,
                          const Point& target) -> double {
        const int N = dim + n;
        auto fill_jac = [&](const std::vector<double>& v, std::vector<double>& J) {
            std::vector<double> vp = v;
            for (int c = 0; c < dim; ++c) {
                const double h = 1e-6 * std::max(1.0, std::fabs(v[c]));
                vp[c] = v[c] + h;
                const Point ep = endpoint_of(vp);
                vp[c] = v[c] - h;
                const Point em = endpoint_of(vp);
                vp[c] = v[c];
                for (int i = 0; i < n; ++i)
                    J[i * dim + c] = (ep[i] - em[i]) / (2.0 * h);
            }
        };
        auto sys_norm = [&](const std::vector<double>& v,
                            const std::vector<double>& ll) {
            std::vector<double> J(n * dim);
            fill_jac(v, J);
            const Point e = endpoint_of(v);
            double s = 0.0;
            for (int c = 0; c < dim; ++c) {
                double g = 2.0 * dt * v[c];
                for (int i = 0; i < n; ++i) g += J[i * dim + c] * ll[i];
                s += g * g;
            }
            for (int i = 0; i < n; ++i) {
                const double ri = e[i] - target[i];
                s += ri * ri;
            }
            return std::sqrt(s);
        };

        double fnorm = sys_norm(u, lam);
        double damp = 1e-8;
        std::vector<double> jacb(n * dim), hess(dim * dim);
        for (int it = 0; it < 40 && fnorm > 1e-12; ++it) {
            fill_jac(u, jacb);
            auto phi = [&](const std::vector<double>& v) {
                const Point e = endpoint_of(v);
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += lam[i] * e[i];
                return s;
            };
            const double h0 = 1e-3;
            const double phi0 = phi(u);
            std::vector<double> vp = u;
            for (int c = 0; c < dim; ++c) {
                vp[c] = u[c] + h0;
                const double fp = phi(vp);
                vp[c] = u[c] - h0;
                const double fm = phi(vp);
                vp[c] = u[c];
                hess[c * dim + c] = (fp - 2.0 * phi0 + fm) / (h0 * h0);
            }
            for (int c1 = 0; c1 < dim; ++c1)
                for (int c2 = c1 + 1; c2 < dim; ++c2) {
                    vp[c1] = u[c1] + h0;
                    vp[c2] = u[c2] + h0;
                    const double fpp = phi(vp);
                    vp[c2] = u[c2] - h0;
                    const double fpm = phi(vp);
                    vp[c1] = u[c1] - h0;
                    const double fmm = phi(vp);
                    vp[c2] = u[c2] + h0;
                    const double fmp = phi(vp);
                    vp[c1] = u[c1];
                    vp[c2] = u[c2];
                    const double v2 = (fpp - fpm - fmp + fmm) / (4.0 * h0 * h0);
                    hess[c1 * dim + c2] = v2;
                    hess[c2 * dim + c1] = v2;
                }

            std::vector<double> K(N * N, 0.0), rhs(N, 0.0);
            for (int c1 = 0; c1 < dim; ++c1) {
                for (int c2 = 0; c2 < dim; ++c2) K[c1 * N + c2] = hess[c1 * dim + c2];
                K[c1 * N + c1] += 2.0 * dt + damp;
            }
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < dim; ++c) {
                    K[(dim + i) * N + c] = jacb[i * dim + c];
                    K[c * N + dim + i] = jacb[i * dim + c];
                }
            const Point e = endpoint_of(u);
            for (int c = 0; c < dim; ++c) {
                double g = 2.0 * dt * u[c];
                for (int i = 0; i < n; ++i) g += jacb[i * dim + c] * lam[i];
                rhs[c] = -g;
            }
            for (int i = 0; i < n; ++i) rhs[dim + i] = target[i] - e[i];
            if (!solve_dense(K, rhs, N)) break;

            bool accepted = false;
            double alpha = 1.0;
            for (int ls = 0; ls < 10; ++ls) {
                std::vector<double> ut(dim), lt(n);
                for (int c = 0; c < dim; ++c) ut[c] = u[c] + alpha * rhs[c];
                for (int i = 0; i < n; ++i) lt[i] = lam[i] + alpha * rhs[dim + i];
                const double fn = sys_norm(ut, lt);
                if (fn < fnorm * (1.0 - 1e-4 * alpha)) {
                    u = std::move(ut);
                    lam = std::move(lt);
                    fnorm = fn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (accepted) {
                damp = std::max(damp / 3.0, 1e-12);
            } else {
                damp *= 10.0;
                if (damp > 1e4) break;
            }
        }
        return std::sqrt(resid2_to(u, target));
    };

    // Quadratic-penalty continuation with multiplier shifts toward `target`,
    // followed by damped minimum-norm Gauss-Newton restoration of the
    // endpoint residual. Updates u in place, returns the final residual.
    auto solve_to = [&](std::vector<double>& u, const Point& target,
                        int stages) {
        std::vector<double> shift(n, 0.0);
        double rho = opts.rho_init;
        for (int stage = 0; stage < stages; ++stage) {
            auto pen = [&](const std::vector<double>& v) {
                const Point e = endpoint_of(v);
                double s = energy2(v);
                for (int i = 0; i < n; ++i) {
                    const double ri = e[i] - target[i];
                    s += shift[i] * ri + rho * ri * ri;
                }
                return s;
            };
            optim::LbfgsOptions lb;
            lb.max_iters = opts.inner_iters;
            lb.g_tol = 1e-11;
            auto res = optim::lbfgs(pen, optim::fd_gradient(pen, 1e-6), u, lb);
            u = res.x;
            const Point e = endpoint_of(u);
            double rn = 0.0;
            for (int i = 0; i < n; ++i) {
                const double ri = e[i] - target[i];
                shift[i] += 2.0 * rho * ri;
                rn += ri * ri;
            }
            if (std::sqrt(rn) <= 1e-10 && stage >= 3) break;
            rho = std::min(rho * 4.0, opts.rho_max);
        }
        // Restoration: the continuation leaves a feasibility gap; close it by
        // min-norm Gauss-Newton steps with Levenberg damping (the endpoint
        // Jacobian loses rank near abnormal controls).
        std::vector<double> jac(n * dim);
        double damping = 1e-10;
        for (int it = 0; it < 25; ++it) {
            const Point e = endpoint_of(u);
            std::vector<double> rvec(n);
            double rnorm2 = 0.0;
            for (int i = 0; i < n; ++i) {
                rvec[i] = e[i] - target[i];
                rnorm2 += rvec[i] * rvec[i];
            }
            if (std::sqrt(rnorm2) <= 1e-11) break;
            std::vector<double> up = u;
            for (int c = 0; c < dim; ++c) {
                const double h = 1e-6 * std::max(1.0, std::fabs(u[c]));
                up[c] = u[c] + h;
                const Point ep = endpoint_of(up);
                up[c] = u[c] - h;
                const Point em = endpoint_of(up);
                up[c] = u[c];
                for (int i = 0; i < n; ++i)
                    jac[i * dim + c] = (ep[i] - em[i]) / (2.0 * h);
            }
            auto try_step = [&](double damp, std::vector<double>& out) {
                std::vector<double> a(n * n, 0.0), lam(rvec);
                double tr = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        double s = 0.0;
                        for (int c = 0; c < dim; ++c)
                            s += jac[i * dim + c] * jac[j * dim + c];
                        a[i * n + j] = s;
                        if (i == j) tr += s;
                    }
                for (int i = 0; i < n; ++i)
                    a[i * n + i] += damp * std::max(tr / n, 1e-30);
                for (int col = 0; col < n; ++col) {
                    int piv = col;
                    for (int row = col + 1; row < n; ++row)
                        if (std::fabs(a[row * n + col]) >
                            std::fabs(a[piv * n + col]))
                            piv = row;
                    for (int j = 0; j < n; ++j)
                        std::swap(a[col * n + j], a[piv * n + j]);
                    std::swap(lam[col], lam[piv]);
                    for (int row = col + 1; row < n; ++row) {
                        const double f = a[row * n + col] / a[col * n + col];
                        for (int j = col; j < n; ++j)
                            a[row * n + j] -= f * a[col * n + j];
                        lam[row] -= f * lam[col];
                    }
                }
                for (int col = n - 1; col >= 0; --col) {
                    for (int j = col + 1; j < n; ++j)
                        lam[col] -= a[col * n + j] * lam[j];
                    lam[col] /= a[col * n + col];
                }
                out = u;
                for (int c = 0; c < dim; ++c) {
                    double s = 0.0;
                    for (int i = 0; i < n; ++i) s += jac[i * dim + c] * lam[i];
                    out[c] -= s;
                }
            };
            bool moved = false;
            for (int attempt = 0; attempt < 8; ++attempt) {
                std::vector<double> trial;
                try_step(damping, trial);
                if (resid2_to(trial, target) < rnorm2) {
                    u = std::move(trial);
                    damping = std::max(damping * 0.25, 1e-12);
                    moved = true;
                    break;
                }
                damping *= 10.0;
            }
            if (!moved) break;
        }
        double rfin = std::sqrt(resid2_to(u, target));
        // Near abnormal controls the remaining residual sits in a direction
        // the Jacobian misses; Newton on the KKT system picks up the
        // constraint curvature and threads it.
        if (rfin > 1e-9) rfin = kkt_polish(u, shift, target);
        return rfin;
    };

    const double scale = std::max(1.0, homogeneous_norm(spec, q));
    std::vector<std::vector<double>> results(opts.restarts,
                                             std::vector<double>(2, 0.0));
    parallel_for(opts.restarts, [&](std::size_t r) {
        std::vector<double> u(dim, 0.0);
        for (int s = 0; s < segments; ++s)
            for (int j = 0; j < m; ++j) u[s * m + j] = q[j];
        if (r > 0) {
            const std::uint64_t base =
                opts.seq_index + (static_cast<std::uint64_t>(r) - 1) * dim;
            for (int i = 0; i < dim; ++i)
                u[i] += 0.35 * scale *
                        optim::norminv(optim::halton(base + i, 1)[0]);
        }
        double rr = solve_to(u, q, 14);
        if (rr > opts.target_residual) {
            // Fold in the endpoint image: approach q through a homotopy of
            // targets from a trivially feasible endpoint, warm-starting each
            // leg from the previous solution.
            std::vector<double> uh(dim, 0.0);
            for (int s = 0; s < segments; ++s)
                for (int j = 0; j < m; ++j) uh[s * m + j] = q[j];
            const Point base_pt = endpoint_of(uh);
            for (double tfrac : {0.25, 0.5, 0.75, 1.0}) {
                Point target = q;
                for (int i = 0; i < n; ++i)
                    target[i] = (1.0 - tfrac) * base_pt[i] + tfrac * q[i];
                solve_to(uh, target, tfrac == 1.0 ? 14 : 8);
            }
            const double rh = std::sqrt(resid2_to(uh, q));
            if (rh < rr ||
                (rh <= opts.target_residual && energy2(uh) < energy2(u))) {
                u = std::move(uh);
                rr = rh;
            }
        }
        results[r][0] = rr;
        results[r][1] = std::sqrt(energy2(u));
    });

    double best_d = std::numeric_limits<double>::infinity();
    double best_resid = std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
        if (r[0] <= opts.target_residual) best_d = std::min(best_d, r[1]);
        best_resid = std::min(best_resid, r[0]);
    }
    if (!std::isfinite(best_d))
        throw oracle_failure(
            "control_oracle_distance: penalty continuation did not reach the "
            "endpoint residual",
            best_resid);
    return best_d;
}

void write_path_csv(const ExtremalPath& path, const std::string& filename) {
    std::FILE* f = std::fopen(filename.c_str(), "wb");
    if (!f) throw config_error("write_path_csv: cannot open " + filename);
    const std::size_t n = path.points.empty() ? 0 : path.points[0].size();
    std::fprintf(f, "t");
    for (std::size_t i = 1; i <= n; ++i) std::fprintf(f, ",p_%zu", i);
    for (std::size_t i = 1; i <= n; ++i) std::fprintf(f, ",xi_%zu", i);
    std::fprintf(f, "\n");
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        std::fprintf(f, "%.17g", path.times[k]);
        for (std::size_t i = 0; i < n; ++i)
            std::fprintf(f, ",%.17g", path.points[k][i]);
        for (std::size_t i = 0; i < n; ++i)
            std::fprintf(f, ",%.17g", path.covectors[k][i]);
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

} // namespace carnot
