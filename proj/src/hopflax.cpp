#include "carnot/hopflax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "json.hpp"

#include "carnot/heisenberg.hpp"
#include "carnot/optim.hpp"
#include "carnot/parallel.hpp"

namespace carnot {

PhiSpec PhiSpec::power(double alpha) {
    if (!(alpha > 1.0 && alpha <= 2.0))
        throw config_error("PhiSpec::power: alpha must lie in (1, 2]");
    PhiSpec p;
    p.kind_ = Kind::power;
    p.alpha_ = alpha;
    return p;
}

PhiSpec PhiSpec::quadratic() {
    PhiSpec p;
    p.kind_ = Kind::quadratic;
    return p;
}

PhiSpec PhiSpec::tabulated(std::vector<std::pair<double, double>> table) {
    if (table.size() < 2) throw config_error("PhiSpec::tabulated: need >= 2 nodes");
    if (table.front().first != 0.0 || table.front().second != 0.0)
        throw config_error("PhiSpec::tabulated: grid must start at (0, 0)");
    for (std::size_t i = 1; i < table.size(); ++i) {
        if (!(table[i].first > table[i - 1].first))
            throw config_error("PhiSpec::tabulated: grid abscissae must increase");
        if (table[i].second < table[i - 1].second)
            throw config_error("PhiSpec::tabulated: profile must be non-decreasing");
    }
    // Convexity via slope monotonicity, tolerance 1e-10.
    double prev_slope = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < table.size(); ++i) {
        const double slope = (table[i].second - table[i - 1].second) /
                             (table[i].first - table[i - 1].first);
        if (slope < prev_slope - 1e-10)
            throw config_error("PhiSpec::tabulated: profile is not convex");
        prev_slope = std::max(prev_slope, slope);
    }
    PhiSpec p;
    p.kind_ = Kind::tabulated;
    p.table_ = std::move(table);
    return p;
}

double PhiSpec::value(double tau) const {
    if (tau < 0.0) throw domain_error("PhiSpec::value: negative argument");
    switch (kind_) {
        case Kind::quadratic:
            return 0.5 * tau * tau;
        case Kind::power:
            return std::pow(tau, alpha_) / alpha_;
        case Kind::tabulated: {
            if (tau >= table_.back().first) {
                // Extend linearly with the last slope.
                const auto& a = table_[table_.size() - 2];
                const auto& b = table_.back();
                const double slope = (b.second - a.second) / (b.first - a.first);
                return b.second + slope * (tau - b.first);
            }
            auto it = std::upper_bound(
                table_.begin(), table_.end(), tau,
                [](double v, const std::pair<double, double>& n) {
                    return v < n.first;
                });
            const auto& b = *it;
            const auto& a = *(it - 1);
            const double w = (tau - a.first) / (b.first - a.first);
            return a.second + w * (b.second - a.second);
        }
    }
    return 0.0;
}

double legendre_conjugate(const PhiSpec& phi, double s) {
    if (s < 0.0) throw domain_error("legendre_conjugate: s must be >= 0");
    switch (phi.kind()) {
        case PhiSpec::Kind::quadratic:
            return 0.5 * s * s;
        case PhiSpec::Kind::power: {
            const double beta = phi.alpha() / (phi.alpha() - 1.0);
            return std::pow(s, beta) / beta;
        }
        case PhiSpec::Kind::tabulated: {
            const auto& tab = phi.table();
            double best = 0.0;
            std::size_t ibest = 0;
            for (std::size_t i = 0; i < tab.size(); ++i) {
                const double v = s * tab[i].first - tab[i].second;
                if (v > best) {
                    best = v;
                    ibest = i;
                }
            }
            // Golden-section polish between the neighbours of the best node.
            const double lo = tab[ibest > 0 ? ibest - 1 : 0].first;
            const double hi = tab[std::min(ibest + 1, tab.size() - 1)].first;
            if (hi > lo) {
                const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
                double a = lo, b = hi;
                double c = b - gr * (b - a), d = a + gr * (b - a);
                auto f = [&](double tau) { return s * tau - phi.value(tau); };
                double fc = f(c), fd = f(d);
                for (int it = 0; it < 60 && b - a > 1e-12 * (1.0 + hi); ++it) {
                    if (fc > fd) {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - gr * (b - a);
                        fc = f(c);
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + gr * (b - a);
                        fd = f(d);
                    }
                }
                best = std::max(best, std::max(fc, fd));
            }
            return std::max(best, 0.0);
        }
    }
    return 0.0;
}

InitialDatum InitialDatum::constant(double c) {
    InitialDatum g;
    g.kind_ = Kind::constant;
    g.c_ = c;
    g.bounded_ = true;
    g.inf_ = g.sup_ = c;
    g.lipschitz_ = 0.0;
    return g;
}

InitialDatum InitialDatum::distance() {
    InitialDatum g;
    g.kind_ = Kind::distance;
    g.bounded_ = false;
    g.inf_ = 0.0;
    g.sup_ = std::numeric_limits<double>::infinity();
    g.lipschitz_ = 1.0;
    return g;
}

InitialDatum InitialDatum::capped_distance(double cap) {
    if (!(cap > 0.0)) throw config_error("capped_distance: cap must be positive");
    InitialDatum g;
    g.kind_ = Kind::capped_distance;
    g.cap_ = cap;
    g.bounded_ = true;
    g.inf_ = 0.0;
    g.sup_ = cap;
    g.lipschitz_ = 1.0;
    return g;
}

InitialDatum InitialDatum::cloud_distance(std::vector<Point> cloud) {
    if (cloud.empty()) throw domain_error("cloud_distance: empty point set");
    InitialDatum g;
    g.kind_ = Kind::cloud_distance;
    g.cloud_ = std::move(cloud);
    g.bounded_ = false;
    g.inf_ = 0.0;
    g.sup_ = std::numeric_limits<double>::infinity();
    g.lipschitz_ = 1.0;
    return g;
}

DistanceBackend make_exact_backend() {
    DistanceBackend b;
    b.spec = &registry("heisenberg");
    b.name = "exact";
    b.d0 = [](const Point& p) { return heis::d0_exact(p); };
    return b;
}

DistanceBackend make_shoot_backend(const GroupSpec& spec, const ShootOptions& opts) {
    DistanceBackend b;
    b.spec = &spec;
    b.name = "shoot";
    ScalarField f = field_memoized(field_shoot_d0(spec, opts));
    b.d0 = f.eval;
    return b;
}

DistanceBackend make_oracle_backend(const GroupSpec& spec, int segments,
                                    const OracleOptions& opts) {
    DistanceBackend b;
    b.spec = &spec;
    b.name = "oracle";
    ScalarField f = field_memoized(field_oracle_d0(spec, segments, opts));
    b.d0 = f.eval;
    return b;
}

DistanceBackend default_backend(const GroupSpec& spec) {
    if (spec.name() == "heisenberg") return make_exact_backend();
    if (spec.law() == GroupLaw::engel) return make_oracle_backend(spec, 32);
    return make_shoot_backend(spec);
}

double eval_datum(const GroupSpec& spec, const InitialDatum& g,
                  const DistanceBackend& backend, const Point& p) {
    switch (g.kind()) {
        case InitialDatum::Kind::constant:
            return g.constant_value();
        case InitialDatum::Kind::distance:
            return backend.d0(p);
        case InitialDatum::Kind::capped_distance:
            return std::min(backend.d0(p), g.cap());
        case InitialDatum::Kind::cloud_distance:
            return dist_to_set(spec, g.cloud(), p, backend);
    }
    return 0.0;
}

double hopf_lax_search_radius(const InitialDatum& g, const PhiSpec& phi, double t,
                              double slack) {
    if (!(t > 0.0)) throw domain_error("hopf_lax_search_radius: t must be > 0");
    const double lip = g.bounded() ? 0.0 : g.cc_lipschitz();
    if (!g.bounded() && lip <= 0.0)
        throw config_error("hopf_lax_search_radius: unbounded datum without a "
                           "Lipschitz bound");
    const double target =
        (g.bounded() ? (g.sup_bound() - g.inf_bound()) : 0.0) + slack;
    auto excess = [&](double r) {
        return t * legendre_conjugate(phi, r / t) - lip * r - target;
    };
    double hi = std::max(1.0, t);
    int grow = 0;
    while (excess(hi) < 0.0) {
        hi *= 2.0;
        if (++grow > 120)
            throw config_error("hopf_lax_search_radius: radius equation "
                               "unsolvable (Phi* grows too slowly)");
    }
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    return hi;
}

namespace {

// Seed cloud inside the search ball, shared across field evaluations. The
// displacements w and their CC distances d0(w) do not depend on the base
// point: d(p, p.w) = d0(w) by left invariance.
struct SeedCloud {
    std::vector<std::vector<double>> w;
    std::vector<double> dcc;
    std::vector<double> penalty; // t * Phi*(dcc / t)
};

SeedCloud build_cloud(const GroupSpec& spec, const PhiSpec& phi, double t,
                      double radius, const DistanceBackend& backend,
                      const HopfLaxOptions& opts) {
    const int n = spec.n();
    const int n1 = spec.n1();
    const int n2 = spec.n2();
    const double vwidth = std::max(spec.c0(), 1e-12) * radius * radius;
    const double gauge_cap = 1.5 * radius;

    SeedCloud cloud;
    // q = p is always admissible; keep it first.
    cloud.w.push_back(std::vector<double>(n, 0.0));
    cloud.dcc.push_back(0.0);

    std::vector<std::vector<double>> raw(opts.samples);
    std::vector<double> dist(opts.samples, -1.0);
    parallel_for(opts.samples, [&](std::size_t i) {
        const auto u = optim::halton(opts.seq_index + i, n);
        std::vector<double> w(n);
        for (int j = 0; j < n1; ++j) w[j] = radius * (2.0 * u[j] - 1.0);
        for (int j = 0; j < n2; ++j) w[n1 + j] = vwidth * (2.0 * u[n1 + j] - 1.0);
        Point pw(w);
        if (homogeneous_norm(spec, pw) > gauge_cap) return;
        const double d = backend.d0(pw);
        if (d > radius) return;
        raw[i] = std::move(w);
        dist[i] = d;
    });
    for (int i = 0; i < opts.samples; ++i) {
        if (dist[i] < 0.0) continue;
        cloud.w.push_back(std::move(raw[i]));
        cloud.dcc.push_back(dist[i]);
    }
    cloud.penalty.resize(cloud.w.size());
    for (std::size_t i = 0; i < cloud.w.size(); ++i)
        cloud.penalty[i] = t * legendre_conjugate(phi, cloud.dcc[i] / t);
    return cloud;
}

double gauge_of(const GroupSpec& spec, const std::vector<double>& w) {
    return homogeneous_norm(spec, Point(w));
}

HopfLaxResult hopf_lax_with_cloud(const GroupSpec& spec, const InitialDatum& g,
                                  const PhiSpec& phi, double t, const Point& p,
                                  const DistanceBackend& backend,
                                  const HopfLaxOptions& opts, double radius,
                                  const SeedCloud& cloud) {
    check_point(spec, p, "hopf_lax_value");
    HopfLaxResult res;
    res.search_radius = radius;

    // The datum's kink centers (the origin for distance kinds, the cloud for
    // set distances) carry narrow conical minima that uniform seeding misses;
    // they enter as explicit candidates.
    std::vector<std::vector<double>> cone_w;
    std::vector<double> cone_penalty;
    {
        std::vector<Point> centers;
        if (g.kind() == InitialDatum::Kind::distance ||
            g.kind() == InitialDatum::Kind::capped_distance)
            centers.push_back(zero_point(spec));
        else if (g.kind() == InitialDatum::Kind::cloud_distance)
            centers = g.cloud();
        for (const Point& c : centers) {
            const Point w = multiply(spec, inverse(spec, p), c);
            const double d = backend.d0(w);
            if (d <= 1.02 * radius) {
                cone_w.push_back(w.c);
                cone_penalty.push_back(t * legendre_conjugate(phi, d / t));
            }
        }
    }

    const std::size_t nc = cloud.w.size() + cone_w.size();
    auto w_at = [&](std::size_t i) -> const std::vector<double>& {
        return i < cloud.w.size() ? cloud.w[i] : cone_w[i - cloud.w.size()];
    };
    std::vector<double> values(nc);
    parallel_for(nc, [&](std::size_t i) {
        const Point q = multiply(spec, p, Point(w_at(i)));
        const double pen = i < cloud.w.size() ? cloud.penalty[i]
                                              : cone_penalty[i - cloud.w.size()];
        values[i] = eval_datum(spec, g, backend, q) + pen;
    });
    res.evaluations = static_cast<long>(nc);

    std::vector<std::size_t> order(nc);
    for (std::size_t i = 0; i < nc; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        const double ga = gauge_of(spec, w_at(a)), gb = gauge_of(spec, w_at(b));
        if (ga != gb) return ga < gb;
        return std::lexicographical_compare(w_at(a).begin(), w_at(a).end(),
                                            w_at(b).begin(), w_at(b).end());
    });

    const double seeded_best = values[order[0]];
    std::vector<double> best_w = w_at(order[0]);
    double best_val = seeded_best;

    // Refinement seeds: every cone candidate, then greedy diverse selection
    // from the ranked cloud so distinct basins all receive a local search.
    const double min_sep = 0.15 * radius;
    std::vector<std::size_t> seeds;
    for (std::size_t i = cloud.w.size(); i < nc; ++i) seeds.push_back(i);
    for (std::size_t idx : order) {
        if (seeds.size() >=
            static_cast<std::size_t>(opts.refine_seeds) + cone_w.size())
            break;
        bool apart = true;
        for (std::size_t chosen : seeds) {
            double dist2 = 0.0;
            for (std::size_t j = 0; j < w_at(idx).size(); ++j) {
                const double d = w_at(idx)[j] - w_at(chosen)[j];
                dist2 += d * d;
            }
            if (dist2 < min_sep * min_sep) {
                apart = false;
                break;
            }
        }
        if (apart) seeds.push_back(idx);
    }

    long refine_evals = 0;
    std::mutex mu;
    std::vector<std::pair<double, std::vector<double>>> refined(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t s) {
        auto objective = [&](const std::vector<double>& w) {
            const double d = backend.d0(Point(w));
            const Point q = multiply(spec, p, Point(w));
            return eval_datum(spec, g, backend, q) +
                   t * legendre_conjugate(phi, d / t);
        };
        optim::NelderMeadOptions nm;
        nm.max_evals = opts.refine_evals;
        nm.init_scale = 0.08 * (1.0 + radius);
        nm.f_tol = 1e-15;
        nm.x_tol = 1e-9;
        auto r = optim::nelder_mead(objective, w_at(seeds[s]), nm);
        // Restarting with a small simplex sharpens conical minima, where a
        // single descent stalls on its own shrink schedule.
        optim::NelderMeadOptions polish;
        polish.max_evals = opts.refine_evals / 2;
        polish.init_scale = 1e-3;
        polish.f_tol = 1e-16;
        polish.x_tol = 1e-11;
        auto r2 = optim::nelder_mead(objective, r.x, polish);
        refined[s] = r2.f < r.f ? std::make_pair(r2.f, r2.x)
                                : std::make_pair(r.f, r.x);
        std::lock_guard<std::mutex> lock(mu);
        refine_evals += r.evals + r2.evals;
    });
    for (const auto& [fv, wv] : refined) {
        if (fv < best_val) {
            best_val = fv;
            best_w = wv;
        }
    }
    res.evaluations += refine_evals;
    res.refinement_gap = std::max(0.0, seeded_best - best_val);
    res.value = best_val;
    res.argmin = multiply(spec, p, Point(best_w));
    return res;
}

void require_step2(const GroupSpec& spec, const char* where) {
    if (spec.step() != 2)
        throw config_error(std::string(where) +
                           ": only step-2 groups are supported");
}

} // namespace

HopfLaxResult hopf_lax_value(const GroupSpec& spec, const InitialDatum& g,
                             const PhiSpec& phi, double t, const Point& p,
                             const DistanceBackend& backend,
                             const HopfLaxOptions& opts) {
    require_step2(spec, "hopf_lax_value");
    if (!(t > 0.0)) throw domain_error("hopf_lax_value: t must be > 0");
    const double radius = hopf_lax_search_radius(g, phi, t, opts.radius_slack);
    const SeedCloud cloud = build_cloud(spec, phi, t, radius, backend, opts);
    return hopf_lax_with_cloud(spec, g, phi, t, p, backend, opts, radius, cloud);
}

ScalarField hopf_lax_field(const GroupSpec& spec, const InitialDatum& g,
                           const PhiSpec& phi, double t,
                           const DistanceBackend& backend,
                           const HopfLaxOptions& opts) {
    require_step2(spec, "hopf_lax_field");
    if (!(t > 0.0)) throw domain_error("hopf_lax_field: t must be > 0");
    struct State {
        std::mutex mu;
        std::unique_ptr<SeedCloud> cloud;
        double radius = 0.0;
    };
    auto state = std::make_shared<State>();
    ScalarField f;
    f.spec = &spec;
    f.name = "hopf_lax[t=" + std::to_string(t) + "]";
    f.eval = [&spec, g, phi, t, backend, opts, state](const Point& p) {
        {
            std::lock_guard<std::mutex> lock(state->mu);
            if (!state->cloud) {
                state->radius = hopf_lax_search_radius(g, phi, t, opts.radius_slack);
                state->cloud = std::make_unique<SeedCloud>(
                    build_cloud(spec, phi, t, state->radius, backend, opts));
            }
        }
        return hopf_lax_with_cloud(spec, g, phi, t, p, backend, opts,
                                   state->radius, *state->cloud)
            .value;
    };
    return f;
}

double dist_to_set(const GroupSpec& spec, const std::vector<Point>& cloud,
                   const Point& p, const DistanceBackend& backend) {
    if (cloud.empty()) throw domain_error("dist_to_set: empty point set");
    check_point(spec, p, "dist_to_set");
    double best = std::numeric_limits<double>::infinity();
    for (const Point& q : cloud) best = std::min(best, backend.between(p, q));
    return best;
}

double eikonal_residual(const ScalarField& f, const Point& p, double step) {
    const auto grad = fd_horizontal_gradient(f, p, step);
    double s = 0.0;
    for (double v : grad) s += v * v;
    return std::fabs(std::sqrt(s) - 1.0);
}

HopfLaxProblem load_problem(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    HopfLaxProblem prob;
    prob.group = j.at("group").get<std::string>();

    const auto& jp = j.at("phi");
    const std::string pk = jp.at("kind").get<std::string>();
    if (pk == "quadratic")
        prob.phi = PhiSpec::quadratic();
    else if (pk == "power")
        prob.phi = PhiSpec::power(jp.at("alpha").get<double>());
    else if (pk == "tabulated") {
        std::vector<std::pair<double, double>> tab;
        for (const auto& row : jp.at("table"))
            tab.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        prob.phi = PhiSpec::tabulated(std::move(tab));
    } else
        throw config_error("load_problem: unknown phi kind '" + pk + "'");

    const auto& jg = j.at("g");
    const std::string gk = jg.at("kind").get<std::string>();
    if (gk == "constant")
        prob.g = InitialDatum::constant(jg.at("value").get<double>());
    else if (gk == "distance")
        prob.g = InitialDatum::distance();
    else if (gk == "capped_distance")
        prob.g = InitialDatum::capped_distance(jg.at("cap").get<double>());
    else if (gk == "cloud_distance") {
        std::vector<Point> cloud;
        for (const auto& row : jg.at("points"))
            cloud.push_back(Point(row.get<std::vector<double>>()));
        prob.g = InitialDatum::cloud_distance(std::move(cloud));
    } else
        throw config_error("load_problem: unknown g kind '" + gk + "'");

    const auto& jt = j.at("t");
    if (jt.is_array())
        prob.times = jt.get<std::vector<double>>();
    else
        prob.times = {jt.get<double>()};

    for (const auto& row : j.at("points"))
        prob.points.push_back(Point(row.get<std::vector<double>>()));

    if (j.contains("backend")) prob.backend_name = j["backend"].get<std::string>();
    if (j.contains("samples")) prob.options.samples = j["samples"].get<int>();
    if (j.contains("seq_index"))
        prob.options.seq_index = j["seq_index"].get<std::uint64_t>();
    if (j.contains("probe_after")) prob.probe_after = j["probe_after"].get<bool>();
    return prob;
}

std::string result_json_line(const GroupSpec& spec, double t, const Point& p,
                             const HopfLaxResult& r) {
    (void)spec;
    nlohmann::json j;
    j["t"] = t;
    j["p"] = p.c;
    j["value"] = r.value;
    j["argmin"] = r.argmin.c;
    j["search_radius"] = r.search_radius;
    j["evaluations"] = r.evaluations;
    j["refinement_gap"] = r.refinement_gap;
    return j.dump();
}

} // namespace carnot
