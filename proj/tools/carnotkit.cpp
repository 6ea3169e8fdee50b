// carnotkit: distances, semiconcavity probes, Hopf-Lax solves and
// verification suites for the supported sub-Riemannian groups.
//
// Exit codes: 0 ok, 2 solver failure, 3 expectation contradicted, 4 bad config.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "carnot/errors.hpp"
#include "carnot/geodesic.hpp"
#include "carnot/group.hpp"
#include "carnot/heisenberg.hpp"
#include "carnot/hopflax.hpp"
#include "carnot/parallel.hpp"
#include "carnot/probe.hpp"
#include "carnot/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolver = 2;
constexpr int kExitExpectation = 3;
constexpr int kExitConfig = 4;

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

carnot::Point parse_point(const std::string& csv) {
    std::vector<double> v;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    return carnot::Point(v);
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> v;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    return v;
}

// Expected-limit expressions: a plain number, or [+-]<num>sqrt(pi).
double parse_limit_expr(std::string s) {
    const auto pos = s.find("sqrt(pi)");
    if (pos == std::string::npos) return std::stod(s);
    std::string head = s.substr(0, pos);
    if (!head.empty() && head.back() == '*') head.pop_back();
    double factor = 1.0;
    if (head == "-" ) factor = -1.0;
    else if (!head.empty() && head != "+") factor = std::stod(head);
    return factor * std::sqrt(3.14159265358979323846);
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw carnot::config_error("cannot open output file " + path);
    out << body;
}

carnot::ScalarField make_field(const std::string& name, const carnot::GroupSpec& spec,
                               const std::string& backend, int segments) {
    using namespace carnot;
    const bool exact_ok = spec.name() == "heisenberg";
    auto base_d0 = [&]() -> ScalarField {
        if (backend == "exact") {
            if (!exact_ok)
                throw config_error("exact backend is Heisenberg-only");
            return field_d0_exact();
        }
        if (backend == "shoot") return field_memoized(field_shoot_d0(spec));
        if (backend == "oracle")
            return field_memoized(field_oracle_d0(spec, segments));
        throw config_error("unknown backend '" + backend + "'");
    };
    if (name == "d0") return base_d0();
    if (name == "d0sq") {
        if (backend == "exact") {
            if (!exact_ok) throw config_error("exact backend is Heisenberg-only");
            return field_d0sq_exact();
        }
        ScalarField d = base_d0();
        return compose_with_psi([](double t) { return t * t; }, d, "d0sq");
    }
    if (name == "negd0sq") {
        ScalarField d = make_field("d0sq", spec, backend, segments);
        return field_negate(d);
    }
    if (name == "d0cube") {
        ScalarField d = base_d0();
        return compose_with_psi([](double t) { return t * t * t; }, d, "d0cube");
    }
    throw config_error("unknown field '" + name + "' (d0, d0sq, negd0sq, d0cube)");
}

int cmd_dist(const std::string& group, const std::string& point_csv,
             const std::string& backend, int segments, const std::string& dump_path) {
    using namespace carnot;
    const GroupSpec& spec = registry(group);
    const Point q = parse_point(point_csv);
    check_point(spec, q, "dist");

    nlohmann::json out;
    out["schema_version"] = 1;
    out["group"] = group;
    out["point"] = q.c;
    out["backend"] = backend;
    try {
        if (backend == "exact") {
            if (group != "heisenberg")
                throw config_error("exact backend is Heisenberg-only");
            const double d2 = heis::d0_squared_exact(q);
            out["d"] = std::sqrt(d2);
            out["d2"] = d2;
            out["residual"] = 0.0;
        } else if (backend == "shoot") {
            const auto res = shoot_distance(spec, q);
            out["d"] = res.distance;
            out["d2"] = res.distance * res.distance;
            out["residual"] = res.terminal_residual;
            out["starts_tried"] = res.starts_tried;
            out["search_radius"] = res.search_radius;
            if (!dump_path.empty()) {
                const auto path = flow_extremal(spec, res.best_covector, 512);
                write_path_csv(path, dump_path);
            }
        } else if (backend == "oracle") {
            const double d = control_oracle_distance(spec, q, segments);
            out["d"] = d;
            out["d2"] = d * d;
            out["residual"] = 0.0;
            out["segments"] = segments;
        } else {
            throw config_error("unknown backend '" + backend + "'");
        }
    } catch (const unreached_target& e) {
        std::fprintf(stderr, "solver failure: %s (best residual %.3e)\n", e.what(),
                     e.best_residual());
        return kExitSolver;
    } catch (const oracle_failure& e) {
        std::fprintf(stderr, "solver failure: %s (residual %.3e)\n", e.what(),
                     e.residual());
        return kExitSolver;
    }
    std::printf("%s\n", out.dump().c_str());
    return kExitOk;
}

struct ProbeArgs {
    std::string group = "heisenberg";
    std::string field = "d0sq";
    std::string backend;
    int segments = 32;
    std::string point_csv;
    bool center_axis = false;
    int order = 2;
    std::string dir_csv;
    std::string ladder_csv;
    std::string expect;
    std::string out_path;
    std::string format = "json";
    int grid_bulk = 40;
    unsigned seed = 404;
};

int cmd_probe(const ProbeArgs& args) {
    using namespace carnot;
    const GroupSpec& spec = registry(args.group);
    std::string backend = args.backend;
    if (backend.empty())
        backend = spec.name() == "heisenberg"
                      ? "exact"
                      : (spec.law() == GroupLaw::engel ? "oracle" : "shoot");
    const ScalarField f = make_field(args.field, spec, backend, args.segments);

    std::vector<double> ladder =
        args.ladder_csv.empty()
            ? std::vector<double>{1e-1, 3e-2, 1e-2, 3e-3, 1e-3}
            : parse_doubles(args.ladder_csv);

    HorizontalVec dir(std::vector<double>(spec.n1(), 0.0));
    if (args.dir_csv == "e1" || args.dir_csv.empty()) {
        dir[0] = 1.0;
    } else if (args.dir_csv == "e2" && spec.n1() >= 2) {
        dir[1] = 1.0;
    } else {
        const auto v = parse_doubles(args.dir_csv);
        if (v.size() != static_cast<std::size_t>(spec.n1()))
            throw config_error("--dir does not match the first layer");
        double nrm = 0.0;
        for (double x : v) nrm += x * x;
        nrm = std::sqrt(nrm);
        for (int i = 0; i < spec.n1(); ++i) dir[i] = v[i] / nrm;
    }

    // First-order limit mode.
    if (args.order == 1) {
        Point p = args.center_axis ? Point{0.0, 0.0, 1.0} : parse_point(args.point_csv);
        const auto lim = first_order_limit(f, p, dir, ladder);
        nlohmann::json out;
        out["schema_version"] = 1;
        out["mode"] = "first_order_limit";
        out["limit"] = lim.limit;
        out["error_estimate"] = lim.error_estimate;
        out["inconclusive"] = lim.inconclusive;
        out["quotients"] = lim.quotients;
        std::printf("%s\n", out.dump().c_str());
        if (!args.expect.empty()) {
            if (args.expect.rfind("limit=", 0) != 0)
                throw config_error("--expect for --order 1 must be limit=<value>");
            const double want = parse_limit_expr(args.expect.substr(6));
            if (std::fabs(lim.limit - want) > 0.01 * std::fabs(want)) {
                std::fprintf(stderr,
                             "expectation contradicted: limit %.6g vs %.6g\n",
                             lim.limit, want);
                return kExitExpectation;
            }
        }
        return kExitOk;
    }

    ScanConfig config;
    config.ladder = ladder;
    if (!args.point_csv.empty()) {
        config.grid.push_back(parse_point(args.point_csv));
        config.dirs = {dir};
    } else {
        std::mt19937_64 rng(args.seed);
        auto u = [&](double lo, double hi) {
            return lo + (hi - lo) * std::uniform_real_distribution<>(0, 1)(rng);
        };
        config.grid.push_back(zero_point(spec));
        if (spec.name() == "heisenberg") {
            for (int k = 0; k < 8; ++k)
                config.grid.push_back(Point{0.0, 0.0, u(0.1, 1.0)});
            for (int k = 0; k < args.grid_bulk; ++k) {
                Point p{u(-1.5, 1.5), u(-1.5, 1.5), u(-0.8, 0.8)};
                config.grid.push_back(p);
            }
        } else {
            for (int k = 0; k < args.grid_bulk; ++k) {
                std::vector<double> v(spec.n());
                for (double& x : v) x = u(-1.0, 1.0);
                config.grid.push_back(Point(v));
            }
        }
        config.dirs = default_directions(spec, 8);
    }

    const ProbeReport report = semiconcavity_scan(f, config);
    if (!args.out_path.empty()) {
        if (args.format == "csv") {
            report.write_csv(args.out_path);
        } else {
            write_text(args.out_path,
                       "# generated_at " + timestamp() + "\n" + report.to_json() + "\n");
        }
    }
    nlohmann::json out;
    out["schema_version"] = 1;
    out["mode"] = "scan";
    out["verdict"] = to_string(report.verdict);
    nlohmann::json sups = nlohmann::json::array();
    for (const auto& [lvl, s] : report.per_scale_sup)
        sups.push_back({{"level", lvl}, {"sup_quotient2", s}});
    out["per_scale_sup"] = sups;
    std::printf("%s\n", out.dump().c_str());

    if (!args.expect.empty() && args.expect != "bounded" && args.expect != "blowup")
        throw carnot::config_error("--expect must be bounded, blowup or limit=<v>");
    if (!args.expect.empty() && args.expect != to_string(report.verdict)) {
        std::fprintf(stderr, "expectation contradicted: verdict %s vs %s\n",
                     to_string(report.verdict), args.expect.c_str());
        return kExitExpectation;
    }
    return kExitOk;
}

int cmd_hopflax(const std::string& problem_path, const std::string& out_path) {
    using namespace carnot;
    std::ifstream in(problem_path);
    if (!in) throw config_error("cannot open problem file " + problem_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const HopfLaxProblem prob = load_problem(ss.str());
    const GroupSpec& spec = registry(prob.group);
    const DistanceBackend backend =
        prob.backend_name.empty()
            ? default_backend(spec)
            : (prob.backend_name == "exact"
                   ? make_exact_backend()
                   : (prob.backend_name == "shoot"
                          ? make_shoot_backend(spec)
                          : throw config_error("unknown backend '" +
                                               prob.backend_name + "'")));

    std::ostringstream lines;
    lines << "# generated_at " << timestamp() << "\n";
    for (double t : prob.times) {
        for (const Point& p : prob.points) {
            const auto res =
                hopf_lax_value(spec, prob.g, prob.phi, t, p, backend, prob.options);
            lines << result_json_line(spec, t, p, res) << "\n";
        }
        if (prob.probe_after) {
            const ScalarField u = field_memoized(
                hopf_lax_field(spec, prob.g, prob.phi, t, backend, prob.options));
            ScanConfig config;
            config.grid = prob.points;
            config.dirs = default_directions(spec, 4);
            config.ladder = {3e-2, 1e-2, 3e-3};
            const ProbeReport report = semiconcavity_scan(u, config);
            nlohmann::json j;
            j["t"] = t;
            j["probe_verdict"] = to_string(report.verdict);
            nlohmann::json sups = nlohmann::json::array();
            for (const auto& [lvl, s] : report.per_scale_sup)
                sups.push_back({{"level", lvl}, {"sup_quotient2", s}});
            j["per_scale_sup"] = sups;
            lines << j.dump() << "\n";
        }
    }
    if (out_path.empty())
        std::printf("%s", lines.str().c_str());
    else
        write_text(out_path, lines.str());
    return kExitOk;
}

int cmd_figure_slice(double xmax, double zmax, int nx, int nz,
                     const std::string& out_path) {
    using namespace carnot;
    std::ostringstream csv;
    csv << "# generated_at " << timestamp() << "\n";
    csv << "x,z,d0sq\n";
    char buf[96];
    for (int i = 0; i < nx; ++i) {
        const double x = -xmax + 2.0 * xmax * i / (nx - 1);
        for (int j = 0; j < nz; ++j) {
            const double z = -zmax + 2.0 * zmax * j / (nz - 1);
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", x, z,
                          heis::d0_squared_exact(x, 0.0, z));
            csv << buf;
        }
    }
    if (out_path.empty())
        std::printf("%s", csv.str().c_str());
    else
        write_text(out_path, csv.str());
    return kExitOk;
}

int cmd_verify(const std::string& suite, const std::string& out_path) {
    using namespace carnot;
    const verify::Report report = verify::run_suite(suite);
    report.print(stdout);
    if (!out_path.empty())
        write_text(out_path, "# generated_at " + timestamp() + "\n" +
                                 report.to_json() + "\n");
    return report.all_passed() ? kExitOk : kExitExpectation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical toolkit for step-2 Carnot group distances, "
                 "semiconcavity probes and Hopf-Lax solutions"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: logical cores)");
    app.set_config("--config", "", "read defaults from an INI file (flags win)");

    auto* dist = app.add_subcommand("dist", "distance from the identity");
    std::string d_group = "heisenberg", d_point, d_backend = "exact", d_dump;
    int d_segments = 32;
    dist->add_option("--group", d_group, "group name")->capture_default_str();
    dist->add_option("--point", d_point, "comma-separated coordinates")->required();
    dist->add_option("--backend", d_backend, "exact | shoot | oracle")
        ->capture_default_str();
    dist->add_option("--segments", d_segments, "oracle control segments")
        ->capture_default_str();
    dist->add_option("--dump-path", d_dump, "CSV dump of the best extremal");

    auto* probe = app.add_subcommand("probe", "semiconcavity scan / limit probe");
    ProbeArgs pa;
    probe->add_option("--group", pa.group)->capture_default_str();
    probe->add_option("--field", pa.field, "d0 | d0sq | negd0sq | d0cube")
        ->capture_default_str();
    probe->add_option("--backend", pa.backend, "exact | shoot | oracle");
    probe->add_option("--segments", pa.segments)->capture_default_str();
    probe->add_option("--point", pa.point_csv, "single probe point");
    probe->add_flag("--center-axis", pa.center_axis, "probe at (0,0,1)");
    probe->add_option("--order", pa.order, "1: first-order limit, 2: scan")
        ->capture_default_str();
    probe->add_option("--dir", pa.dir_csv, "direction (e1, e2 or csv)");
    probe->add_option("--ladder", pa.ladder_csv, "comma-separated |h| levels");
    probe->add_option("--expect", pa.expect, "bounded | blowup | limit=<v>");
    probe->add_option("--out", pa.out_path, "report file");
    probe->add_option("--format", pa.format, "json | csv")->capture_default_str();
    probe->add_option("--seed", pa.seed)->capture_default_str();

    auto* hl = app.add_subcommand("hopflax", "metric Hopf-Lax solves");
    std::string h_problem, h_out;
    hl->add_option("--problem", h_problem, "problem JSON file")->required();
    hl->add_option("--out", h_out, "JSON-lines output file");

    auto* fig = app.add_subcommand("figure-slice", "CSV of d0sq(x, 0, z)");
    double f_xmax = 1.0, f_zmax = 1.0;
    int f_nx = 61, f_nz = 61;
    std::string f_out;
    fig->add_option("--xmax", f_xmax)->capture_default_str();
    fig->add_option("--zmax", f_zmax)->capture_default_str();
    fig->add_option("--nx", f_nx)->capture_default_str();
    fig->add_option("--nz", f_nz)->capture_default_str();
    fig->add_option("--out", f_out, "output CSV file");

    auto* ver = app.add_subcommand("verify", "run a verification suite");
    std::string v_suite = "core", v_out;
    ver->add_option("suite", v_suite, "core | heisenberg | paper | all")
        ->capture_default_str();
    ver->add_option("--out", v_out, "report JSON file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (threads > 0) carnot::set_thread_count(threads);
        if (dist->parsed())
            return cmd_dist(d_group, d_point, d_backend, d_segments, d_dump);
        if (probe->parsed()) return cmd_probe(pa);
        if (hl->parsed()) return cmd_hopflax(h_problem, h_out);
        if (fig->parsed()) return cmd_figure_slice(f_xmax, f_zmax, f_nx, f_nz, f_out);
        if (ver->parsed()) return cmd_verify(v_suite, v_out);
    } catch (const carnot::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const carnot::dimension_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const carnot::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const carnot::unreached_target& e) {
        std::fprintf(stderr, "solver failure: %s (best residual %.3e)\n", e.what(),
                     e.best_residual());
        return kExitSolver;
    } catch (const carnot::oracle_failure& e) {
        std::fprintf(stderr, "solver failure: %s (residual %.3e)\n", e.what(),
                     e.residual());
        return kExitSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolver;
    }
    return kExitConfig;
}
