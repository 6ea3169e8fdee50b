#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(CARNOTKIT_BIN) + " " + args + " 2>&1";
    std::FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> lines_without_timestamp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (line.find("generated_at") == std::string::npos) out.push_back(line);
    return out;
}

} // namespace

TEST_CASE("dist: exact values and exit codes") {
    const auto axis = run("dist --group heisenberg --point 0,0,1 --backend exact");
    CHECK(axis.exit_code == 0);
    CHECK(axis.output.find("12.56637061435917") != std::string::npos);

    const auto plane = run("dist --group heisenberg --point 3,4,0 --backend exact");
    CHECK(plane.exit_code == 0);
    CHECK(plane.output.find("\"d\":5.0") != std::string::npos);

    CHECK(run("dist --group nosuch --point 0,0,1").exit_code == 4);
    CHECK(run("dist --group heisenberg --point 0,0 --backend exact").exit_code == 4);
    CHECK(run("dist --group engel --point 0,0,1,0 --backend exact").exit_code == 4);
    // Unreachable vertical target in the degenerate abelian spec.
    CHECK(run("dist --group abelian3 --point 0,0,1 --backend shoot").exit_code == 2);
}

TEST_CASE("dist: oracle backend and extremal dump") {
    const auto engel =
        run("dist --group engel --point 0,1,0,0 --backend oracle --segments 16");
    CHECK(engel.exit_code == 0);
    CHECK(engel.output.find("\"d\":0.99999") != std::string::npos);

    const std::string dump = "cli_path_dump.csv";
    const auto shoot = run("dist --group heisenberg --point 1,0,0 "
                           "--backend shoot --dump-path " + dump);
    CHECK(shoot.exit_code == 0);
    std::ifstream in(dump);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,p_1,p_2,p_3,xi_1,xi_2,xi_3");
    in.close();
    std::remove(dump.c_str());
}

TEST_CASE("probe: expectation handling") {
    const auto lim = run("probe --group heisenberg --field d0sq --center-axis "
                         "--order 1 --expect 'limit=-8sqrt(pi)'");
    CHECK(lim.exit_code == 0);

    const auto wrong = run("probe --group heisenberg --field d0sq --center-axis "
                           "--order 1 --expect 'limit=-7sqrt(pi)'");
    CHECK(wrong.exit_code == 3);

    const auto scan = run("--threads 1 probe --group heisenberg --field d0sq --expect bounded");
    CHECK(scan.exit_code == 0);
    CHECK(scan.output.find("\"verdict\":\"bounded\"") != std::string::npos);

    const auto contradicted =
        run("probe --group heisenberg --field d0sq --expect blowup");
    CHECK(contradicted.exit_code == 3);
}

TEST_CASE("figure-slice: axis corner, plane parabola, symmetry, reproducibility") {
    const std::string f1 = "slice_a.csv", f2 = "slice_b.csv";
    const auto r1 = run("figure-slice --xmax 1 --zmax 1 --nx 5 --nz 5 --out " + f1);
    CHECK(r1.exit_code == 0);
    const auto r2 = run("figure-slice --xmax 1 --zmax 1 --nx 5 --nz 5 --out " + f2);
    CHECK(r2.exit_code == 0);

    const auto a = lines_without_timestamp(f1);
    const auto b = lines_without_timestamp(f2);
    CHECK(a == b); // byte-identical modulo the timestamp header

    // Grid rows: x in {-1,-0.5,0,0.5,1}, z likewise. Parse and check values.
    double axis_val = -1.0, plane_val = -1.0, sym_pos = -1, sym_neg = -1;
    for (std::size_t i = 1; i < a.size(); ++i) {
        std::stringstream ss(a[i]);
        std::string sx, sz, sv;
        std::getline(ss, sx, ',');
        std::getline(ss, sz, ',');
        std::getline(ss, sv, ',');
        const double x = std::stod(sx), z = std::stod(sz), v = std::stod(sv);
        if (x == 0.0 && z == 1.0) axis_val = v;
        if (x == 1.0 && z == 0.0) plane_val = v;
        if (x == 0.5 && z == 1.0) sym_pos = v;
        if (x == 0.5 && z == -1.0) sym_neg = v;
    }
    CHECK(axis_val == doctest::Approx(4.0 * 3.14159265358979324).epsilon(1e-12));
    CHECK(plane_val == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sym_pos == doctest::Approx(sym_neg).epsilon(1e-14));

    std::remove(f1.c_str());
    std::remove(f2.c_str());
}

TEST_CASE("hopflax: constant datum, attached probe verdicts") {
    const std::string prob = "hl_problem.json";
    {
        std::ofstream out(prob);
        out << R"({"group":"heisenberg","phi":{"kind":"quadratic"},
                   "g":{"kind":"constant","value":2.0},
                   "t":[0.5,1.0],"points":[[0,0,1],[1,0,0]],
                   "backend":"exact","samples":256,"probe_after":true})";
    }
    const std::string outfile = "hl_out.jsonl";
    const auto r = run("hopflax --problem " + prob + " --out " + outfile);
    CHECK(r.exit_code == 0);
    const auto lines = lines_without_timestamp(outfile);
    CHECK(lines.size() == 6); // 4 value lines + 2 probe lines
    int values = 0, probes = 0;
    for (const auto& line : lines) {
        if (line.find("\"value\":2.0") != std::string::npos) ++values;
        if (line.find("\"probe_verdict\":\"bounded\"") != std::string::npos)
            ++probes;
    }
    CHECK(values == 4);
    CHECK(probes == 2);
    std::remove(prob.c_str());
    std::remove(outfile.c_str());

    CHECK(run("hopflax --problem missing_file.json").exit_code == 4);
}

TEST_CASE("solver output is identical across worker counts") {
    const auto one =
        run("--threads 1 dist --group heisenberg --point 0.4,-0.2,0.3 --backend shoot");
    const auto two =
        run("--threads 2 dist --group heisenberg --point 0.4,-0.2,0.3 --backend shoot");
    CHECK(one.exit_code == 0);
    CHECK(one.output == two.output);
}

TEST_CASE("config file supplies defaults, flags override") {
    const std::string cfg = "cli_defaults.ini";
    {
        std::ofstream out(cfg);
        out << "threads=1\n[dist]\ngroup=heisenberg\nbackend=exact\n";
    }
    const auto r = run("--config " + cfg + " dist --point 3,4,0");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"d\":5.0") != std::string::npos);
    // A flag on the command line beats the configured backend.
    const auto r2 = run("--config " + cfg + " dist --point 3,4,0 --backend oracle");
    CHECK(r2.exit_code == 0);
    CHECK(r2.output.find("\"backend\":\"oracle\"") != std::string::npos);
    std::remove(cfg.c_str());
}

TEST_CASE("verify: core suite passes and reports reproduce byte-for-byte") {
    const std::string f1 = "verify_core_a.json", f2 = "verify_core_b.json";
    const auto r = run("verify core --out " + f1);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("[PASS]") != std::string::npos);
    CHECK(r.output.find("[FAIL]") == std::string::npos);
    const auto r2 = run("verify core --out " + f2);
    CHECK(r2.exit_code == 0);
    CHECK(lines_without_timestamp(f1) == lines_without_timestamp(f2));
    std::remove(f1.c_str());
    std::remove(f2.c_str());

    CHECK(run("verify nosuchsuite").exit_code == 4);
}
