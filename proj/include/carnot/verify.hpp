#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace carnot::verify {

struct CheckResult {
    std::string name;
    std::string status; // pass | fail | skip
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    std::string provenance; // paper | trivial | derived
    std::string detail;
    bool timing = false; // wall-clock guard: measured value excluded from reports
};

struct Report {
    std::string title;
    std::vector<CheckResult> checks;

    bool all_passed() const;
    std::string to_json() const;
    void print(std::FILE* out) const;
};

/// Acceptance criteria 1..10.
Report run_criterion(int k);

/// Group-axiom property checks over every registered spec.
Report group_axioms();

/// Suites: "core", "heisenberg", "paper", "all".
std::vector<std::string> suite_names();
Report run_suite(const std::string& name);

} // namespace carnot::verify
