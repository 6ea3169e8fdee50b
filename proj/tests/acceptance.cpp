// Acceptance suite: runs the numbered criteria and prints one pass/fail line
// per criterion. Usage: acceptance [k]  (k in 1..10; none runs all).

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "carnot/verify.hpp"

namespace {

const char* kSummaries[] = {
    "",
    "exact Heisenberg distance values",
    "shooting and control-oracle agreement with the closed form",
    "dilation homogeneity and left-invariance of the distance",
    "bounded semiconcavity scan of the squared distance",
    "first-order center limit -4 d0(p) and loss of semiconvexity",
    "Engel blow-up at the abnormal endpoint",
    "Hopf-Lax spatial semiconcavity, 1/(2t) scaling, monotonicity",
    "eikonal residuals and set-distance scan",
    "numerics hygiene (mu round trip, drifts, derivative formulas)",
    "sub-Laplacian trace bound and power-composition scan",
};

int run_one(int k, bool verbose) {
    const carnot::verify::Report report = carnot::verify::run_criterion(k);
    const bool ok = report.all_passed();
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", k, kSummaries[k]);
    if (verbose || !ok) report.print(stdout);
    std::fflush(stdout);
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) {
        const int k = std::atoi(argv[1]);
        if (k < 1 || k > 10) {
            std::fprintf(stderr, "usage: %s [criterion 1..10]\n", argv[0]);
            return 2;
        }
        return run_one(k, true);
    }
    int failures = 0;
    for (int k = 1; k <= 10; ++k) failures += run_one(k, false);
    std::printf("%s: %d/10 criteria passed\n", failures == 0 ? "OK" : "FAILED",
                10 - failures);
    return failures == 0 ? 0 : 1;
}
