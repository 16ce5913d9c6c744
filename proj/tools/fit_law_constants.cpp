// Offline brute-force fit of the growth constants of the approximating
// potential family (reference laws, theta = 1):
//
//   F_eps(s) >= k1 |s|^3 - k2           (eps-uniform)
//   |F_eps'(s)| <= k3 s^2 + k4          (for the eps >= 0.05 test set)
//
// The fitted values are committed as kFitK1..kFitK4 in src/laws.cpp. They
// parameterize tests only, never the solvers. Rerun after changing the law
// definitions:  ./fit_law_constants

#include "nchhs/laws.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

using nchhs::MaterialParams;

int main() {
    std::vector<double> eps_grid = {0.2, 0.1, 0.05, 0.025, 0.01, 0.005};
    std::vector<double> eps_grid_deriv = {0.2, 0.1, 0.05};

    const double k1 = 0.25; // fixed well below the cubic tail coefficient 1
    double k2 = 0.0;
    for (double eps : eps_grid) {
        MaterialParams p;
        p.theta = 1.0;
        p.theta0 = 2.0;
        p.eps = eps;
        for (int i = 0; i <= 200000; ++i) {
            const double s = -10.0 + 20.0 * i / 200000.0;
            const double gap = k1 * std::abs(s) * s * s - nchhs::potential(s, p);
            k2 = std::max(k2, gap);
        }
    }

    const double k3 = 4.0; // above the tail slope 3, leaves k4 for the middle
    double k4 = 0.0;
    for (double eps : eps_grid_deriv) {
        MaterialParams p;
        p.theta = 1.0;
        p.theta0 = 2.0;
        p.eps = eps;
        for (int i = 0; i <= 200000; ++i) {
            const double s = -10.0 + 20.0 * i / 200000.0;
            const double gap = std::abs(nchhs::potential_d1(s, p)) - k3 * s * s;
            k4 = std::max(k4, gap);
        }
    }

    std::printf("fitted growth constants (reference laws, theta = 1):\n");
    std::printf("  k1 = %.6g\n", k1);
    std::printf("  k2 = %.6g   (margin 1.05x: %.6g)\n", k2, 1.05 * k2);
    std::printf("  k3 = %.6g\n", k3);
    std::printf("  k4 = %.6g   (margin 1.05x: %.6g)\n", k4, 1.05 * k4);
    return 0;
}
