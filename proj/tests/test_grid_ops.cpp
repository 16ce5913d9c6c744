#include "nchhs/operators.hpp"
#include "nchhs/prng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace nchhs;

namespace {

Grid make_grid(int n, BoundaryMode mode, double lx = 1.0, double ly = 1.0) {
    DomainSpec spec;
    spec.nx = n;
    spec.ny = n;
    spec.lx = lx;
    spec.ly = ly;
    spec.boundary_mode = mode;
    return Grid::make(spec);
}

ScalarField random_field(const Grid& g, std::uint64_t seed, double amp = 1.0) {
    ScalarField f = ScalarField::zeros(g);
    SplitMix64 rng(seed);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f.v(i, j) = amp * rng.next_symmetric();
    return f;
}

} // namespace

TEST_CASE("gradient of a constant is zero") {
    for (auto mode : {BoundaryMode::neumann, BoundaryMode::periodic}) {
        const Grid g = make_grid(16, mode);
        const VectorField gr = gradient(ScalarField::constant(g, 5.0));
        CHECK(linf_norm(gr) == 0.0);
    }
}

TEST_CASE("gradient of a linear function is one away from the wrap") {
    const Grid g = make_grid(32, BoundaryMode::periodic);
    const ScalarField f = ScalarField::sample(g, [](double x, double) { return x; });
    const VectorField gr = gradient(f);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx - 1; ++i) CHECK(gr.x(i, j) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradient converges at second order on smooth periodic data") {
    // analytic derivative oracle: d/dx sin(2 pi x / lx) = (2 pi / lx) cos(...)
    const double lx = 1.0;
    std::vector<double> errs;
    for (int n : {32, 64, 128}) {
        const Grid g = make_grid(n, BoundaryMode::periodic, lx, lx);
        const ScalarField f =
            ScalarField::sample(g, [&](double x, double) { return std::sin(2.0 * M_PI * x / lx); });
        const VectorField gr = gradient(f);
        double err = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double exact = 2.0 * M_PI / lx * std::cos(2.0 * M_PI * g.x(i) / lx);
                err = std::max(err, std::abs(gr.x(i, j) - exact));
            }
        errs.push_back(err);
    }
    const double order1 = std::log2(errs[0] / errs[1]);
    const double order2 = std::log2(errs[1] / errs[2]);
    CHECK(order1 >= 1.9);
    CHECK(order2 >= 1.9);
    CHECK(order1 == doctest::Approx(2.0).epsilon(0.06));
}

TEST_CASE("divergence of a constant staggered field vanishes (periodic)") {
    const Grid g = make_grid(16, BoundaryMode::periodic);
    VectorField v = VectorField::zeros_staggered(g);
    v.x.setConstant(1.25);
    v.y.setConstant(-0.5);
    CHECK(linf_norm(divergence(v)) == 0.0);
}

TEST_CASE("divergence of (x, y) with prescribed boundary faces is 2") {
    // analytic oracle: div (x, y) = 2; staggered samples are exact here
    const Grid g = make_grid(64, BoundaryMode::neumann);
    VectorField v = VectorField::zeros_staggered(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) v.x(i, j) = i * g.hx;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) v.y(i, j) = j * g.hy;
    const ScalarField d = divergence(v);
    double err = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) err = std::max(err, std::abs(d.v(i, j) - 2.0));
    CHECK(err <= 1e-12);
}

TEST_CASE("discrete divergence theorem: zero-flux staggered fields sum to zero") {
    const Grid g = make_grid(24, BoundaryMode::neumann);
    SplitMix64 rng(7);
    VectorField v = VectorField::zeros_staggered(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) v.x(i, j) = rng.next_symmetric();
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) v.y(i, j) = rng.next_symmetric();
    const double total = integrate(divergence(v));
    CHECK(std::abs(total) <= 1e-12 * l2_norm(v));
}

TEST_CASE("gradient and -divergence are adjoint") {
    SUBCASE("periodic, cell-centered pair") {
        const Grid g = make_grid(32, BoundaryMode::periodic);
        const ScalarField f = random_field(g, 11);
        VectorField v = VectorField::zeros_cc(g);
        v.x = random_field(g, 12).v;
        v.y = random_field(g, 13).v;
        const VectorField gf = gradient(f);
        const double lhs = (gf.x * v.x + gf.y * v.y).sum() * g.cell_area();
        const double rhs = -inner(f, divergence(v));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
    SUBCASE("neumann, staggered pair with zero boundary faces") {
        const Grid g = make_grid(24, BoundaryMode::neumann);
        const ScalarField f = random_field(g, 31);
        SplitMix64 rng(32);
        VectorField v = VectorField::zeros_staggered(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 1; i < g.nx; ++i) v.x(i, j) = rng.next_symmetric();
        for (int j = 1; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) v.y(i, j) = rng.next_symmetric();
        const VectorField gf = face_gradient(f);
        double lhs = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) lhs += gf.x(i, j) * v.x(i, j);
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) lhs += gf.y(i, j) * v.y(i, j);
        lhs *= g.cell_area();
        const double rhs = -inner(f, divergence(v));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("laplacian equals the divergence of the face gradient exactly") {
    for (auto mode : {BoundaryMode::neumann, BoundaryMode::periodic}) {
        const Grid g = make_grid(20, mode);
        const ScalarField f = random_field(g, 41);
        const ScalarField lap = laplacian(f);
        const ScalarField composed = divergence(face_gradient(f));
        CHECK(linf_norm(ScalarField{g, lap.v - composed.v}) == 0.0);
    }
}

TEST_CASE("laplacian eigenfunction oracle: cos mode, second order") {
    std::vector<double> errs;
    for (int n : {32, 64, 128}) {
        const Grid g = make_grid(n, BoundaryMode::periodic);
        const ScalarField f =
            ScalarField::sample(g, [](double x, double) { return std::cos(2.0 * M_PI * x); });
        const ScalarField lap = laplacian(f);
        const double k2 = 4.0 * M_PI * M_PI;
        double err = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                err = std::max(err, std::abs(lap.v(i, j) + k2 * f.v(i, j)));
        errs.push_back(err);
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.9);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.9);
}

TEST_CASE("neumann laplacian has zero total for any field") {
    const Grid g = make_grid(32, BoundaryMode::neumann);
    const ScalarField f = random_field(g, 51, 3.0);
    CHECK(std::abs(integrate(laplacian(f))) <= 1e-12 * (1.0 + h1_seminorm(f)));
}

TEST_CASE("quadrature and norms") {
    const Grid g = make_grid(64, BoundaryMode::neumann);
    CHECK(integrate(ScalarField::constant(g, 1.0)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(l2_norm(ScalarField::constant(g, -3.0)) ==
          doctest::Approx(3.0 * std::sqrt(g.area())).epsilon(1e-14));
    // exact integral oracle: int_0^1 x dx = 1/2 (midpoint rule is exact here)
    const ScalarField fx = ScalarField::sample(g, [](double x, double) { return x; });
    CHECK(integrate(fx) == doctest::Approx(0.5).epsilon(1e-12));
    const ScalarField fq = ScalarField::sample(g, [](double x, double) { return x * x; });
    CHECK(std::abs(integrate(fq) - 1.0 / 3.0) <= 1.0 / (g.nx * g.nx));
}

TEST_CASE("grid validation") {
    DomainSpec bad;
    bad.nx = 4;
    CHECK_THROWS_AS((void)Grid::make(bad), std::invalid_argument);
    bad.nx = 64;
    bad.lx = -1.0;
    CHECK_THROWS_AS((void)Grid::make(bad), std::invalid_argument);
}
