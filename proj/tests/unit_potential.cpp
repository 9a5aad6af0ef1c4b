#include <doctest.h>

#include <cmath>

#include "wp/potential.hpp"

using namespace wp;

namespace {
std::shared_ptr<SpaceTimeGrid> desk_grid(int nx = 48, double T = 4.0) {
    DomainSpec s;
    Domain d = build_domain(s);
    return build_grid(d, nx, T, 0.9);
}
}  // namespace

TEST_CASE("expression catalog parses and rejects") {
    auto g = desk_grid(24, 1.0);
    CHECK(parse_expr("zero").f(0.1, 0.2, 0.3) == 0.0);
    CHECK(parse_expr("constant(2.5)").f(0, 0, 0) == doctest::Approx(2.5));
    auto gb = parse_expr("gaussian_bump(0,0,2,0.5,1)");
    CHECK(gb.f(2, 0, 0) == doctest::Approx(1.0));
    auto sep = parse_expr("separable(tgauss(2,1), xgauss(0,0,0.5))");
    CHECK(sep.f(2, 0, 0) == doctest::Approx(1.0));
    auto st = parse_expr("static(xmode(3.14,0))");
    CHECK(st.f(0.7, 0, 0.3) == doctest::Approx(1.0));
    CHECK_THROWS_AS(parse_expr("wibble(1)"), Error);
    CHECK_THROWS_AS(parse_expr("constant(1) trailing"), Error);
}

TEST_CASE("sampling rejects non-finite values") {
    auto g = desk_grid(24, 1.0);
    AnalyticExpr bad;
    bad.name = "bad";
    bad.f = [](double t, double x, double) {
        return (t > 0.5 && x > 0.0) ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    };
    CHECK_THROWS_AS(sample_potential(bad, g), Error);
}

TEST_CASE("norms of simple fields") {
    auto g = desk_grid(48, 4.0);
    Potential z = sample_potential(parse_expr("zero"), g);
    NormReport nz = sobolev_norms(z);
    CHECK(nz.L2 == 0.0);
    CHECK(nz.H1 == 0.0);
    CHECK(nz.Hminus1 == 0.0);
    CHECK(nz.Linf == 0.0);

    // constant field on (0,T)x(-1,1)^2: L2 = sqrt(T |Omega|) = 4
    Potential c = sample_potential(parse_expr("constant(1)"), g);
    CHECK(sobolev_norms(c).L2 == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("gaussian bump L2 against the separable quadrature oracle") {
    auto g = desk_grid(64, 4.0);
    // q = exp(-8(x^2+y^2)) exp(-2(t-T/2)^2): sx = 0.25, st = 0.5
    Potential q = sample_potential(parse_expr("gaussian_bump(0,0,2,0.25,0.5)"), g);
    // high-order 1-D quadrature of each separable factor
    auto quad = [](auto f, double a, double b) {
        int n = 20000;
        double h = (b - a) / n, acc = 0.0;
        for (int i = 0; i < n; ++i) acc += f(a + (i + 0.5) * h);
        return acc * h;
    };
    double ix = quad([](double x) { return std::exp(-16.0 * x * x); }, -1, 1);
    double it = quad([](double t) { return std::exp(-4.0 * (t - 2) * (t - 2)); }, 0, 4);
    double oracle = std::sqrt(it * ix * ix);
    CHECK(sobolev_norms(q).L2 == doctest::Approx(oracle).epsilon(1e-3));
}

TEST_CASE("Parseval and the norm ordering") {
    auto g = desk_grid(40, 2.0);
    Potential q = sample_potential(parse_expr("gaussian_bump(0.1,-0.2,1.0,0.3,0.4)"), g);
    NormReport nr = sobolev_norms(q);
    CHECK(nr.Hminus1 <= nr.L2);
    CHECK(nr.L2 <= nr.H1);
    CHECK(nr.Hminus1 > 0.0);
}

TEST_CASE("light-ray oracle: chord length, misses, linearity, support") {
    auto g = desk_grid(48, 4.0);
    Potential one = sample_potential(parse_expr("constant(1)"), g);
    // from the left edge straight through: chord of {t : x + t w in Omega} = 2
    double v = lightray_oracle(one, {1.0, 0.0}, {-1.0, 0.0}, 4000);
    CHECK(v == doctest::Approx(2.0).epsilon(1e-3));
    // far-away anchor misses the domain entirely
    CHECK(lightray_oracle(one, {0.6, 0.8}, {5.0, 5.0}, 4000) == 0.0);

    Potential z = sample_potential(parse_expr("zero"), g);
    CHECK(lightray_oracle(z, {1.0, 0.0}, {-1.0, 0.0}, 4000) == 0.0);

    Potential qa = sample_potential(parse_expr("gaussian_bump(0,0,2,0.3,0.6)"), g);
    Potential qb = sample_potential(parse_expr("static(xgauss(0.2,0,0.4))"), g);
    Field3D mix(g->nt + 1, g->ny, g->nx);
    for (size_t m = 0; m < mix.v.size(); ++m) mix.v[m] = 2.0 * qa.values.v[m] - 3.0 * qb.values.v[m];
    Potential qm = potential_from_field(std::move(mix), g);
    Vec2 w = unit_from_angle(0.3);
    Vec2 x{-1.2, -0.1};
    double lin = 2.0 * lightray_oracle(qa, w, x, 2000) - 3.0 * lightray_oracle(qb, w, x, 2000);
    CHECK(lightray_oracle(qm, w, x, 2000) == doctest::Approx(lin).epsilon(1e-10));

    // support: anchors beyond T + Diam never see the potential
    double far = 4.0 + 2.0 * std::sqrt(2.0) + 0.05;
    CHECK(lightray_oracle(qa, {1.0, 0.0}, {-far - 0.2, 0.0}, 2000) == 0.0);
}

TEST_CASE("boundary agreement") {
    auto g = desk_grid(32, 2.0);
    Potential q1 = sample_potential(parse_expr("gaussian_bump(0,0,1,0.25,0.4)"), g);
    CHECK(check_boundary_agreement(q1, q1, 0.0));

    // interior bump leaves the lateral traces untouched
    Potential bump = sample_potential(parse_expr("gaussian_bump(0,0,1,0.15,0.3)"), g);
    Field3D sum(g->nt + 1, g->ny, g->nx);
    for (size_t m = 0; m < sum.v.size(); ++m) sum.v[m] = q1.values.v[m] + bump.values.v[m];
    Potential q2 = potential_from_field(std::move(sum), g);
    CHECK(check_boundary_agreement(q1, q2, 1e-6));

    Field3D shift = q1.values;
    for (auto& vv : shift.v) vv += 1.0;
    Potential q3 = potential_from_field(std::move(shift), g);
    CHECK(!check_boundary_agreement(q1, q3, 1e-6));

    auto g2 = desk_grid(24, 2.0);
    Potential other = sample_potential(parse_expr("zero"), g2);
    CHECK_THROWS_AS(check_boundary_agreement(q1, other, 1e-6), Error);
}
