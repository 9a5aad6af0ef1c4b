#include <doctest.h>

#include <cmath>

#include "wp/go_factory.hpp"
#include "wp/rng.hpp"

using namespace wp;

namespace {

std::shared_ptr<SpaceTimeGrid> square_grid(int nx, double T = 4.0) {
    DomainSpec s;
    return build_grid(build_domain(s), nx, T, 0.9);
}

Field3D smooth_random_field(const SpaceTimeGrid& g, std::uint64_t seed) {
    Rng rng(seed);
    struct Mode {
        double a, kt, kx, ky, p;
    };
    std::vector<Mode> modes;
    for (int m = 0; m < 12; ++m)
        modes.push_back({rng.normal(), rng.uniform(0.3, 2.0), rng.uniform(0.3, 3.0),
                         rng.uniform(0.3, 3.0), rng.uniform(0.0, 6.28)});
    Field3D f(g.nt + 1, g.ny, g.nx);
    for (int k = 0; k <= g.nt; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double acc = 0.0;
                for (const auto& mo : modes)
                    acc += mo.a * std::sin(mo.kt * g.t(k) + mo.kx * g.x(i) +
                                           mo.ky * g.y(j) + mo.p);
                f.at(k, j, i) = acc;
            }
    return f;
}

}  // namespace

TEST_CASE("mollifier support and normalization") {
    auto g = square_grid(64, 2.0);
    double delta = 0.3;
    Vec2 w = unit_from_angle(0.2);
    Vec2 y{-0.4, 0.05};
    MollifierChi chi(delta, y, w);
    for (double t : {0.0, 0.7, 1.9}) {
        Vec2 c{y.x - t * w.x, y.y - t * w.y};
        CHECK(chi.value(t, c.x + 1.1 * delta, c.y) == 0.0);
        CHECK(chi.value(t, c.x, c.y - delta) == 0.0);
        CHECK(chi.value(t, c.x, c.y) > 0.0);
    }

    // spatial cross-section L2 stays 1 as delta moves
    for (double d : {0.2, 0.3, 0.4}) {
        MollifierChi cd(d, Vec2{0.0, 0.0}, w);
        double acc = 0.0;
        int n = 400;
        double h = 2.0 * d / n;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double vx = cd.value(0.0, -d + (a + 0.5) * h, -d + (b + 0.5) * h);
                acc += vx * vx * h * h;
            }
        CHECK(std::sqrt(acc) == doctest::Approx(1.0).epsilon(0.02));
    }

    // H1/L2 ratio doubles when delta halves
    auto ratio_for = [&](double d) {
        Field3D f = mollifier_chi(d, Vec2{-0.2, 0.0}, w, *g);
        return fd_sobolev_norm(f, *g, 1) / l2_norm_Q(f, *g);
    };
    double r1 = ratio_for(0.4), r2 = ratio_for(0.2);
    CHECK(r2 / r1 > 1.7);
    CHECK(r2 / r1 < 2.3);
}

TEST_CASE("mollifier derivatives match finite differences") {
    MollifierChi chi(0.35, Vec2{0.1, -0.2}, unit_from_angle(0.4));
    double t = 0.6, x = -0.25, y = 0.05;
    double h = 1e-4;
    auto v = [&](double tt, double xx, double yy) { return chi.value(tt, xx, yy); };
    double d2t = (v(t + h, x, y) - 2 * v(t, x, y) + v(t - h, x, y)) / (h * h);
    double lap = (v(t, x + h, y) - 2 * v(t, x, y) + v(t, x - h, y)) / (h * h) +
                 (v(t, x, y + h) - 2 * v(t, x, y) + v(t, x, y - h)) / (h * h);
    CHECK(chi.box_op(t, x, y) == doctest::Approx(d2t - lap).epsilon(1e-4));
    double dt1 = (v(t + h, x, y) - v(t - h, x, y)) / (2 * h);
    CHECK(chi.d_t(t, x, y) == doctest::Approx(dt1).epsilon(1e-6));
}

TEST_CASE("symbol inversion: definitional round trip and energy bookkeeping") {
    auto g = square_grid(28, 1.5);
    Vec2 w = unit_from_angle(0.2);
    double lambda = 12.0;
    Field3D f = smooth_random_field(*g, 7);

    auto ef = symbol_inverse_apply(f, *g, lambda, w, 1e-3);
    // after one pass the floored content is gone: E(P(Ef)) == Ef to roundoff
    Field3D pef = apply_conjugated_symbol(ef.field, *g, lambda, w);
    auto roundtrip = symbol_inverse_apply(pef, *g, lambda, w, 1e-3);
    double num = 0.0, den = 0.0;
    for (size_t m = 0; m < ef.field.v.size(); ++m) {
        num += std::pow(roundtrip.field.v[m] - ef.field.v[m], 2);
        den += std::pow(ef.field.v[m], 2);
    }
    CHECK(std::sqrt(num / den) < 1e-10);
}

TEST_CASE("symbol inverse norm decay saturates (operator bound)") {
    auto g = square_grid(32, 2.0);
    Vec2 w = unit_from_angle(0.2);
    std::vector<double> lambdas{8, 16, 32, 64};
    double first = 0.0, last = 0.0;
    for (size_t li = 0; li < lambdas.size(); ++li) {
        double sup = 0.0;
        for (int s = 0; s < 3; ++s) {
            Field3D f = smooth_random_field(*g, 100 + s);
            auto ef = symbol_inverse_apply(f, *g, lambdas[li], w, 1e-3);
            sup = std::max(sup, lambdas[li] * l2_norm_Q(ef.field, *g) / l2_norm_Q(f, *g));
        }
        if (li == 0) first = sup;
        if (li + 1 == lambdas.size()) last = sup;
    }
    CHECK(last <= 1.3 * first);
}

TEST_CASE("resonant alignment trips the ill-conditioned guard") {
    auto g = square_grid(24, 1.0);
    Field3D ones(g->nt + 1, g->ny, g->nx);
    ones.fill(1.0);
    CHECK_THROWS_AS(symbol_inverse_apply(ones, *g, 8.0, {1.0, 0.0}, 1e-3), Error);
}

TEST_CASE("decaying probe: trivial chi and the lambda preconditions") {
    auto g = square_grid(24, 1.0);
    Potential qz = sample_potential(parse_expr("zero"), g);
    auto one = std::make_shared<ConstantChi>(1.0);
    GOProbe p = build_go_decaying(qz, 8.0, unit_from_angle(0.2), one, g);
    CHECK(p.remainder.max_abs() == 0.0);
    CHECK(p.residual_norm == doctest::Approx(0.0).epsilon(1e-12));

    auto chi = std::make_shared<MollifierChi>(0.3, Vec2{0, 0}, unit_from_angle(0.2));
    CHECK_THROWS_AS(build_go_decaying(qz, 1.0, unit_from_angle(0.2), chi, g), Error);

    Potential qbig = sample_potential(parse_expr("static(xgauss(0,0,0.5))"), g);
    for (auto& v : qbig.values.v) v *= 600.0;
    qbig.expr.reset();
    CHECK_THROWS_AS(build_go_decaying(qbig, 4.0, unit_from_angle(0.2), chi, g), Error);
}

TEST_CASE("vanishing probe honors the boundary band and initial state") {
    auto g = square_grid(40, 2.0);
    Potential q = sample_potential(parse_expr("gaussian_bump(0,0,1,0.35,0.5)"), g);
    FacePartition faces = boundary_faces(g->domain, *g, {1.0, 0.0}, 0.25, 0.0);
    Vec2 w = unit_from_angle(0.1);
    auto chi = std::make_shared<MollifierChi>(0.35, Vec2{-0.2, 0.0}, w);
    GOProbe p = build_go_vanishing(q, 16.0, w, chi, faces, g);
    CHECK(p.sign == +1);

    double chimax = p.chi.max_abs();
    for (const auto& c : g->boundary_cells) {
        if (c.normal.dot(w) < -faces.epsilon / 2.0)
            for (int k = 0; k <= g->nt; k += 7) {
                double tr = p.chi.at(k, c.j, c.i) + p.remainder.at(k, c.j, c.i);
                CHECK(std::abs(tr) <= 1e-8 * chimax);
            }
    }
    for (int j = 0; j < g->ny; ++j)
        for (int i = 0; i < g->nx; ++i)
            CHECK(std::abs(p.chi.at(0, j, i) + p.remainder.at(0, j, i)) <= 1e-12 * chimax);
}

TEST_CASE("remainder decay report: slopes and input validation") {
    auto g = square_grid(40, 4.0);
    Potential q = sample_potential(parse_expr("gaussian_bump(0,0,2,0.35,0.7)"), g);
    FacePartition faces = boundary_faces(g->domain, *g, {1.0, 0.0}, 0.25, 0.0);
    Vec2 w = unit_from_angle(0.12);

    CHECK_THROWS_AS(remainder_decay_report(q, w, 0.3, {8.0}, {-0.3, 0.0}, faces, g), Error);
    CHECK_THROWS_AS(
        remainder_decay_report(q, w, 0.3, {8.0, 4.0, 16.0}, {-0.3, 0.0}, faces, g), Error);

    DecayReport rep =
        remainder_decay_report(q, w, 0.3, {8.0, 16.0, 32.0, 64.0}, {-0.3, 0.0}, faces, g);
    CHECK(rep.slope_w_h1 <= -0.8);
    CHECK(rep.slope_z_l2 <= -0.4);
    CHECK(rep.monotone_w);
    CHECK(rep.monotone_z);
    for (const auto& r : rep.rows) CHECK(r.w_zeroed < 0.02);
}
