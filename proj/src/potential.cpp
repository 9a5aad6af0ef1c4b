#include "wp/potential.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "wp/rng.hpp"
#include "wp/spectral.hpp"

namespace wp {

namespace {

struct ExprParser {
    const std::string& s;
    size_t pos = 0;

    explicit ExprParser(const std::string& text) : s(text) {}

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    std::string ident() {
        skip_ws();
        size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            ++pos;
        if (start == pos) fail(Errc::config_invalid, "expected identifier in expression: " + s);
        return s.substr(start, pos - start);
    }

    bool accept(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            fail(Errc::config_invalid, std::string("expected '") + c + "' in expression: " + s);
    }

    double number() {
        skip_ws();
        size_t consumed = 0;
        double v = 0.0;
        try {
            v = std::stod(s.substr(pos), &consumed);
        } catch (const std::exception&) {
            fail(Errc::config_invalid, "expected number in expression: " + s);
        }
        pos += consumed;
        return v;
    }

    std::vector<double> number_args() {
        std::vector<double> args;
        expect('(');
        if (!accept(')')) {
            do {
                args.push_back(number());
            } while (accept(','));
            expect(')');
        }
        return args;
    }
};

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

Fn1 parse_time_profile(ExprParser& p) {
    std::string name = p.ident();
    if (name == "tconst") {
        if (p.accept('(')) p.expect(')');
        return [](double) { return 1.0; };
    }
    auto args = p.number_args();
    if (name == "tgauss") {
        if (args.size() != 2) fail(Errc::config_invalid, "tgauss(ct,st)");
        double ct = args[0], st = args[1];
        return [ct, st](double t) { return std::exp(-0.5 * (t - ct) * (t - ct) / (st * st)); };
    }
    if (name == "tpoly") {
        if (args.size() != 1) fail(Errc::config_invalid, "tpoly(k)");
        double k = args[0];
        return [k](double t) { return std::pow(t, k); };
    }
    fail(Errc::config_invalid, "unknown time profile: " + name);
}

Fn2 parse_space_profile(ExprParser& p) {
    std::string name = p.ident();
    auto args = p.number_args();
    if (name == "xgauss") {
        if (args.size() != 3) fail(Errc::config_invalid, "xgauss(cx,cy,s)");
        double cx = args[0], cy = args[1], s = args[2];
        return [cx, cy, s](double x, double y) {
            double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            return std::exp(-0.5 * r2 / (s * s));
        };
    }
    if (name == "xbump") {
        if (args.size() != 3) fail(Errc::config_invalid, "xbump(cx,cy,r)");
        double cx = args[0], cy = args[1], r = args[2];
        return [cx, cy, r](double x, double y) {
            double u2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (r * r);
            if (u2 >= 1.0) return 0.0;
            return std::exp(1.0 - 1.0 / (1.0 - u2));
        };
    }
    if (name == "xcone_sqrt") {
        // Hoelder-1/2 cusp profile
        if (args.size() != 3) fail(Errc::config_invalid, "xcone_sqrt(cx,cy,r)");
        double cx = args[0], cy = args[1], r = args[2];
        return [cx, cy, r](double x, double y) {
            double d = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
            if (d >= r) return 0.0;
            return std::sqrt(1.0 - d / r);
        };
    }
    if (name == "xmode") {
        if (args.size() != 2) fail(Errc::config_invalid, "xmode(kx,ky)");
        double kx = args[0], ky = args[1];
        return [kx, ky](double x, double y) { return std::cos(kx * x) * std::cos(ky * y); };
    }
    fail(Errc::config_invalid, "unknown space profile: " + name);
}

AnalyticExpr parse_expr_impl(ExprParser& p) {
    std::string name = p.ident();
    AnalyticExpr e;
    e.name = name;
    if (name == "zero") {
        if (p.accept('(')) p.expect(')');
        e.f = [](double, double, double) { return 0.0; };
        return e;
    }
    if (name == "constant") {
        auto args = p.number_args();
        if (args.size() != 1) fail(Errc::config_invalid, "constant(c)");
        double c = args[0];
        e.f = [c](double, double, double) { return c; };
        return e;
    }
    if (name == "gaussian_bump") {
        auto args = p.number_args();
        double amp = 1.0;
        size_t k = 0;
        if (args.size() == 6) amp = args[k++];
        else if (args.size() != 5)
            fail(Errc::config_invalid, "gaussian_bump([amp,]cx,cy,ct,sx,st)");
        double cx = args[k], cy = args[k + 1], ct = args[k + 2], sx = args[k + 3],
               st = args[k + 4];
        e.f = [amp, cx, cy, ct, sx, st](double t, double x, double y) {
            double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            return amp * std::exp(-0.5 * r2 / (sx * sx)) *
                   std::exp(-0.5 * (t - ct) * (t - ct) / (st * st));
        };
        return e;
    }
    if (name == "separable") {
        p.expect('(');
        Fn1 g = parse_time_profile(p);
        p.expect(',');
        Fn2 h = parse_space_profile(p);
        p.expect(')');
        e.f = [g, h](double t, double x, double y) { return g(t) * h(x, y); };
        return e;
    }
    if (name == "static") {
        p.expect('(');
        Fn2 h = parse_space_profile(p);
        p.expect(')');
        e.f = [h](double, double x, double y) { return h(x, y); };
        return e;
    }
    fail(Errc::config_invalid, "unknown potential expression: " + name);
}

}  // namespace

AnalyticExpr parse_expr(const std::string& text) {
    ExprParser p(text);
    AnalyticExpr e = parse_expr_impl(p);
    p.skip_ws();
    if (p.pos != text.size())
        fail(Errc::config_invalid, "trailing characters in expression: " + text);
    e.name = text;
    return e;
}

Potential sample_potential(const AnalyticExpr& expr, std::shared_ptr<const SpaceTimeGrid> grid,
                           double p_exponent) {
    Potential q;
    q.grid = grid;
    q.p_exponent = p_exponent;
    q.expr = expr;
    q.values = Field3D(grid->nt + 1, grid->ny, grid->nx);
    for (int k = 0; k <= grid->nt; ++k) {
        double t = grid->t(k);
        for (int j = 0; j < grid->ny; ++j)
            for (int i = 0; i < grid->nx; ++i) {
                if (!grid->in_domain(j, i)) continue;
                double v = expr.f(t, grid->x(i), grid->y(j));
                if (!std::isfinite(v))
                    fail(Errc::nan_sample, "potential sample is not finite at t=" +
                                               std::to_string(t));
                q.values.at(k, j, i) = v;
            }
    }
    return q;
}

Potential potential_from_field(Field3D f, std::shared_ptr<const SpaceTimeGrid> grid,
                               double p_exponent) {
    if (f.nl != grid->nt + 1 || f.ny != grid->ny || f.nx != grid->nx)
        fail(Errc::grid_mismatch, "field dimensions do not match the grid");
    for (double v : f.v)
        if (!std::isfinite(v)) fail(Errc::nan_sample, "potential sample is not finite");
    Potential q;
    q.grid = grid;
    q.p_exponent = p_exponent;
    q.values = std::move(f);
    return q;
}

double Potential::eval(double t, double x, double y) const {
    const auto& g = *grid;
    if (t < 0.0 || t > g.T || !g.domain.inside(x, y)) return 0.0;
    if (expr) return expr->f(t, x, y);
    return eval_grid(t, x, y);
}

double Potential::eval_grid(double t, double x, double y) const {
    const auto& g = *grid;
    if (t < 0.0 || t > g.T || !g.domain.inside(x, y)) return 0.0;
    double ft = t / g.dt;
    int k = std::clamp(static_cast<int>(ft), 0, g.nt - 1);
    double wt = ft - k;
    double fx = (x - g.domain_x0_) / g.dx;
    double fy = (y - g.domain_y0_) / g.dy;
    int i = std::clamp(static_cast<int>(fx), 0, g.nx - 2);
    int j = std::clamp(static_cast<int>(fy), 0, g.ny - 2);
    double wx = fx - i, wy = fy - j;
    auto bil = [&](int kk) {
        return (1 - wx) * (1 - wy) * values.at(kk, j, i) + wx * (1 - wy) * values.at(kk, j, i + 1) +
               (1 - wx) * wy * values.at(kk, j + 1, i) + wx * wy * values.at(kk, j + 1, i + 1);
    };
    return (1.0 - wt) * bil(k) + wt * bil(k + 1);
}

bool Potential::is_zero() const {
    for (double v : values.v)
        if (v != 0.0) return false;
    return true;
}

const NormReport& Potential::norms() const {
    if (!cache_) cache_ = sobolev_norms(*this);
    return *cache_;
}

double l2_norm_Q(const Field3D& f, const SpaceTimeGrid& g) {
    return std::sqrt(std::max(0.0, l2_inner_Q(f, f, g)));
}

double l2_inner_Q(const Field3D& a, const Field3D& b, const SpaceTimeGrid& g) {
    double s = 0.0;
    for (int k = 0; k <= g.nt; ++k) {
        double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
        const double* pa = a.level(k);
        const double* pb = b.level(k);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double w = g.area_weight(j, i);
                if (w == 0.0) continue;
                s += tw * w * pa[g.idx(j, i)] * pb[g.idx(j, i)];
            }
    }
    return s * g.dt;
}

NormReport sobolev_norms(const Potential& q) {
    const auto& g = *q.grid;
    const auto& f = q.values;
    NormReport r;

    double l2sq = 0.0, h1grad = 0.0, w1p_acc = 0.0;
    const double p = q.p_exponent;
    for (int k = 0; k <= g.nt; ++k) {
        double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double w = g.area_weight(j, i);
                if (w == 0.0) continue;
                double v = f.at(k, j, i);
                r.Linf = std::max(r.Linf, std::abs(v));

                // centered differences, one-sided at edges; zero extension at
                // the staircase boundary matches the field's implicit extension
                auto sample = [&](int kk, int jj, int ii) {
                    if (kk < 0 || kk > g.nt || jj < 0 || jj >= g.ny || ii < 0 || ii >= g.nx)
                        return 0.0;
                    if (!g.in_domain(jj, ii)) return 0.0;
                    return f.at(kk, jj, ii);
                };
                double qt = (sample(k + 1, j, i) - sample(k - 1, j, i)) /
                            ((k == 0 || k == g.nt) ? g.dt : 2.0 * g.dt);
                if (k == 0) qt = (sample(1, j, i) - sample(0, j, i)) / g.dt;
                if (k == g.nt) qt = (sample(g.nt, j, i) - sample(g.nt - 1, j, i)) / g.dt;
                double qx = (sample(k, j, i + 1) - sample(k, j, i - 1)) / (2.0 * g.dx);
                if (i == 0) qx = (sample(k, j, 1) - sample(k, j, 0)) / g.dx;
                if (i == g.nx - 1) qx = (sample(k, j, i) - sample(k, j, i - 1)) / g.dx;
                double qy = (sample(k, j + 1, i) - sample(k, j - 1, i)) / (2.0 * g.dy);
                if (j == 0) qy = (sample(k, 1, i) - sample(k, 0, i)) / g.dy;
                if (j == g.ny - 1) qy = (sample(k, j, i) - sample(k, j - 1, i)) / g.dy;

                double dV = tw * w * g.dt;
                double grad2 = qt * qt + qx * qx + qy * qy;
                l2sq += dV * v * v;
                h1grad += dV * grad2;
                w1p_acc += dV * std::pow(v * v + grad2, 0.5 * p);
            }
    }
    r.L2 = std::sqrt(l2sq);
    r.H1 = std::sqrt(l2sq + h1grad);
    r.W1p = std::pow(w1p_acc, 1.0 / p);

    // H^-1 through the zero-extended transform on a doubled periodic box
    {
        int pnt = next_fast_size(2 * (g.nt + 1));
        int pny = next_fast_size(2 * g.ny);
        int pnx = next_fast_size(2 * g.nx);
        SpectralBox box(pnt, pny, pnx, g.dt, g.dy, g.dx);
        box.zero_real();
        double* data = box.real_data();
        for (int k = 0; k <= g.nt; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    data[(static_cast<size_t>(k) * pny + j) * pnx + i] = f.at(k, j, i);
        box.forward();
        double acc = 0.0;
        box.for_each_mode([&](double mu, double xi1, double xi2, double w,
                              std::complex<double>& c) {
            double zeta2 = mu * mu + xi1 * xi1 + xi2 * xi2;
            acc += w * std::norm(c) / (1.0 + zeta2);
        });
        double n_total = static_cast<double>(pnt) * pny * pnx;
        r.Hminus1 = std::sqrt(acc * g.cell_volume() / n_total);
    }

    // Hoelder quotient on a random sample of node pairs
    {
        Rng rng(0x9e2f7031u);
        const double alpha = q.alpha();
        double best = 0.0;
        for (int trial = 0; trial < 10000; ++trial) {
            int k1 = static_cast<int>(rng.u01() * (g.nt + 1));
            int k2 = static_cast<int>(rng.u01() * (g.nt + 1));
            int i1 = static_cast<int>(rng.u01() * g.nx);
            int i2 = static_cast<int>(rng.u01() * g.nx);
            int j1 = static_cast<int>(rng.u01() * g.ny);
            int j2 = static_cast<int>(rng.u01() * g.ny);
            if (!g.in_domain(j1, i1) || !g.in_domain(j2, i2)) continue;
            double du = std::abs(f.at(k1, j1, i1) - f.at(k2, j2, i2));
            double ds = std::sqrt(std::pow((k1 - k2) * g.dt, 2) + std::pow((i1 - i2) * g.dx, 2) +
                                  std::pow((j1 - j2) * g.dy, 2));
            if (ds < 1e-14) continue;
            best = std::max(best, du / std::pow(ds, alpha));
        }
        r.Holder_alpha = best;
    }
    return r;
}

std::pair<double, double> ray_domain_interval(const Domain& d, double T, Vec2 x, Vec2 omega) {
    double t0 = 0.0, t1 = T;
    auto clip_slab = [&](double p0, double v, double lo, double hi) {
        if (std::abs(v) < 1e-15) {
            if (p0 <= lo || p0 >= hi) t1 = t0 - 1.0;
            return;
        }
        double a = (lo - p0) / v, b = (hi - p0) / v;
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
    };
    if (d.shape == Shape::rectangle) {
        clip_slab(x.x, omega.x, d.x_min, d.x_max);
        clip_slab(x.y, omega.y, d.y_min, d.y_max);
    } else {
        // |x + t w - c|^2 = R^2
        Vec2 rel = x - d.center;
        double b = rel.dot(omega);
        double c = rel.dot(rel) - d.radius * d.radius;
        double disc = b * b - c;
        if (disc <= 0.0) return {0.0, -1.0};
        double s = std::sqrt(disc);
        t0 = std::max(t0, -b - s);
        t1 = std::min(t1, -b + s);
    }
    return {t0, t1};
}

double lightray_oracle(const Potential& q, Vec2 omega, Vec2 x, int quad_steps) {
    const auto& g = *q.grid;
    if (quad_steps < g.nt) quad_steps = g.nt;
    auto [t0, t1] = ray_domain_interval(g.domain, g.T, x, omega);
    if (!(t1 > t0)) return 0.0;
    double h = (t1 - t0) / quad_steps;
    double acc = 0.0;
    for (int m = 0; m < quad_steps; ++m) {
        double t = t0 + (m + 0.5) * h;
        acc += q.eval_grid(t, x.x + t * omega.x, x.y + t * omega.y);
    }
    return acc * h;
}

bool check_boundary_agreement(const Potential& q1, const Potential& q2, double tol) {
    if (!q1.grid->same_layout(*q2.grid))
        fail(Errc::grid_mismatch, "potentials live on different grids");
    const auto& g = *q1.grid;
    for (int k = 0; k <= g.nt; ++k)
        for (const auto& c : g.boundary_cells) {
            double d = std::abs(q1.at(k, c.j, c.i) - q2.at(k, c.j, c.i));
            if (d > tol) return false;
        }
    return true;
}

}  // namespace wp
