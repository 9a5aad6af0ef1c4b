#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "wp/recon.hpp"

namespace wp {

namespace {
std::atomic<int> g_slice_sign{0};
constexpr std::complex<double> kI{0.0, 1.0};
}  // namespace

int slice_sign() {
    int s = g_slice_sign.load();
    if (s == 0)
        fail(Errc::unset_sign,
             "the slice sign is unset; run the calibration or set it from the config");
    return s;
}

void set_slice_sign(int sign) {
    if (sign != 1 && sign != -1) fail(Errc::config_invalid, "slice sign must be +1 or -1");
    g_slice_sign.store(sign);
}

ConeLattice ConeLattice::for_grid(const SpaceTimeGrid& g, double R_max) {
    if (!(R_max > 0.0)) fail(Errc::bad_radius, "frequency radius must be positive");
    ConeLattice lat;
    lat.dtau = 2.0 * M_PI / g.T;
    lat.dxi_x = 2.0 * M_PI / ((g.nx - 1) * g.dx);
    lat.dxi_y = 2.0 * M_PI / ((g.ny - 1) * g.dy);
    lat.jmax = static_cast<int>(std::floor(R_max / lat.dtau));
    lat.kxmax = static_cast<int>(std::floor(R_max / lat.dxi_x));
    lat.kymax = static_cast<int>(std::floor(R_max / lat.dxi_y));
    lat.R_max = R_max;
    return lat;
}

Slice fourier_slice(const YGrid& rq, Vec2 omega, const std::vector<Vec2>& xis, int sigma) {
    if (sigma != 1 && sigma != -1) fail(Errc::unset_sign, "slice sign must be +1 or -1");
    Slice s;
    s.omega = omega;
    s.xis = xis;
    s.vals.resize(xis.size());
    const double cell = rq.h * rq.h;
    for (size_t m = 0; m < xis.size(); ++m) {
        std::complex<double> acc{0.0, 0.0};
        for (int b = 0; b < rq.n2; ++b)
            for (int a = 0; a < rq.n1; ++a) {
                double v = rq.at(a, b);
                if (v == 0.0) continue;
                Vec2 y = rq.pos(a, b);
                acc += v * std::exp(-kI * (y.x * xis[m].x + y.y * xis[m].y));
            }
        s.vals[m] = acc * cell;
    }
    return s;
}

std::complex<double> direct_transform(const Potential& q, double tau, Vec2 xi) {
    const auto& g = *q.grid;
    // periodic Riemann sum: duplicate edge samples dropped
    std::complex<double> acc{0.0, 0.0};
    for (int k = 0; k < g.nt; ++k) {
        std::complex<double> et = std::exp(-kI * (tau * g.t(k)));
        std::complex<double> row{0.0, 0.0};
        for (int j = 0; j < g.ny - 1; ++j)
            for (int i = 0; i < g.nx - 1; ++i) {
                if (!g.in_domain(j, i)) continue;
                double v = q.at(k, j, i);
                if (v == 0.0) continue;
                row += v * std::exp(-kI * (xi.x * g.x(i) + xi.y * g.y(j)));
            }
        acc += et * row;
    }
    return acc * g.cell_volume();
}

int calibrate_slice_sign(const Potential& q, Vec2 omega, const YGrid& rq_data,
                         const ConeLattice& lat) {
    // evaluate both sign conventions against the direct transform at a few
    // off-axis nodes and keep the one that matches
    std::vector<Vec2> xis;
    for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
        for (int ky = -lat.kymax; ky <= lat.kymax; ++ky) {
            Vec2 xi = lat.xi(kx, ky);
            if (std::abs(omega.dot(xi)) < 0.3 * lat.dtau) continue;  // symmetric points decide nothing
            if (xi.norm() < 1e-12 || xi.norm() > lat.R_max) continue;
            xis.push_back(xi);
        }
    if (xis.empty()) fail(Errc::config_invalid, "calibration needs off-axis lattice nodes");
    Slice s = fourier_slice(rq_data, omega, xis, +1);
    double err_plus = 0.0, err_minus = 0.0, scale = 0.0;
    for (size_t m = 0; m < xis.size(); ++m) {
        auto ip = direct_transform(q, +omega.dot(xis[m]), xis[m]);
        auto im = direct_transform(q, -omega.dot(xis[m]), xis[m]);
        err_plus += std::norm(s.vals[m] - ip);
        err_minus += std::norm(s.vals[m] - im);
        scale += std::norm(ip) + std::norm(im);
    }
    if (scale <= 0.0) fail(Errc::config_invalid, "calibration potential has no spectral content");
    return err_minus < err_plus ? -1 : +1;
}

double FourierCone::a_of_xi(Vec2 xi) const {
    if (full_circle) return -xi.norm();
    double best = 1e300;
    for (int m = 0; m <= 256; ++m) {
        double u = -1.0 + 2.0 * m / 256.0;
        // cap {|w - w0| <= eps} in angle form
        double half = 2.0 * std::asin(std::min(1.0, eps_cap / 2.0));
        double th = std::atan2(omega0.y, omega0.x) + u * half;
        best = std::min(best, xi.x * std::cos(th) + xi.y * std::sin(th));
    }
    return best;
}

double FourierCone::b_of_xi(Vec2 xi) const {
    if (full_circle) return xi.norm();
    double best = -1e300;
    for (int m = 0; m <= 256; ++m) {
        double u = -1.0 + 2.0 * m / 256.0;
        double half = 2.0 * std::asin(std::min(1.0, eps_cap / 2.0));
        double th = std::atan2(omega0.y, omega0.x) + u * half;
        best = std::max(best, xi.x * std::cos(th) + xi.y * std::sin(th));
    }
    return best;
}

double FourierCone::covered_energy() const {
    double e = 0.0;
    for (size_t m = 0; m < values.size(); ++m)
        if (mask[m]) e += std::norm(values[m]);
    return e;
}

FourierCone assemble_cone(const std::vector<Slice>& slices, const ConeLattice& lat,
                          bool full_circle, Vec2 omega0, double eps_cap,
                          double scatter_tol_frac) {
    if (slices.empty()) fail(Errc::empty_family, "no slices to assemble");
    FourierCone cone;
    cone.lat = lat;
    cone.full_circle = full_circle;
    cone.omega0 = omega0;
    cone.eps_cap = eps_cap;
    const int n = lat.count();
    cone.values.assign(n, {0.0, 0.0});
    cone.hits.assign(n, 0);
    cone.mask.assign(n, 0);
    cone.in_ball.assign(n, 0);
    for (int j = -lat.jmax; j <= lat.jmax; ++j)
        for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
            for (int ky = -lat.kymax; ky <= lat.kymax; ++ky) {
                Vec2 xi = lat.xi(kx, ky);
                double tau = lat.tau(j);
                if (tau * tau + xi.dot(xi) < lat.R_max * lat.R_max)
                    cone.in_ball[lat.index(j, kx, ky)] = 1;
            }

    const int sigma = slice_sign();
    for (const auto& s : slices) {
        for (size_t m = 0; m < s.xis.size(); ++m) {
            Vec2 xi = s.xis[m];
            double tau = sigma * s.omega.dot(xi);
            int kx = static_cast<int>(std::lround(xi.x / lat.dxi_x));
            int ky = static_cast<int>(std::lround(xi.y / lat.dxi_y));
            int j = static_cast<int>(std::lround(tau / lat.dtau));
            if (std::abs(kx) > lat.kxmax || std::abs(ky) > lat.kymax || std::abs(j) > lat.jmax)
                continue;
            if (std::abs(j * lat.dtau - tau) > scatter_tol_frac * lat.dtau) continue;
            int idx = lat.index(j, kx, ky);
            if (!cone.in_ball[idx]) continue;
            cone.values[idx] += s.vals[m];
            cone.hits[idx] += 1;
        }
    }
    for (int m = 0; m < n; ++m)
        if (cone.hits[m] > 0) {
            cone.values[m] /= static_cast<double>(cone.hits[m]);
            cone.mask[m] = 1;
        }

    // conjugate symmetrization: a real potential fixes value(-z) = conj(value(z))
    for (int j = -lat.jmax; j <= lat.jmax; ++j)
        for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
            for (int ky = -lat.kymax; ky <= lat.kymax; ++ky) {
                int ia = lat.index(j, kx, ky);
                int ib = lat.index(-j, -kx, -ky);
                if (ia > ib) continue;
                if (cone.mask[ia] && cone.mask[ib]) {
                    auto v = 0.5 * (cone.values[ia] + std::conj(cone.values[ib]));
                    cone.values[ia] = v;
                    cone.values[ib] = std::conj(v);
                } else if (cone.mask[ia] && !cone.mask[ib]) {
                    cone.values[ib] = std::conj(cone.values[ia]);
                    cone.mask[ib] = 1;
                } else if (cone.mask[ib] && !cone.mask[ia]) {
                    cone.values[ia] = std::conj(cone.values[ib]);
                    cone.mask[ia] = 1;
                }
            }
    bool any = false;
    for (int m = 0; m < n; ++m) any = any || cone.mask[m];
    if (!any) fail(Errc::empty_face, "cone assembly produced empty coverage");
    return cone;
}

FourierCone oracle_cone(const Potential& q, const ConeLattice& lat, bool full_circle,
                        Vec2 omega0, double eps_cap) {
    FourierCone cone;
    cone.lat = lat;
    cone.full_circle = full_circle;
    cone.omega0 = omega0;
    cone.eps_cap = eps_cap;
    const int n = lat.count();
    cone.values.assign(n, {0.0, 0.0});
    cone.hits.assign(n, 0);
    cone.mask.assign(n, 0);
    cone.in_ball.assign(n, 0);
    for (int j = -lat.jmax; j <= lat.jmax; ++j)
        for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
            for (int ky = -lat.kymax; ky <= lat.kymax; ++ky) {
                int idx = lat.index(j, kx, ky);
                Vec2 xi = lat.xi(kx, ky);
                double tau = lat.tau(j);
                if (tau * tau + xi.dot(xi) >= lat.R_max * lat.R_max) continue;
                cone.in_ball[idx] = 1;
                double fuzz = 0.5 * lat.dtau;
                if (tau < cone.a_of_xi(xi) - fuzz || tau > cone.b_of_xi(xi) + fuzz) continue;
                cone.values[idx] = direct_transform(q, tau, xi);
                cone.mask[idx] = 1;
                cone.hits[idx] = 1;
            }
    return cone;
}

Field3D invert_lowpass(const FourierCone& cone, double R, FillMode fill,
                       const SpaceTimeGrid& g) {
    if (!(R > 0.0)) fail(Errc::bad_radius, "cutoff radius must be positive");
    const ConeLattice& lat = cone.lat;
    std::vector<std::complex<double>> vals = cone.values;
    std::vector<std::uint8_t> use(cone.mask.begin(), cone.mask.end());

    if (fill == FillMode::extrapolate) {
        // least-squares polynomial continuation in tau per xi column (heuristic)
        for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
            for (int ky = -lat.kymax; ky <= lat.kymax; ++ky) {
                std::vector<int> have, missing;
                for (int j = -lat.jmax; j <= lat.jmax; ++j) {
                    int idx = lat.index(j, kx, ky);
                    if (!cone.in_ball[idx]) continue;
                    if (cone.mask[idx]) have.push_back(j);
                    else missing.push_back(j);
                }
                if (missing.empty() || have.size() < 3) continue;
                int deg = std::min<int>(2, static_cast<int>(have.size()) - 1);
                Eigen::MatrixXcd A(have.size(), deg + 1);
                Eigen::VectorXcd rhs(have.size());
                for (size_t r = 0; r < have.size(); ++r) {
                    double t = have[r] * lat.dtau;
                    for (int c = 0; c <= deg; ++c) A(r, c) = std::pow(t, c);
                    rhs(r) = cone.values[lat.index(have[r], kx, ky)];
                }
                Eigen::VectorXcd coef = A.colPivHouseholderQr().solve(rhs);
                for (int j : missing) {
                    double t = j * lat.dtau;
                    std::complex<double> v{0.0, 0.0};
                    for (int c = 0; c <= deg; ++c) v += coef(c) * std::pow(t, c);
                    int idx = lat.index(j, kx, ky);
                    vals[idx] = v;
                    use[idx] = 1;
                }
            }
        // re-symmetrize after the fill
        for (int j = -lat.jmax; j <= lat.jmax; ++j)
            for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
                for (int ky = -lat.kymax; ky <= lat.kymax; ++ky) {
                    int ia = lat.index(j, kx, ky), ib = lat.index(-j, -kx, -ky);
                    if (ia >= ib || !use[ia] || !use[ib]) continue;
                    auto v = 0.5 * (vals[ia] + std::conj(vals[ib]));
                    vals[ia] = v;
                    vals[ib] = std::conj(v);
                }
    }

    // per-axis phase tables
    const int nT = 2 * lat.jmax + 1, nKx = 2 * lat.kxmax + 1, nKy = 2 * lat.kymax + 1;
    std::vector<std::complex<double>> pt(static_cast<size_t>(nT) * (g.nt + 1));
    std::vector<std::complex<double>> px(static_cast<size_t>(nKx) * g.nx);
    std::vector<std::complex<double>> py(static_cast<size_t>(nKy) * g.ny);
    for (int j = -lat.jmax; j <= lat.jmax; ++j)
        for (int k = 0; k <= g.nt; ++k)
            pt[static_cast<size_t>(j + lat.jmax) * (g.nt + 1) + k] =
                std::exp(kI * (lat.tau(j) * g.t(k)));
    for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
        for (int i = 0; i < g.nx; ++i)
            px[static_cast<size_t>(kx + lat.kxmax) * g.nx + i] =
                std::exp(kI * (kx * lat.dxi_x * g.x(i)));
    for (int ky = -lat.kymax; ky <= lat.kymax; ++ky)
        for (int j = 0; j < g.ny; ++j)
            py[static_cast<size_t>(ky + lat.kymax) * g.ny + j] =
                std::exp(kI * (ky * lat.dxi_y * g.y(j)));

    const double vol = g.T * ((g.nx - 1) * g.dx) * ((g.ny - 1) * g.dy);
    Field3D out(g.nt + 1, g.ny, g.nx);
    std::vector<std::complex<double>> plane(static_cast<size_t>(g.ny) * g.nx);
    for (int j = -lat.jmax; j <= lat.jmax; ++j) {
        // accumulate the spatial plane for this tau, then spread over time
        std::fill(plane.begin(), plane.end(), std::complex<double>{0.0, 0.0});
        bool nonzero = false;
        for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
            for (int ky = -lat.kymax; ky <= lat.kymax; ++ky) {
                int idx = lat.index(j, kx, ky);
                if (!use[idx] || !cone.in_ball[idx]) continue;
                double tau = lat.tau(j);
                Vec2 xi = lat.xi(kx, ky);
                if (tau * tau + xi.dot(xi) >= R * R) continue;
                std::complex<double> v = vals[idx];
                if (v == std::complex<double>{0.0, 0.0}) continue;
                nonzero = true;
                for (int jy = 0; jy < g.ny; ++jy) {
                    auto vy = v * py[static_cast<size_t>(ky + lat.kymax) * g.ny + jy];
                    auto* row = plane.data() + static_cast<size_t>(jy) * g.nx;
                    const auto* pxr = px.data() + static_cast<size_t>(kx + lat.kxmax) * g.nx;
                    for (int ix = 0; ix < g.nx; ++ix) row[ix] += vy * pxr[ix];
                }
            }
        if (!nonzero) continue;
        for (int k = 0; k <= g.nt; ++k) {
            auto ph = pt[static_cast<size_t>(j + lat.jmax) * (g.nt + 1) + k];
            double* lev = out.level(k);
            for (size_t m = 0; m < plane.size(); ++m) lev[m] += (ph * plane[m]).real();
        }
    }
    for (auto& v : out.v) v /= vol;
    return out;
}

std::vector<Vec2> plan_aperture_directions(const ConeLattice& lat, bool full_circle,
                                           Vec2 omega0, double eps_cap, int sigma) {
    std::vector<Vec2> dirs;
    auto covered = [&](double tau, Vec2 xi) {
        for (const auto& w : dirs)
            if (std::abs(sigma * w.dot(xi) - tau) < 1e-9) return true;
        return false;
    };
    auto in_cap = [&](Vec2 w) {
        if (full_circle) return true;
        double dx = w.x - omega0.x, dy = w.y - omega0.y;
        return std::sqrt(dx * dx + dy * dy) <= eps_cap + 1e-12;
    };
    for (int j = 0; j <= lat.jmax; ++j)
        for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
            for (int ky = -lat.kymax; ky <= lat.kymax; ++ky) {
                if (j == 0 && (kx < 0 || (kx == 0 && ky <= 0))) continue;  // conjugate half
                Vec2 xi = lat.xi(kx, ky);
                double rho = xi.norm();
                if (rho < 1e-12) continue;
                double tau = lat.tau(j);
                if (tau * tau + rho * rho >= lat.R_max * lat.R_max) continue;
                if (tau > rho + 1e-12) continue;  // outside the light cone
                if (covered(tau, xi) || covered(-tau, Vec2{-xi.x, -xi.y})) continue;
                double c = sigma * tau / rho;
                Vec2 d{xi.x / rho, xi.y / rho};
                Vec2 perp{-d.y, d.x};
                double s = std::sqrt(std::max(0.0, 1.0 - c * c));
                Vec2 w1{c * d.x + s * perp.x, c * d.y + s * perp.y};
                Vec2 w2{c * d.x - s * perp.x, c * d.y - s * perp.y};
                if (in_cap(w1))
                    dirs.push_back(w1);
                else if (in_cap(w2))
                    dirs.push_back(w2);
            }
    if (dirs.empty()) fail(Errc::empty_face, "aperture planning produced no directions");
    return dirs;
}

ReconResult reconstruct(const Potential& q1, const Potential& q2, const FacePartition& faces,
                        std::shared_ptr<const SpaceTimeGrid> grid, const ReconOptions& opt) {
    const SpaceTimeGrid& g = *grid;
    ConeLattice lat = ConeLattice::for_grid(g, opt.R);
    double delta = opt.delta > 0.0 ? opt.delta : coupled_delta(opt.lambda, opt.alpha);

    // difference potential (what the pipeline reconstructs)
    Field3D dq(g.nt + 1, g.ny, g.nx);
    for (size_t m = 0; m < dq.v.size(); ++m) dq.v[m] = q2.values.v[m] - q1.values.v[m];
    Potential qdiff = potential_from_field(dq, grid, q1.p_exponent);

    // slice-sign calibration from oracle light-ray data of the difference
    int sigma;
    try {
        sigma = slice_sign();
    } catch (const Error&) {
        YGrid layout;
        layout.h = std::max(g.dx * 2.0, delta / 2.0);
        double reach = 0.5 * g.domain.diameter + g.T + delta;
        layout.x0 = -reach;
        layout.y0 = -reach;
        layout.n1 = static_cast<int>(2 * reach / layout.h) + 1;
        layout.n2 = layout.n1;
        layout.v.assign(static_cast<size_t>(layout.n1) * layout.n2, 0.0);
        double base_angle = std::atan2(faces.omega0.y, faces.omega0.x);
        Vec2 wcal = unit_from_angle(base_angle + std::min(0.5 * faces.epsilon, 0.11));
        for (int b = 0; b < layout.n2; ++b)
            for (int a = 0; a < layout.n1; ++a)
                layout.at(a, b) = lightray_oracle(qdiff, wcal, layout.pos(a, b), 2 * g.nt);
        sigma = calibrate_slice_sign(qdiff, wcal, layout, lat);
        set_slice_sign(sigma);
    }

    std::vector<Vec2> dirs = plan_aperture_directions(lat, opt.full_circle, faces.omega0,
                                                      faces.epsilon, sigma);

    // every lattice xi column inside the ball
    std::vector<Vec2> xis;
    for (int kx = -lat.kxmax; kx <= lat.kxmax; ++kx)
        for (int ky = -lat.kymax; ky <= lat.kymax; ++ky) {
            Vec2 xi = lat.xi(kx, ky);
            if (xi.norm() < lat.R_max) xis.push_back(xi);
        }

    VEstimateOptions vopt;
    vopt.lambda = opt.lambda;
    vopt.delta = delta;
    vopt.mode = opt.mode;
    vopt.alpha = opt.alpha;

    ReconResult res;
    res.delta_used = delta;
    res.sigma = sigma;
    res.n_directions = static_cast<int>(dirs.size());
    std::vector<Slice> slices;
    for (const Vec2& w : dirs) {
        YGrid v = v_sweep(q1, q2, w, faces, grid, vopt);
        res.n_anchor_points += v.n1 * v.n2;
        YGrid rq = rq_estimate(v, delta, opt.alpha);
        slices.push_back(fourier_slice(rq, w, xis, sigma));
    }
    res.cone = assemble_cone(slices, lat, opt.full_circle, faces.omega0, faces.epsilon);
    res.qhat = invert_lowpass(res.cone, opt.R, opt.fill, g);

    double num = 0.0, den = 0.0;
    for (int k = 0; k <= g.nt; ++k) {
        double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double w = g.area_weight(j, i);
                if (w == 0.0) continue;
                double e = res.qhat.at(k, j, i) - qdiff.at(k, j, i);
                num += tw * w * e * e;
                den += tw * w * qdiff.at(k, j, i) * qdiff.at(k, j, i);
            }
    }
    res.rel_l2_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    return res;
}

StabilityFit stability_curve(const Potential& q1, const Potential& p,
                             const std::vector<double>& scales, const FacePartition& faces,
                             std::shared_ptr<const SpaceTimeGrid> grid,
                             const StabilityConfig& cfg) {
    const SpaceTimeGrid& g = *grid;
    // hypothesis of the stability theorem: the perturbation vanishes on Sigma
    double pmax = p.values.max_abs();
    for (int k = 0; k <= g.nt; ++k)
        for (const auto& c : g.boundary_cells)
            if (std::abs(p.at(k, c.j, c.i)) > cfg.thmma_tol * std::max(1.0, pmax))
                fail(Errc::hypothesis_violation,
                     "perturbation does not vanish on the lateral boundary");
    if (!(cfg.gamma_star < std::exp(-1.0)))
        fail(Errc::config_invalid, "gamma_star must be below 1/e for the double-log branch");

    double p_l2 = p.norms().L2;
    StabilityFit fit;
    fit.gamma_star = cfg.gamma_star;
    fit.alpha = q1.alpha();

    for (double s : scales) {
        StabilityPair pair;
        pair.scale = s;
        Field3D mix(g.nt + 1, g.ny, g.nx);
        for (size_t m = 0; m < mix.v.size(); ++m)
            mix.v[m] = q1.values.v[m] + s * p.values.v[m];
        Potential q2 = potential_from_field(std::move(mix), grid, q1.p_exponent);
        if (q1.expr && p.expr) {
            auto f1 = q1.expr->f;
            auto fp = p.expr->f;
            AnalyticExpr e;
            e.name = "mix";
            e.f = [f1, fp, s](double t, double x, double y) {
                return f1(t, x, y) + s * fp(t, x, y);
            };
            q2.expr = e;
        }
        DiffNormEstimate est = diff_norm_estimate(q1, q2, faces, grid, cfg.n_random,
                                                  cfg.go_sweep, cfg.seed);
        pair.gamma_hat = est.gamma;
        pair.l2_diff = std::abs(s) * p_l2;
        if (pair.l2_diff > 0.0 && pair.gamma_hat <= 1e-14) pair.resolution_floor = true;
        fit.pairs.push_back(pair);
    }

    // strict growth of gamma with the scale
    {
        std::vector<StabilityPair> sorted = fit.pairs;
        std::sort(sorted.begin(), sorted.end(),
                  [](const StabilityPair& a, const StabilityPair& b) { return a.scale < b.scale; });
        for (size_t i = 1; i < sorted.size(); ++i)
            if (!(sorted[i].gamma_hat > sorted[i - 1].gamma_hat))
                fit.gamma_strictly_increasing = false;
    }

    for (auto& pair : fit.pairs) {
        pair.in_fit = pair.gamma_hat > 0.0 && pair.gamma_hat < fit.gamma_star &&
                      pair.l2_diff > 0.0;
        if (pair.in_fit)
            fit.fitted_C = std::max(fit.fitted_C,
                                    pair.l2_diff * std::sqrt(std::log(std::abs(
                                                       std::log(pair.gamma_hat)))));
    }
    for (auto& pair : fit.pairs) {
        if (pair.gamma_hat > 0.0 && pair.gamma_hat < std::exp(-1.0)) {
            pair.bound_value =
                fit.fitted_C / std::sqrt(std::log(std::abs(std::log(pair.gamma_hat))));
            pair.slack = pair.bound_value - pair.l2_diff;
        }
    }
    return fit;
}

}  // namespace wp
