#include "wp/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace wp {

Vec2 Domain::normal_at(double x, double y) const {
    if (shape == Shape::disk) {
        double dx = x - center.x, dy = y - center.y;
        double r = std::sqrt(dx * dx + dy * dy);
        if (r < 1e-14) return {1.0, 0.0};
        return {dx / r, dy / r};
    }
    // rectangle: pick the closest face; corners get the normalized diagonal
    double dl = x - x_min, dr = x_max - x, db = y - y_min, dt = y_max - y;
    double m = std::min(std::min(dl, dr), std::min(db, dt));
    Vec2 n{0.0, 0.0};
    const double tol = 1e-12 * diameter;
    if (dl <= m + tol) n = n + Vec2{-1.0, 0.0};
    if (dr <= m + tol) n = n + Vec2{1.0, 0.0};
    if (db <= m + tol) n = n + Vec2{0.0, -1.0};
    if (dt <= m + tol) n = n + Vec2{0.0, 1.0};
    double len = n.norm();
    if (len < 1e-14) return {1.0, 0.0};
    return {n.x / len, n.y / len};
}

Domain build_domain(const DomainSpec& spec) {
    Domain d;
    d.shape = spec.shape;
    if (spec.shape == Shape::rectangle) {
        if (!(spec.x_max > spec.x_min) || !(spec.y_max > spec.y_min))
            fail(Errc::degenerate_extents, "rectangle extents are degenerate");
        d.x_min = spec.x_min;
        d.x_max = spec.x_max;
        d.y_min = spec.y_min;
        d.y_max = spec.y_max;
        double w = d.x_max - d.x_min, h = d.y_max - d.y_min;
        d.diameter = std::sqrt(w * w + h * h);
    } else {
        if (!(spec.radius > 0.0)) fail(Errc::degenerate_extents, "disk radius must be positive");
        d.center = spec.center;
        d.radius = spec.radius;
        d.diameter = 2.0 * spec.radius;
    }
    d.contains_origin = d.inside(0.0, 0.0);
    if (!d.contains_origin)
        fail(Errc::origin_not_interior, "the origin must be strictly interior to the domain");
    return d;
}

namespace {

// arclength parameter of a boundary point, measured counterclockwise
double rect_arc(const Domain& d, double x, double y) {
    double w = d.x_max - d.x_min, h = d.y_max - d.y_min;
    double dl = x - d.x_min, dr = d.x_max - x, db = y - d.y_min, dt = d.y_max - y;
    double m = std::min(std::min(dl, dr), std::min(db, dt));
    if (db <= m + 1e-15) return dl;                    // bottom, left->right
    if (dr <= m + 1e-15) return w + db;                // right, bottom->top
    if (dt <= m + 1e-15) return w + h + dr;            // top, right->left
    return 2.0 * w + h + dt;                           // left, top->bottom
}

}  // namespace

double SpaceTimeGrid::area_weight(int j, int i) const {
    if (!in_domain(j, i)) return 0.0;
    double w = dx * dy;
    if (domain.shape == Shape::rectangle) {
        if (i == 0 || i == nx - 1) w *= 0.5;
        if (j == 0 || j == ny - 1) w *= 0.5;
    }
    return w;
}

std::shared_ptr<SpaceTimeGrid> SpaceTimeGrid::time_refined(int factor) const {
    auto g = std::make_shared<SpaceTimeGrid>(*this);
    g->nt = nt * factor;
    g->dt = T / g->nt;
    return g;
}

std::shared_ptr<SpaceTimeGrid> build_grid(const Domain& domain, int nx, double T,
                                          double cfl_factor) {
    if (nx < 16) fail(Errc::grid_too_coarse, "nx must be at least 16");
    if (!(T > 0.0)) fail(Errc::config_invalid, "T must be positive");
    if (!(cfl_factor > 0.0) || cfl_factor > 0.9)
        fail(Errc::config_invalid, "cfl_factor must lie in (0, 0.9]");

    auto g = std::make_shared<SpaceTimeGrid>();
    g->domain = domain;
    g->nx = nx;
    g->T = T;
    g->cfl_factor = cfl_factor;

    double x0, x1, y0, y1;
    if (domain.shape == Shape::rectangle) {
        x0 = domain.x_min; x1 = domain.x_max;
        y0 = domain.y_min; y1 = domain.y_max;
    } else {
        x0 = domain.center.x - domain.radius; x1 = domain.center.x + domain.radius;
        y0 = domain.center.y - domain.radius; y1 = domain.center.y + domain.radius;
    }
    g->dx = (x1 - x0) / (nx - 1);
    g->ny = static_cast<int>(std::lround((y1 - y0) / g->dx)) + 1;
    if (g->ny < 16) g->ny = 16;
    g->dy = (y1 - y0) / (g->ny - 1);
    g->domain_x0_ = x0;
    g->domain_y0_ = y0;

    double dt_max = cfl_factor * std::min(g->dx, g->dy) / std::sqrt(2.0);
    double nt_real = std::ceil(T / dt_max);
    if (nt_real > 1e7) fail(Errc::nt_overflow, "time step count exceeds the desk-scale guard");
    g->nt = static_cast<int>(nt_real);
    g->dt = T / g->nt;

    const int nxy = g->nx * g->ny;
    g->interior.assign(nxy, 0);
    g->is_bcell.assign(nxy, 0);
    g->bcell_index.assign(nxy, -1);

    std::vector<std::uint8_t> in(nxy, 0);
    for (int j = 0; j < g->ny; ++j)
        for (int i = 0; i < g->nx; ++i) {
            bool inside;
            if (domain.shape == Shape::rectangle) {
                inside = true;  // grid covers the rectangle exactly
            } else {
                inside = domain.inside(g->x(i), g->y(j));
            }
            in[g->idx(j, i)] = inside ? 1 : 0;
        }

    auto is_boundary_node = [&](int j, int i) {
        if (!in[g->idx(j, i)]) return false;
        if (domain.shape == Shape::rectangle)
            return i == 0 || i == g->nx - 1 || j == 0 || j == g->ny - 1;
        if (i == 0 || i == g->nx - 1 || j == 0 || j == g->ny - 1) return true;
        return !in[g->idx(j, i - 1)] || !in[g->idx(j, i + 1)] || !in[g->idx(j - 1, i)] ||
               !in[g->idx(j + 1, i)];
    };

    for (int j = 0; j < g->ny; ++j)
        for (int i = 0; i < g->nx; ++i) {
            int id = g->idx(j, i);
            if (!in[id]) continue;
            if (is_boundary_node(j, i)) {
                g->is_bcell[id] = 1;
                BoundaryCell c;
                c.i = i;
                c.j = j;
                c.pos = {g->x(i), g->y(j)};
                c.normal = domain.normal_at(c.pos.x, c.pos.y);
                if (domain.shape == Shape::rectangle) {
                    bool xface = (i == 0 || i == g->nx - 1);
                    bool yface = (j == 0 || j == g->ny - 1);
                    if (xface && yface)
                        c.weight = 0.5 * (g->dx + g->dy);
                    else
                        c.weight = xface ? g->dy : g->dx;
                    c.arc_s = rect_arc(domain, c.pos.x, c.pos.y);
                } else {
                    // exposed staircase facets projected onto the analytic surface
                    auto exterior = [&](int jj, int ii) {
                        if (ii < 0 || ii >= g->nx || jj < 0 || jj >= g->ny) return true;
                        return in[g->idx(jj, ii)] == 0;
                    };
                    int facets_x = (exterior(j, i - 1) ? 1 : 0) + (exterior(j, i + 1) ? 1 : 0);
                    int facets_y = (exterior(j - 1, i) ? 1 : 0) + (exterior(j + 1, i) ? 1 : 0);
                    c.weight = facets_x * std::abs(c.normal.x) * g->dy +
                               facets_y * std::abs(c.normal.y) * g->dx;
                    c.arc_s = domain.radius *
                              std::fmod(std::atan2(c.pos.y - domain.center.y,
                                                   c.pos.x - domain.center.x) +
                                            2.0 * M_PI,
                                        2.0 * M_PI);
                }
                g->bcell_index[id] = static_cast<int>(g->boundary_cells.size());
                g->boundary_cells.push_back(c);
            } else {
                g->interior[id] = 1;
            }
        }

    g->perimeter_ = 0.0;
    for (const auto& c : g->boundary_cells) g->perimeter_ += c.weight;
    return g;
}

FacePartition boundary_faces(const Domain& domain, const SpaceTimeGrid& grid, Vec2 omega0,
                             double epsilon, double r) {
    if (!(epsilon > 0.0) || epsilon >= 1.0)
        fail(Errc::invalid_epsilon, "epsilon must lie in (0,1)");
    double n0 = omega0.norm();
    if (n0 < 1e-14) fail(Errc::config_invalid, "omega0 must be a nonzero direction");
    FacePartition fp;
    fp.omega0 = {omega0.x / n0, omega0.y / n0};
    fp.epsilon = epsilon;
    fp.threshold_r = r;

    int nF = 0, nG = 0, nSh = 0, nIl = 0;
    for (const auto& c : grid.boundary_cells) {
        if (fp.in_F(c.normal)) ++nF;
        if (fp.in_G(c.normal)) ++nG;
        if (fp.shadowed(c.normal)) ++nSh;
        else ++nIl;
    }
    const int nb = static_cast<int>(grid.boundary_cells.size());
    if (nF == 0 || nG == 0) fail(Errc::empty_face, "input or measurement face is empty");
    if (nSh == 0 || nIl == 0)
        fail(Errc::empty_face, "shadowed/illuminated split is empty for this (omega, r)");
    fp.f_covers_all = (nF == nb);
    fp.g_covers_all = (nG == nb);
    (void)domain;
    return fp;
}

}  // namespace wp
