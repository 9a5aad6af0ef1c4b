#pragma once

#include <memory>
#include <vector>

#include "wp/common.hpp"

namespace wp {

enum class Shape { rectangle, disk };

struct Domain {
    Shape shape = Shape::rectangle;
    // rectangle extents
    double x_min = -1.0, x_max = 1.0, y_min = -1.0, y_max = 1.0;
    // disk
    Vec2 center{0.0, 0.0};
    double radius = 1.0;

    double diameter = 0.0;
    bool contains_origin = false;

    bool inside(double x, double y) const {
        if (shape == Shape::rectangle)
            return x > x_min && x < x_max && y > y_min && y < y_max;
        double dx = x - center.x, dy = y - center.y;
        return dx * dx + dy * dy < radius * radius;
    }

    // outward unit normal of the analytic shape, for a point on (or near) the boundary
    Vec2 normal_at(double x, double y) const;
};

struct DomainSpec {
    Shape shape = Shape::rectangle;
    double x_min = -1.0, x_max = 1.0, y_min = -1.0, y_max = 1.0;
    Vec2 center{0.0, 0.0};
    double radius = 1.0;
};

Domain build_domain(const DomainSpec& spec);

struct BoundaryCell {
    int i = 0, j = 0;     // grid indices
    Vec2 pos;             // node coordinates
    Vec2 normal;          // outward unit normal (analytic shape)
    double weight = 0.0;  // surface quadrature weight (arclength element)
    double arc_s = 0.0;   // arclength parameter along the boundary
};

struct SpaceTimeGrid {
    Domain domain;
    int nx = 0, ny = 0;  // node counts including boundary nodes
    int nt = 0;          // time steps; nt+1 stored levels
    double dx = 0.0, dy = 0.0, dt = 0.0;
    double T = 0.0;
    double cfl_factor = 0.9;

    std::vector<std::uint8_t> interior;   // ny*nx, 1 = node carries the PDE state
    std::vector<std::uint8_t> is_bcell;   // ny*nx, 1 = Dirichlet boundary node
    std::vector<int> bcell_index;         // ny*nx, -1 or index into boundary_cells
    std::vector<BoundaryCell> boundary_cells;

    double x(int i) const { return domain_x0_ + i * dx; }
    double y(int j) const { return domain_y0_ + j * dy; }
    double t(int k) const { return k * dt; }
    int idx(int j, int i) const { return j * nx + i; }
    bool in_domain(int j, int i) const { return interior[idx(j, i)] || is_bcell[idx(j, i)]; }
    double perimeter() const { return perimeter_; }
    double cell_volume() const { return dx * dy * dt; }

    // total measure of Omega covered by the grid (sum of trapezoid weights)
    double area_weight(int j, int i) const;

    // time-refined copy (same spatial layout, nt *= factor)
    std::shared_ptr<SpaceTimeGrid> time_refined(int factor) const;

    bool same_layout(const SpaceTimeGrid& o) const {
        return nx == o.nx && ny == o.ny && nt == o.nt && domain.shape == o.domain.shape;
    }

    double domain_x0_ = 0.0, domain_y0_ = 0.0;
    double perimeter_ = 0.0;
};

std::shared_ptr<SpaceTimeGrid> build_grid(const Domain& domain, int nx, double T,
                                          double cfl_factor);

// Predicate-backed partition of the boundary for a probing direction cap
// {|omega - omega0| <= epsilon}.
struct FacePartition {
    Vec2 omega0;
    double epsilon = 0.25;
    double threshold_r = 0.0;
    bool f_covers_all = false;  // warning flags, not errors
    bool g_covers_all = false;

    bool shadowed(const Vec2& normal) const { return normal.dot(omega0) > threshold_r; }
    bool illuminated(const Vec2& normal) const { return !shadowed(normal); }
    // closed neighborhoods of the shadowed / illuminated faces wide enough for
    // every omega in the cap
    bool in_F(const Vec2& normal) const { return normal.dot(omega0) >= -2.0 * epsilon; }
    bool in_G(const Vec2& normal) const { return normal.dot(omega0) <= 2.0 * epsilon; }
};

FacePartition boundary_faces(const Domain& domain, const SpaceTimeGrid& grid, Vec2 omega0,
                             double epsilon, double r);

}  // namespace wp
