#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wp/potential.hpp"

namespace wp {

// analytic test solution for the weighted-inequality harness; must satisfy
// u = 0 on Sigma and u(0) = u_t(0) = 0
class CarlemanSolution {
public:
    virtual ~CarlemanSolution() = default;
    virtual double value(double t, double x, double y) const = 0;
    virtual double d_t(double t, double x, double y) const = 0;
    virtual Vec2 grad(double t, double x, double y) const = 0;
    virtual double dalembert(double t, double x, double y) const = 0;  // u_tt - Lap u
    virtual std::string id() const = 0;
};

// t^p times a compactly supported spatial bump
class PolyBumpSolution : public CarlemanSolution {
public:
    PolyBumpSolution(double tpow, Vec2 center, double radius, double amp,
                     const std::string& id);
    double value(double t, double x, double y) const override;
    double d_t(double t, double x, double y) const override;
    Vec2 grad(double t, double x, double y) const override;
    double dalembert(double t, double x, double y) const override;
    std::string id() const override { return id_; }

private:
    double tpow_, radius_, amp_;
    Vec2 center_;
    std::string id_;
};

struct CarlemanReport {
    std::string u_id;
    double lambda = 0.0;
    Vec2 omega;
    double final_velocity_term = 0.0;  // lhs
    double shadow_flux_term = 0.0;     // lhs
    double interior_term = 0.0;        // lhs
    double pde_term = 0.0;             // rhs
    double final_value_term = 0.0;     // rhs
    double final_gradient_term = 0.0;  // rhs
    double illum_flux_term = 0.0;      // rhs
    double empirical_C = 0.0;          // lhs total / rhs total; NaN when both vanish
    double lhs_total() const { return final_velocity_term + shadow_flux_term + interior_term; }
    double rhs_total() const {
        return pde_term + final_value_term + final_gradient_term + illum_flux_term;
    }
};

// all seven weighted integrals; weight exponent shifted by `shift` on both
// sides (ratio-invariant); shift NaN = use min over closure of t + w.x
CarlemanReport carleman_terms(const CarlemanSolution& u, const Potential& q, double lambda,
                              Vec2 omega, const SpaceTimeGrid& grid,
                              double shift = std::numeric_limits<double>::quiet_NaN());

struct CarlemanSweep {
    std::vector<CarlemanReport> reports;
    std::vector<double> lambdas;
    std::vector<double> max_C_per_lambda;
};

CarlemanSweep carleman_sweep(const std::vector<std::shared_ptr<CarlemanSolution>>& family,
                             const Potential& q, const std::vector<double>& lambdas, Vec2 omega,
                             const SpaceTimeGrid& grid);

}  // namespace wp
