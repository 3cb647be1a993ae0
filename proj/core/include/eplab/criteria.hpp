#ifndef EPLAB_CRITERIA_HPP
#define EPLAB_CRITERIA_HPP

#include <optional>
#include <string>
#include <vector>

namespace eplab {

struct Grid1D;
struct FlowState;

/// Physical constants selecting the system variant.
/// k > 0 (attractive coupling), rho_bar >= 0 (background density),
/// gamma > 1 (adiabatic exponent, polytropic runs only; s3 requires >= 2).
struct PhysParams {
    double k = 1.0;
    double rho_bar = 0.0;
    double gamma = 2.0;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

/// Pointwise initial data at a seed point a: density, velocity divergence,
/// vorticity norm, derivative norms and the smallest deformation eigenvalue.
struct PointData {
    double rho0 = 0.0;
    double div_v0 = 0.0;
    double omega0_norm = 0.0;
    double drho0_norm = 0.0;
    double d2rho0_norm = 0.0;
    double ds0_norm = 0.0;
    double d2s0_norm = 0.0;
    double lambda_min = 0.0;
};

/// Membership verdict for one of the blow-up criterion sets. `margins` holds
/// the signed slack (lhs - rhs) of every inequality so sweeps can contour the
/// criterion boundary; `failed` lists the labels of violated conditions.
/// For s2 members `window` carries the bound -4*rho0*div_v0/(k*rho_bar^2),
/// which exceeds t_star by construction.
struct CriterionReport {
    bool member = false;
    std::optional<double> t_star;
    std::vector<std::pair<std::string, double>> margins;
    std::vector<std::string> failed;
    std::optional<double> window;

    double margin(const std::string& label) const;

    bool operator==(const CriterionReport&) const = default;
};

/// Pressureless attractive system: member iff |Omega0| <= tol, rho0 > 0 and
/// -div_v0 >= sqrt(2*k*rho0/3). Members get t_star = sqrt(12/(k*rho0)).
CriterionReport s1_check(const PointData& p, const PhysParams& params,
                         double tol = 1e-12);

/// Background-density system: member iff |Omega0| <= tol, div_v0 < 0,
/// rho0 >= (1/2 + sqrt(3/2))*rho_bar and div_v0^2 exceeds both threshold
/// expressions. Members get t_star = sqrt(12/(k*theta0)), theta0 =
/// rho0 - rho_bar/2, plus the window bound. Requires rho_bar > 0.
CriterionReport s2_check(const PointData& p, const PhysParams& params,
                         double tol = 1e-12);

/// Polytropic system (gamma >= 2): member iff vorticity, density and entropy
/// derivative norms vanish to tol, rho0 <= tol, and lambda_min < 0. Members
/// get t_star = -1/lambda_min.
CriterionReport s3_check(const PointData& p, const PhysParams& params,
                         double tol = 1e-12);

/// Evaluates PointData at seed point a from gridded fields, with the 1D
/// conventions Omega = 0 and lambda_min = dv/dx(a). Derivatives are spectral
/// on periodic grids and centered finite differences otherwise.
/// Throws std::out_of_range when a lies outside the grid domain.
PointData extract_point_data(const FlowState& state, const Grid1D& grid,
                             double a);

}  // namespace eplab

#endif
