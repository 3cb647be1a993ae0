#include "eplab/criteria.hpp"

#include <cmath>
#include <stdexcept>

#include "eplab/fields.hpp"
#include "eplab/solver.hpp"

namespace eplab {

void PhysParams::validate() const {
    if (!(k > 0.0) || !std::isfinite(k))
        throw std::invalid_argument("k must be positive");
    if (!(rho_bar >= 0.0) || !std::isfinite(rho_bar))
        throw std::invalid_argument("rho_bar must be nonnegative");
    if (!(gamma > 1.0) || !std::isfinite(gamma))
        throw std::invalid_argument("gamma must exceed 1");
}

double CriterionReport::margin(const std::string& label) const {
    for (const auto& [l, v] : margins)
        if (l == label) return v;
    throw std::out_of_range("CriterionReport: no margin labelled " + label);
}

namespace {

void add_condition(CriterionReport& r, const std::string& label, double slack,
                   bool ok) {
    r.margins.emplace_back(label, slack);
    if (!ok) r.failed.push_back(label);
}

void validate_point(const PointData& p) {
    for (double v : {p.rho0, p.omega0_norm, p.drho0_norm, p.d2rho0_norm,
                     p.ds0_norm, p.d2s0_norm})
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("PointData norm fields must be >= 0");
    if (!std::isfinite(p.div_v0) || !std::isfinite(p.lambda_min))
        throw std::invalid_argument("PointData has non-finite entries");
}

}  // namespace

CriterionReport s1_check(const PointData& p, const PhysParams& params,
                         double tol) {
    params.validate();
    validate_point(p);
    if (tol < 0) throw std::invalid_argument("tol must be >= 0");

    CriterionReport r;
    add_condition(r, "vorticity", tol - p.omega0_norm, p.omega0_norm <= tol);
    // rho0 > 0 strictly: rho0 = 0 would make the divergence threshold 0 and
    // the bound t* infinite.
    add_condition(r, "density-positive", p.rho0, p.rho0 > 0.0);
    const double threshold = std::sqrt(2.0 * params.k * p.rho0 / 3.0);
    add_condition(r, "divergence-threshold", -p.div_v0 - threshold,
                  -p.div_v0 >= threshold && p.rho0 > 0.0);
    r.member = r.failed.empty();
    if (r.member) r.t_star = std::sqrt(12.0 / (params.k * p.rho0));
    return r;
}

CriterionReport s2_check(const PointData& p, const PhysParams& params,
                         double tol) {
    params.validate();
    validate_point(p);
    if (tol < 0) throw std::invalid_argument("tol must be >= 0");
    if (params.rho_bar == 0.0)
        throw std::invalid_argument(
            "s2_check requires rho_bar > 0 (use s1_check for rho_bar = 0)");

    const double rb = params.rho_bar;
    const double k = params.k;
    const double floor = (0.5 + std::sqrt(1.5)) * rb;
    const double theta0 = p.rho0 - 0.5 * rb;

    CriterionReport r;
    add_condition(r, "vorticity", tol - p.omega0_norm, p.omega0_norm <= tol);
    add_condition(r, "divergence-sign", -p.div_v0, p.div_v0 < 0.0);
    add_condition(r, "density-floor", p.rho0 - floor, p.rho0 >= floor);

    // Thresholds are well defined only above the floor (theta0 > 0 there);
    // below it the membership already failed.
    double thr = 0.0;
    if (p.rho0 > 0.0 && theta0 > 0.0) {
        const double t1 = k * theta0 * (4.0 * theta0 * theta0 - 3.0 * rb * rb) /
                          (6.0 * p.rho0 * p.rho0);
        const double t2 = 3.0 * k * rb * rb * rb * rb /
                          (4.0 * p.rho0 * p.rho0 * theta0);
        thr = std::max(t1, t2);
        const double d2 = p.div_v0 * p.div_v0;
        add_condition(r, "divergence-threshold", d2 - thr, d2 > thr);
    } else {
        add_condition(r, "divergence-threshold", -1.0, false);
    }

    r.member = r.failed.empty();
    if (r.member) {
        r.t_star = std::sqrt(12.0 / (k * theta0));
        r.window = -4.0 * p.rho0 * p.div_v0 / (k * rb * rb);
        if (!(*r.window > *r.t_star))
            throw std::logic_error("s2_check: window bound must exceed t_star");
    }
    return r;
}

CriterionReport s3_check(const PointData& p, const PhysParams& params,
                         double tol) {
    params.validate();
    validate_point(p);
    if (tol < 0) throw std::invalid_argument("tol must be >= 0");
    if (!(params.gamma >= 2.0))
        throw std::invalid_argument("s3_check requires gamma >= 2");

    CriterionReport r;
    add_condition(r, "vorticity", tol - p.omega0_norm, p.omega0_norm <= tol);
    add_condition(r, "vacuum", tol - p.rho0, p.rho0 <= tol);
    add_condition(r, "density-gradient", tol - p.drho0_norm,
                  p.drho0_norm <= tol);
    add_condition(r, "density-hessian", tol - p.d2rho0_norm,
                  p.d2rho0_norm <= tol);
    add_condition(r, "entropy-gradient", tol - p.ds0_norm, p.ds0_norm <= tol);
    add_condition(r, "entropy-hessian", tol - p.d2s0_norm, p.d2s0_norm <= tol);
    add_condition(r, "negative-eigenvalue", -p.lambda_min, p.lambda_min < 0.0);
    r.member = r.failed.empty();
    if (r.member) r.t_star = -1.0 / p.lambda_min;
    return r;
}

PointData extract_point_data(const FlowState& state, const Grid1D& grid,
                             double a) {
    if (!grid.contains(a))
        throw std::out_of_range("extract_point_data: seed outside grid domain");

    const ScalarField drho = spectral_derivative(state.rho, 1);
    const ScalarField d2rho = spectral_derivative(state.rho, 2);
    const ScalarField dv = spectral_derivative(state.v, 1);

    PointData p;
    p.rho0 = sample_field(state.rho, a);
    p.div_v0 = sample_field(dv, a);
    p.lambda_min = p.div_v0;  // smallest (only) eigenvalue of D in 1D
    p.omega0_norm = 0.0;      // Omega vanishes identically in 1D
    p.drho0_norm = std::fabs(sample_field(drho, a));
    p.d2rho0_norm = std::fabs(sample_field(d2rho, a));
    if (state.S) {
        const ScalarField ds = spectral_derivative(*state.S, 1);
        const ScalarField d2s = spectral_derivative(*state.S, 2);
        p.ds0_norm = std::fabs(sample_field(ds, a));
        p.d2s0_norm = std::fabs(sample_field(d2s, a));
    }
    // Sampled density can dip epsilon-negative near vacuum points.
    p.rho0 = std::max(0.0, p.rho0);
    return p;
}

}  // namespace eplab
