#ifndef EPLAB_FIELDS_HPP
#define EPLAB_FIELDS_HPP

#include <stdexcept>
#include <vector>

namespace eplab {

/// A free-space source that has not decayed at the grid boundary.
struct domain_too_small_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform 1D grid of n_cells nodes x_i = x_min + i*h, h = (x_max-x_min)/n.
/// Periodic grids identify x_max with x_min.
struct Grid1D {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_cells = 8;
    bool periodic = true;

    double h() const { return (x_max - x_min) / n_cells; }
    double length() const { return x_max - x_min; }
    double node(int i) const { return x_min + i * h(); }
    /// Valid sampling domain: anywhere (mod period) when periodic, the node
    /// span [x_min, x_min + (n-1)h] otherwise.
    bool contains(double x) const;
    void validate() const;

    bool operator==(const Grid1D&) const = default;
};

/// Node samples of a scalar field over a Grid1D.
struct ScalarField {
    Grid1D grid;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(const Grid1D& g, double fill = 0.0)
        : grid(g), values(static_cast<std::size_t>(g.n_cells), fill) {}
    ScalarField(const Grid1D& g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    double mean() const;
    double max_abs() const;
    /// Trapezoid integral over the node span (periodic: h * sum).
    double integral() const;
};

/// Potential, its gradient and second derivative. The force field of the
/// Euler-Poisson systems is -k * grad_phi.
struct PoissonSolution {
    ScalarField phi;
    ScalarField grad_phi;
    ScalarField hessian;
};

/// Solves phi'' = source - mean(source) by discrete Fourier transform with
/// the zero mode of phi gauged to 0. Exact for band-limited sources.
/// Throws std::invalid_argument on non-periodic grids.
PoissonSolution poisson_periodic(const ScalarField& source);

/// Solves phi'' = source on the line with the symmetric fundamental-solution
/// gauge: phi_x(x) = (cumulative mass left of x - mass right of x)/2 by
/// cumulative trapezoid, phi anchored to 0 at x_min. Requires the source to
/// be compactly supported inside the grid (boundary values <= 1e-12 * max).
PoissonSolution poisson_freespace(const ScalarField& source);

/// Derivative of order 1..3: spectral on periodic grids, centered
/// second-order finite differences (one-sided at the boundary) otherwise.
ScalarField spectral_derivative(const ScalarField& f, int order);

/// Cubic Lagrange interpolation through the four nearest nodes, with
/// periodic wrap when applicable. Throws std::out_of_range outside a
/// non-periodic domain.
double sample_field(const ScalarField& f, double x);

/// 2/3-rule low-pass filter (periodic grids): zeroes modes above n/3.
ScalarField dealias_23(const ScalarField& f);

}  // namespace eplab

#endif
