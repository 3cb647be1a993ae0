#include "eplab/fields.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace eplab {

namespace {

// FFTW's planner is not thread-safe; executions of distinct plans are.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<std::complex<double>> forward_fft(const std::vector<double>& in) {
    const int n = static_cast<int>(in.size());
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
    std::vector<double> work(in);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(
            n, work.data(), reinterpret_cast<fftw_complex*>(out.data()),
            FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

std::vector<double> inverse_fft(std::vector<std::complex<double>> spec, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_c2r_1d(
            n, reinterpret_cast<fftw_complex*>(spec.data()), out.data(),
            FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / n;
    for (double& v : out) v *= scale;
    return out;
}

// (i*kappa)^order applied in place; the Nyquist mode of odd derivatives is
// zeroed (its sine image vanishes on the collocation nodes).
void apply_derivative(std::vector<std::complex<double>>& spec, double length,
                      int n, int order) {
    const double k1 = 2.0 * std::numbers::pi / length;
    for (std::size_t m = 0; m < spec.size(); ++m) {
        const double kappa = k1 * static_cast<double>(m);
        std::complex<double> factor;
        switch (order) {
            case 1: factor = {0.0, kappa}; break;
            case 2: factor = {-kappa * kappa, 0.0}; break;
            case 3: factor = {0.0, -kappa * kappa * kappa}; break;
            default: factor = {1.0, 0.0}; break;
        }
        spec[m] *= factor;
    }
    if (order % 2 == 1 && n % 2 == 0) spec.back() = 0.0;
}

std::vector<double> centered_fd(const std::vector<double>& f, double h,
                                int order) {
    const std::size_t n = f.size();
    std::vector<double> out(n);
    switch (order) {
        case 1: {
            out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
            for (std::size_t i = 1; i + 1 < n; ++i)
                out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
            out[n - 1] =
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
            break;
        }
        case 2: {
            const double h2 = h * h;
            out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
            for (std::size_t i = 1; i + 1 < n; ++i)
                out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
            out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] -
                          f[n - 4]) / h2;
            break;
        }
        case 3: {
            const double h3 = 2.0 * h * h * h;
            auto fwd0 = [&](const double* p) {
                return (-5.0 * p[0] + 18.0 * p[1] - 24.0 * p[2] + 14.0 * p[3] -
                        3.0 * p[4]) / h3;
            };
            auto fwd1 = [&](const double* p) {
                return (-3.0 * p[0] + 10.0 * p[1] - 12.0 * p[2] + 6.0 * p[3] -
                        p[4]) / h3;
            };
            out[0] = fwd0(f.data());
            out[1] = fwd1(f.data());
            for (std::size_t i = 2; i + 2 < n; ++i)
                out[i] = (f[i + 2] - 2.0 * f[i + 1] + 2.0 * f[i - 1] -
                          f[i - 2]) / h3;
            // mirrored one-sided stencils (odd derivative flips sign)
            std::vector<double> r(f.rbegin(), f.rend());
            out[n - 2] = -fwd1(r.data());
            out[n - 1] = -fwd0(r.data());
            break;
        }
        default:
            break;
    }
    return out;
}

}  // namespace

bool Grid1D::contains(double x) const {
    if (!std::isfinite(x)) return false;
    if (periodic) return true;
    return x >= x_min && x <= x_min + (n_cells - 1) * h();
}

void Grid1D::validate() const {
    if (!(x_max > x_min))
        throw std::invalid_argument("Grid1D: x_max must exceed x_min");
    if (n_cells < 8)
        throw std::invalid_argument("Grid1D: n_cells must be >= 8");
}

ScalarField::ScalarField(const Grid1D& g, std::vector<double> v)
    : grid(g), values(std::move(v)) {
    if (values.size() != static_cast<std::size_t>(g.n_cells))
        throw std::invalid_argument("ScalarField: length does not match grid");
}

double ScalarField::mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::fabs(v));
    return m;
}

double ScalarField::integral() const {
    const double h = grid.h();
    double s = 0.0;
    for (double v : values) s += v;
    if (!grid.periodic) s -= 0.5 * (values.front() + values.back());
    return h * s;
}

PoissonSolution poisson_periodic(const ScalarField& source) {
    source.grid.validate();
    if (!source.grid.periodic)
        throw std::invalid_argument("poisson_periodic: grid must be periodic");
    const int n = source.grid.n_cells;
    const double L = source.grid.length();
    const double k1 = 2.0 * std::numbers::pi / L;

    auto spec = forward_fft(source.values);
    spec[0] = 0.0;  // remove the mean; gauge phi's zero mode to 0
    auto phi_hat = spec;
    for (std::size_t m = 1; m < phi_hat.size(); ++m) {
        const double kappa = k1 * static_cast<double>(m);
        phi_hat[m] /= -kappa * kappa;
    }

    auto grad_hat = phi_hat;
    apply_derivative(grad_hat, L, n, 1);
    auto hess_hat = phi_hat;
    apply_derivative(hess_hat, L, n, 2);

    PoissonSolution sol;
    sol.phi = ScalarField(source.grid, inverse_fft(std::move(phi_hat), n));
    sol.grad_phi = ScalarField(source.grid, inverse_fft(std::move(grad_hat), n));
    sol.hessian = ScalarField(source.grid, inverse_fft(std::move(hess_hat), n));
    return sol;
}

PoissonSolution poisson_freespace(const ScalarField& source) {
    source.grid.validate();
    if (source.grid.periodic)
        throw std::invalid_argument("poisson_freespace: grid must be non-periodic");
    const std::size_t n = source.size();
    const double h = source.grid.h();
    const double peak = source.max_abs();
    if (peak > 0 && (std::fabs(source.values.front()) > 1e-12 * peak ||
                     std::fabs(source.values.back()) > 1e-12 * peak))
        throw domain_too_small_error(
            "poisson_freespace: source has not decayed at the grid boundary");

    // Cumulative mass left of each node by the trapezoid rule.
    std::vector<double> cum(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        cum[i] = cum[i - 1] + 0.5 * h * (source[i - 1] + source[i]);
    const double total = cum[n - 1];

    PoissonSolution sol;
    sol.grad_phi = ScalarField(source.grid);
    for (std::size_t i = 0; i < n; ++i)
        sol.grad_phi[i] = cum[i] - 0.5 * total;

    sol.phi = ScalarField(source.grid);
    for (std::size_t i = 1; i < n; ++i)
        sol.phi[i] = sol.phi[i - 1] +
                     0.5 * h * (sol.grad_phi[i - 1] + sol.grad_phi[i]);

    sol.hessian = source;
    return sol;
}

ScalarField spectral_derivative(const ScalarField& f, int order) {
    if (order < 1 || order > 3)
        throw std::invalid_argument("spectral_derivative: order must be 1, 2 or 3");
    f.grid.validate();
    if (f.grid.periodic) {
        auto spec = forward_fft(f.values);
        apply_derivative(spec, f.grid.length(), f.grid.n_cells, order);
        return ScalarField(f.grid,
                           inverse_fft(std::move(spec), f.grid.n_cells));
    }
    return ScalarField(f.grid, centered_fd(f.values, f.grid.h(), order));
}

ScalarField dealias_23(const ScalarField& f) {
    if (!f.grid.periodic)
        throw std::invalid_argument("dealias_23: grid must be periodic");
    const int n = f.grid.n_cells;
    auto spec = forward_fft(f.values);
    const std::size_t cut = static_cast<std::size_t>(n / 3);
    for (std::size_t m = cut + 1; m < spec.size(); ++m) spec[m] = 0.0;
    return ScalarField(f.grid, inverse_fft(std::move(spec), n));
}

double sample_field(const ScalarField& f, double x) {
    const Grid1D& g = f.grid;
    const int n = g.n_cells;
    const double h = g.h();

    double s;  // node-index coordinate of x
    long i;    // stencil anchor: nodes i-1, i, i+1, i+2
    if (g.periodic) {
        if (!std::isfinite(x))
            throw std::out_of_range("sample_field: non-finite position");
        s = std::fmod((x - g.x_min) / h, static_cast<double>(n));
        if (s < 0) s += n;
        i = static_cast<long>(std::floor(s));
        if (i >= n) i -= n;
    } else {
        if (!g.contains(x))
            throw std::out_of_range("sample_field: x outside grid domain");
        s = (x - g.x_min) / h;
        i = std::clamp(static_cast<long>(std::floor(s)), 1L,
                       static_cast<long>(n) - 3L);
    }
    const double u = s - static_cast<double>(i);

    auto value = [&](long j) {
        if (g.periodic) {
            long m = (j % n + n) % n;
            return f.values[static_cast<std::size_t>(m)];
        }
        return f.values[static_cast<std::size_t>(j)];
    };
    const double fm1 = value(i - 1), f0 = value(i), f1 = value(i + 1),
                 f2 = value(i + 2);
    const double wm1 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    const double w0 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    const double w1 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    const double w2 = (u + 1.0) * u * (u - 1.0) / 6.0;
    return wm1 * fm1 + w0 * f0 + w1 * f1 + w2 * f2;
}

}  // namespace eplab
