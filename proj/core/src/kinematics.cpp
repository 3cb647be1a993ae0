#include "eplab/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eplab {

namespace {

bool all_finite(const Eigen::MatrixXd& M) {
    return M.allFinite();
}

// Index of the last sample with times[i] <= t (t inside range).
std::size_t lower_sample(const std::vector<double>& times, double t) {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times.begin());
    return i == 0 ? 0 : i - 1;
}

}  // namespace

Eigen::MatrixXd MatrixPath::at(double t) const {
    if (times.empty()) throw std::out_of_range("MatrixPath::at: empty path");
    if (t < times.front() || t > times.back())
        throw std::out_of_range("MatrixPath::at: t outside sampled range");
    std::size_t i = lower_sample(times, t);
    if (i + 1 >= times.size()) return matrices.back();
    const double h = times[i + 1] - times[i];
    const double w = (t - times[i]) / h;
    return (1.0 - w) * matrices[i] + w * matrices[i + 1];
}

GradientDecomposition decompose_gradient(const Eigen::MatrixXd& V) {
    if (V.rows() != V.cols() || V.rows() == 0)
        throw std::invalid_argument("decompose_gradient: matrix must be square");
    if (!all_finite(V))
        throw std::invalid_argument("decompose_gradient: non-finite entries");
    GradientDecomposition g;
    g.V = V;
    g.D = 0.5 * (V + V.transpose());
    g.A = 0.5 * (V - V.transpose());
    g.Omega = 2.0 * g.A;
    return g;
}

double frobenius_norm(const Eigen::MatrixXd& M) {
    if (!all_finite(M))
        throw std::invalid_argument("frobenius_norm: non-finite entries");
    return M.norm();
}

std::vector<EigenPair> deformation_eigenpairs(const Eigen::MatrixXd& D) {
    if (D.rows() != D.cols() || D.rows() == 0)
        throw std::invalid_argument("deformation_eigenpairs: matrix must be square");
    if (!all_finite(D))
        throw std::invalid_argument("deformation_eigenpairs: non-finite entries");
    const double asym = (D - D.transpose()).norm();
    if (asym > 1e-12 * (1.0 + D.norm()))
        throw std::invalid_argument(
            "deformation_eigenpairs: matrix asymmetric beyond tolerance");

    const Eigen::MatrixXd S = 0.5 * (D + D.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("deformation_eigenpairs: eigensolver failed");

    std::vector<EigenPair> pairs(static_cast<std::size_t>(S.rows()));
    for (Eigen::Index k = 0; k < S.rows(); ++k) {
        EigenPair p;
        p.lambda = es.eigenvalues()(k);
        p.e = es.eigenvectors().col(k);
        // Sign convention: first nonzero component positive.
        for (Eigen::Index i = 0; i < p.e.size(); ++i) {
            if (p.e(i) != 0.0) {
                if (p.e(i) < 0.0) p.e = -p.e;
                break;
            }
        }
        pairs[static_cast<std::size_t>(k)] = std::move(p);
    }
    return pairs;
}

MatrixPath integrate_vorticity_ode(const MatrixPath& D_path,
                                   const Eigen::MatrixXd& A0, double t_end,
                                   const StepControl& ctrl) {
    if (D_path.times.size() < 2 || D_path.times.size() != D_path.matrices.size())
        throw std::invalid_argument("integrate_vorticity_ode: need >= 2 samples");
    if (t_end < D_path.times.front() || t_end > D_path.times.back())
        throw std::out_of_range("integrate_vorticity_ode: t_end outside path range");
    const Eigen::Index n = A0.rows();
    if (A0.cols() != n)
        throw std::invalid_argument("integrate_vorticity_ode: A0 must be square");
    if ((A0 + A0.transpose()).norm() > 1e-12 * (1.0 + A0.norm()))
        throw std::invalid_argument("integrate_vorticity_ode: A0 not antisymmetric");

    const double t0 = D_path.times.front();
    MatrixPath out;
    if (t_end == t0) {
        out.times.push_back(t0);
        out.matrices.push_back(A0);
        return out;
    }

    auto unpack = [n](const std::vector<double>& y) {
        Eigen::MatrixXd A(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                A(i, j) = y[static_cast<std::size_t>(i * n + j)];
        return A;
    };

    OdeRhs rhs = [&](double t, const std::vector<double>& y,
                     std::vector<double>& dydt) {
        const Eigen::MatrixXd A = unpack(y);
        const Eigen::MatrixXd D = D_path.at(std::clamp(
            t, D_path.times.front(), D_path.times.back()));
        const Eigen::MatrixXd dA = -(D * A + A * D);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                dydt[static_cast<std::size_t>(i * n + j)] = dA(i, j);
    };

    std::vector<double> y(static_cast<std::size_t>(n * n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            y[static_cast<std::size_t>(i * n + j)] = A0(i, j);

    OdeObserver observe = [&](double t, const std::vector<double>& yv) {
        Eigen::MatrixXd A = unpack(yv);
        A = 0.5 * (A - A.transpose().eval());  // re-antisymmetrize
        out.times.push_back(t);
        out.matrices.push_back(std::move(A));
    };

    const StopReason r = integrate_dopri5(rhs, y, t0, t_end, ctrl, observe);
    if (r != StopReason::reached_end)
        throw std::runtime_error("integrate_vorticity_ode: step underflow");
    return out;
}

double gronwall_vorticity_envelope(double A0_norm, const MatrixPath& D_path,
                                   double t) {
    if (A0_norm < 0)
        throw std::invalid_argument("gronwall_vorticity_envelope: A0_norm < 0");
    if (D_path.times.empty())
        throw std::invalid_argument("gronwall_vorticity_envelope: empty path");
    if (t < D_path.times.front() || t > D_path.times.back())
        throw std::out_of_range("gronwall_vorticity_envelope: t outside path range");
    if (A0_norm == 0.0) return 0.0;

    double integral = 0.0;
    double prev_t = D_path.times.front();
    double prev_norm = D_path.matrices.front().norm();
    for (std::size_t i = 1; i < D_path.times.size() && prev_t < t; ++i) {
        const double ti = D_path.times[i];
        const double ni = D_path.matrices[i].norm();
        if (ti <= t) {
            integral += 0.5 * (ti - prev_t) * (prev_norm + ni);
            prev_t = ti;
            prev_norm = ni;
        } else {
            const double w = (t - prev_t) / (ti - prev_t);
            const double nt = (1.0 - w) * prev_norm + w * ni;
            integral += 0.5 * (t - prev_t) * (prev_norm + nt);
            prev_t = t;
        }
    }
    return A0_norm * std::exp(2.0 * integral);
}

}  // namespace eplab
