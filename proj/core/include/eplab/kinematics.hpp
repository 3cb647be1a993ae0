#ifndef EPLAB_KINEMATICS_HPP
#define EPLAB_KINEMATICS_HPP

#include <Eigen/Dense>
#include <vector>

#include "eplab/ode.hpp"

namespace eplab {

/// Split of a velocity gradient V = (d_i v^j) into deformation, antisymmetric
/// part and vorticity matrix. Invariants: D + A = V, D = D^T, A = -A^T,
/// Omega = 2A, trace(D) = div v.
struct GradientDecomposition {
    Eigen::MatrixXd V;
    Eigen::MatrixXd D;
    Eigen::MatrixXd A;
    Eigen::MatrixXd Omega;
};

/// Eigenvalue of the deformation tensor with its unit eigenvector.
struct EigenPair {
    double lambda = 0.0;
    Eigen::VectorXd e;
};

/// Time-sampled square matrices, e.g. D(X(a,t),t) along a trajectory.
/// Times strictly increasing, all matrices the same dimension.
struct MatrixPath {
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> matrices;

    /// Linear interpolation between samples. Throws std::out_of_range for t
    /// outside [times.front(), times.back()].
    Eigen::MatrixXd at(double t) const;
};

/// D = (V + V^T)/2, A = (V - V^T)/2, Omega = 2A.
/// Throws std::invalid_argument for non-square or non-finite input.
GradientDecomposition decompose_gradient(const Eigen::MatrixXd& V);

/// sqrt(sum of squared entries). Throws std::invalid_argument on non-finite
/// entries.
double frobenius_norm(const Eigen::MatrixXd& M);

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, each eigenvector
/// normalized with its first nonzero component positive. The input is
/// symmetrized internally; asymmetry beyond 1e-12*(1+|D|) is rejected.
std::vector<EigenPair> deformation_eigenpairs(const Eigen::MatrixXd& D);

/// Integrates dA/dt = -(D A + A D) with D(t) linearly interpolated from
/// D_path, recording A at every accepted step. Antisymmetry is re-enforced
/// after each step by projecting (A - A^T)/2.
MatrixPath integrate_vorticity_ode(const MatrixPath& D_path,
                                   const Eigen::MatrixXd& A0, double t_end,
                                   const StepControl& ctrl = {});

/// |A0| * exp(2 * int_{t0}^{t} |D(tau)| dtau) with the integral evaluated by
/// the trapezoid rule on the path samples (partial last interval by linear
/// interpolation of the norm). Throws std::out_of_range for t outside the
/// path range.
double gronwall_vorticity_envelope(double A0_norm, const MatrixPath& D_path,
                                   double t);

}  // namespace eplab

#endif
