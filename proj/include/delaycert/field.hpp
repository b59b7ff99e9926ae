#pragma once

#include <functional>

#include <Eigen/Dense>

namespace delaycert {

// Autonomous vector field on R^d. The Jacobian callback is optional; when
// absent, jacobian() falls back to central differences, which is accurate
// enough for the monodromy and continuation uses here but slower.
struct VectorField {
    int dimension = 0;
    int smoothness = -1;  // declared C^k class, -1 meaning smooth
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jac;

    Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
    double divergence(const Eigen::VectorXd& x) const { return jacobian(x).trace(); }
};

//   x' = sigma (y - x),  y' = x (rho - z) - y,  z' = x y - beta z
VectorField lorenz_field(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0);

// Planar limit-cycle normal form r' = r (1 - r^2), theta' = 1, embedded in
// R^3 with z' = -z: an attracting unit circle of period 2 pi.
VectorField hopf3d_field();

VectorField linear_field(Eigen::MatrixXd A);

// base + a constant drift vector.
VectorField drifted_field(VectorField base, Eigen::VectorXd drift);

}  // namespace delaycert
