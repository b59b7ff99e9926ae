#include "delaycert/field.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace delaycert {

Eigen::VectorXd VectorField::eval(const Eigen::VectorXd& x) const {
    if (!f) throw std::logic_error("VectorField: evaluation callback missing");
    if (x.size() != dimension) throw std::invalid_argument("VectorField: dimension mismatch");
    Eigen::VectorXd v = f(x);
    if (v.size() != dimension || !v.allFinite())
        throw std::runtime_error("VectorField: non-finite or mis-sized evaluation");
    return v;
}

Eigen::MatrixXd VectorField::jacobian(const Eigen::VectorXd& x) const {
    if (x.size() != dimension) throw std::invalid_argument("VectorField: dimension mismatch");
    if (jac) {
        Eigen::MatrixXd J = jac(x);
        if (J.rows() != dimension || J.cols() != dimension || !J.allFinite())
            throw std::runtime_error("VectorField: non-finite or mis-sized Jacobian");
        return J;
    }
    Eigen::MatrixXd J(dimension, dimension);
    for (int j = 0; j < dimension; ++j) {
        const double h = 1e-6 * (1.0 + std::fabs(x[j]));
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        J.col(j) = (eval(xp) - eval(xm)) / (2.0 * h);
    }
    return J;
}

VectorField lorenz_field(double sigma, double rho, double beta) {
    VectorField vf;
    vf.dimension = 3;
    vf.f = [=](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(3);
        v << sigma * (x[1] - x[0]), x[0] * (rho - x[2]) - x[1], x[0] * x[1] - beta * x[2];
        return v;
    };
    vf.jac = [=](const Eigen::VectorXd& x) {
        Eigen::MatrixXd J(3, 3);
        J << -sigma, sigma, 0.0,
             rho - x[2], -1.0, -x[0],
             x[1], x[0], -beta;
        return J;
    };
    return vf;
}

VectorField hopf3d_field() {
    VectorField vf;
    vf.dimension = 3;
    vf.f = [](const Eigen::VectorXd& x) {
        const double g = 1.0 - x[0] * x[0] - x[1] * x[1];
        Eigen::VectorXd v(3);
        v << x[0] * g - x[1], x[1] * g + x[0], -x[2];
        return v;
    };
    vf.jac = [](const Eigen::VectorXd& x) {
        const double g = 1.0 - x[0] * x[0] - x[1] * x[1];
        Eigen::MatrixXd J(3, 3);
        J << g - 2.0 * x[0] * x[0], -2.0 * x[0] * x[1] - 1.0, 0.0,
             -2.0 * x[0] * x[1] + 1.0, g - 2.0 * x[1] * x[1], 0.0,
             0.0, 0.0, -1.0;
        return J;
    };
    return vf;
}

VectorField linear_field(Eigen::MatrixXd A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("linear_field: matrix must be square");
    VectorField vf;
    vf.dimension = static_cast<int>(A.rows());
    auto Ap = std::make_shared<Eigen::MatrixXd>(std::move(A));
    vf.f = [Ap](const Eigen::VectorXd& x) -> Eigen::VectorXd { return (*Ap) * x; };
    vf.jac = [Ap](const Eigen::VectorXd&) -> Eigen::MatrixXd { return *Ap; };
    return vf;
}

VectorField drifted_field(VectorField base, Eigen::VectorXd drift) {
    if (drift.size() != base.dimension)
        throw std::invalid_argument("drifted_field: drift dimension mismatch");
    VectorField vf;
    vf.dimension = base.dimension;
    vf.smoothness = base.smoothness;
    auto b = std::make_shared<VectorField>(std::move(base));
    auto dr = std::make_shared<Eigen::VectorXd>(std::move(drift));
    vf.f = [b, dr](const Eigen::VectorXd& x) -> Eigen::VectorXd { return b->eval(x) + *dr; };
    vf.jac = [b](const Eigen::VectorXd& x) -> Eigen::MatrixXd { return b->jacobian(x); };
    return vf;
}

}  // namespace delaycert
