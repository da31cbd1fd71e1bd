#include "fopid/state_space.hpp"

#include <limits>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

namespace fopid {

DiscreteLti discretize_zoh(const StateSpaced& sys, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("discretize_zoh: dt must be positive");
    const auto n = sys.order(), m = sys.inputs();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = sys.A * dt;
    aug.topRightCorner(n, m) = sys.B * dt;
    const Eigen::MatrixXd E = aug.exp();
    DiscreteLti out;
    out.Phi = E.topLeftCorner(n, n);
    out.Gamma = E.topRightCorner(n, m);
    out.C = sys.C;
    out.D = sys.D;
    out.dt = dt;
    return out;
}

double spectral_abscissa(const StateSpaced& sys) {
    if (sys.order() == 0) return -std::numeric_limits<double>::infinity();
    if (!sys.A.allFinite()) return std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(sys.A, false);
    if (solver.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    return solver.eigenvalues().real().maxCoeff();
}

bool is_stable(const StateSpaced& sys, double margin) { return spectral_abscissa(sys) < -margin; }

RealVector simulate_zoh(const DiscreteLti& sys, std::span<const double> input, const RealVector* x0) {
    const auto n = sys.Phi.rows();
    RealVector x = x0 ? *x0 : RealVector::Zero(n);
    if (x.size() != n) throw std::invalid_argument("simulate_zoh: initial state has wrong size");
    RealVector y(static_cast<Eigen::Index>(input.size()));
    const RealVector c = sys.C.row(0).transpose();
    const RealVector g = n > 0 ? RealVector(sys.Gamma.col(0)) : RealVector();
    const double d = sys.D(0, 0);
    RealVector next(n);
    for (std::size_t k = 0; k < input.size(); ++k) {
        y[static_cast<Eigen::Index>(k)] = c.dot(x) + d * input[k];
        if (n > 0) {
            next.noalias() = sys.Phi * x;
            next += g * input[k];
            x.swap(next);
        }
    }
    return y;
}

RealVector step_response(const StateSpaced& sys, double dt, std::size_t samples) {
    const std::vector<double> ones(samples, 1.0);
    return simulate_zoh(discretize_zoh(sys, dt), ones);
}

RealVector impulse_response(const StateSpaced& sys, double dt, std::size_t samples) {
    const DiscreteLti d = discretize_zoh(sys, dt);
    const std::vector<double> zeros(samples, 0.0);
    const RealVector x0 = sys.B.col(0);
    DiscreteLti free = d;
    free.D.setZero();
    return simulate_zoh(free, zeros, &x0);
}

StateSpaced realize_tf(std::span<const double> num, std::span<const double> den) {
    std::size_t lead = 0;
    while (lead < den.size() && den[lead] == 0.0) ++lead;
    if (lead == den.size()) throw std::invalid_argument("realize_tf: zero denominator");
    den = den.subspan(lead);
    std::size_t nlead = 0;
    while (nlead + 1 < num.size() && num[nlead] == 0.0) ++nlead;
    num = num.subspan(nlead);
    if (num.size() > den.size()) throw std::invalid_argument("realize_tf: improper transfer function");

    const auto n = static_cast<Eigen::Index>(den.size() - 1);
    const double a0 = den[0];
    std::vector<double> b(den.size(), 0.0);
    std::copy(num.begin(), num.end(), b.begin() + static_cast<std::ptrdiff_t>(den.size() - num.size()));
    for (auto& v : b) v /= a0;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
    Eigen::MatrixXd C(1, n);
    Eigen::MatrixXd D(1, 1);
    D(0, 0) = b[0];
    for (Eigen::Index j = 0; j < n; ++j) {
        const double aj = den[static_cast<std::size_t>(j) + 1] / a0;
        A(0, j) = -aj;
        C(0, j) = b[static_cast<std::size_t>(j) + 1] - b[0] * aj;
    }
    for (Eigen::Index i = 1; i < n; ++i) A(i, i - 1) = 1.0;
    if (n > 0) B(0, 0) = 1.0;
    return {A, B, C, D};
}

}  // namespace fopid
