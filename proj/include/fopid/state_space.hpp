#ifndef FOPID_STATE_SPACE_HPP
#define FOPID_STATE_SPACE_HPP

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "fopid/numerics.hpp"

namespace fopid {

/// Continuous-time LTI system x' = A x + B u, y = C x + D u.
template <typename Scalar>
struct StateSpace {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;

    StateSpace() : StateSpace(Matrix(0, 0), Matrix(0, 1), Matrix(1, 0), Matrix::Zero(1, 1)) {}
    StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
        : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
        if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows() ||
            D.rows() != C.rows() || D.cols() != B.cols()) {
            throw std::invalid_argument("StateSpace: inconsistent dimensions");
        }
    }

    static StateSpace gain(Scalar k) {
        Matrix d(1, 1);
        d(0, 0) = k;
        return StateSpace(Matrix(0, 0), Matrix(0, 1), Matrix(1, 0), d);
    }

    static StateSpace integrator() {
        return StateSpace(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Zero(1, 1));
    }

    Eigen::Index order() const { return A.rows(); }
    Eigen::Index inputs() const { return B.cols(); }
    Eigen::Index outputs() const { return C.rows(); }
    bool is_siso() const { return inputs() == 1 && outputs() == 1; }
};

using StateSpaced = StateSpace<double>;

/// Cascade: the output of `first` drives `second`.
template <typename Scalar>
StateSpace<Scalar> series(const StateSpace<Scalar>& first, const StateSpace<Scalar>& second) {
    using M = typename StateSpace<Scalar>::Matrix;
    if (first.outputs() != second.inputs()) throw std::invalid_argument("series: dimension mismatch");
    const auto n1 = first.order(), n2 = second.order();
    M A = M::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = first.A;
    A.bottomLeftCorner(n2, n1) = second.B * first.C;
    A.bottomRightCorner(n2, n2) = second.A;
    M B(n1 + n2, first.inputs());
    B << first.B, second.B * first.D;
    M C(second.outputs(), n1 + n2);
    C << second.D * first.C, second.C;
    return {A, B, C, second.D * first.D};
}

/// Sum of two systems sharing input and output dimensions.
template <typename Scalar>
StateSpace<Scalar> parallel(const StateSpace<Scalar>& a, const StateSpace<Scalar>& b) {
    using M = typename StateSpace<Scalar>::Matrix;
    if (a.inputs() != b.inputs() || a.outputs() != b.outputs()) {
        throw std::invalid_argument("parallel: dimension mismatch");
    }
    const auto n1 = a.order(), n2 = b.order();
    M A = M::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = a.A;
    A.bottomRightCorner(n2, n2) = b.A;
    M B(n1 + n2, a.inputs());
    B << a.B, b.B;
    M C(a.outputs(), n1 + n2);
    C << a.C, b.C;
    return {A, B, C, a.D + b.D};
}

/// Block-diagonal stacking of inputs and outputs.
template <typename Scalar>
StateSpace<Scalar> append(const StateSpace<Scalar>& a, const StateSpace<Scalar>& b) {
    using M = typename StateSpace<Scalar>::Matrix;
    const auto n1 = a.order(), n2 = b.order();
    M A = M::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = a.A;
    A.bottomRightCorner(n2, n2) = b.A;
    M B = M::Zero(n1 + n2, a.inputs() + b.inputs());
    B.topLeftCorner(n1, a.inputs()) = a.B;
    B.bottomRightCorner(n2, b.inputs()) = b.B;
    M C = M::Zero(a.outputs() + b.outputs(), n1 + n2);
    C.topLeftCorner(a.outputs(), n1) = a.C;
    C.bottomRightCorner(b.outputs(), n2) = b.C;
    M D = M::Zero(a.outputs() + b.outputs(), a.inputs() + b.inputs());
    D.topLeftCorner(a.outputs(), a.inputs()) = a.D;
    D.bottomRightCorner(b.outputs(), b.inputs()) = b.D;
    return {A, B, C, D};
}

/// Closed loop u = r + sign * backward(forward(u)); the output is forward's.
template <typename Scalar>
StateSpace<Scalar> feedback(const StateSpace<Scalar>& forward, const StateSpace<Scalar>& backward,
                            Scalar sign = Scalar(-1)) {
    using M = typename StateSpace<Scalar>::Matrix;
    if (forward.outputs() != backward.inputs() || backward.outputs() != forward.inputs()) {
        throw std::invalid_argument("feedback: dimension mismatch");
    }
    const auto n1 = forward.order(), n2 = backward.order();
    const auto m = forward.inputs();
    const M E = M::Identity(m, m) - sign * backward.D * forward.D;
    const auto lu = E.fullPivLu();
    if (!lu.isInvertible()) throw std::invalid_argument("feedback: algebraic loop is singular");
    const M Einv = lu.inverse();
    // u = Einv (r + sign*(C2 x2 + D2 C1 x1))
    M Ku(m, n1 + n2);
    Ku << sign * Einv * backward.D * forward.C, sign * Einv * backward.C;
    const M& Kr = Einv;

    M A = M::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = forward.A;
    A.bottomRightCorner(n2, n2) = backward.A;
    A.bottomLeftCorner(n2, n1) = backward.B * forward.C;
    M Bu(n1 + n2, m);
    Bu << forward.B, backward.B * forward.D;
    A += Bu * Ku;
    const M B = Bu * Kr;
    M Cx(forward.outputs(), n1 + n2);
    Cx << forward.C, M::Zero(forward.outputs(), n2);
    const M C = Cx + forward.D * Ku;
    const M D = forward.D * Kr;
    return {A, B, C, D};
}

template <typename Scalar>
StateSpace<Scalar> scale_output(StateSpace<Scalar> sys, Scalar k) {
    sys.C *= k;
    sys.D *= k;
    return sys;
}

/// SISO response at s = j*omega.
template <typename Scalar>
std::complex<Scalar> frequency_response(const StateSpace<Scalar>& sys, Scalar omega) {
    using CM = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
    const auto n = sys.order();
    std::complex<Scalar> value = sys.D(0, 0);
    if (n == 0) return value;
    CM M = -sys.A.template cast<std::complex<Scalar>>();
    M.diagonal().array() += std::complex<Scalar>(0, omega);
    const CM x = M.partialPivLu().solve(sys.B.col(0).template cast<std::complex<Scalar>>());
    return value + (sys.C.row(0).template cast<std::complex<Scalar>>() * x)(0, 0);
}

/// SISO system whose output is the n-th time derivative of `sys`'s output.
/// Only the last derivative may pick up input feedthrough; anything more
/// would need derivatives of the input and is rejected.
template <typename Scalar>
StateSpace<Scalar> derivative_output(const StateSpace<Scalar>& sys, int n) {
    using M = typename StateSpace<Scalar>::Matrix;
    if (!sys.is_siso()) throw std::invalid_argument("derivative_output: SISO only");
    if (n == 0) return sys;
    if (std::abs(sys.D(0, 0)) > 0) throw std::invalid_argument("derivative_output: system is not strictly proper");
    M CAk = sys.C;
    for (int k = 0; k + 1 < n; ++k) {
        const Scalar markov = (CAk * sys.B)(0, 0);
        if (std::abs(markov) > Scalar(1e-10) * CAk.norm() * sys.B.norm()) {
            throw std::invalid_argument("derivative_output: relative degree too low for requested derivative");
        }
        CAk = CAk * sys.A;
    }
    M d = CAk * sys.B;
    return {sys.A, sys.B, CAk * sys.A, d};
}

/// Zero-order-hold discretization.
struct DiscreteLti {
    Eigen::MatrixXd Phi;
    Eigen::MatrixXd Gamma;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;
    double dt = 0.0;
};

DiscreteLti discretize_zoh(const StateSpaced& sys, double dt);

/// Largest real part over the eigenvalues of A (-inf for a static gain).
double spectral_abscissa(const StateSpaced& sys);

/// True when every eigenvalue of A has real part below -margin.
bool is_stable(const StateSpaced& sys, double margin = 1e-9);

/// SISO response to a sampled input held constant across each step, from x0.
RealVector simulate_zoh(const DiscreteLti& sys, std::span<const double> input,
                        const RealVector* x0 = nullptr);

/// SISO unit-step response at t_k = k*dt, k = 0..samples-1.
RealVector step_response(const StateSpaced& sys, double dt, std::size_t samples);

/// SISO impulse response without the impulsive D term: C exp(A t) B.
RealVector impulse_response(const StateSpaced& sys, double dt, std::size_t samples);

/// Controllable-canonical realization of num/den (descending powers,
/// num degree <= den degree).
StateSpaced realize_tf(std::span<const double> num, std::span<const double> den);

}  // namespace fopid

#endif  // FOPID_STATE_SPACE_HPP
