#ifndef FOPID_NUMERICS_HPP
#define FOPID_NUMERICS_HPP

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fopid {

using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

struct BoxBounds {
    RealVector lower;
    RealVector upper;

    BoxBounds() = default;
    BoxBounds(RealVector lo, RealVector hi);

    Eigen::Index size() const { return lower.size(); }
    bool contains(const RealVector& x) const;
    RealVector clamp(const RealVector& x) const;
};

struct SolverReport {
    RealVector solution;
    double objective_or_residual_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t evaluations = 0;
    /// Best objective (simplex) or residual norm (dogleg) after each iteration.
    std::vector<double> trace;
};

using Objective = std::function<double(const RealVector&)>;
using ResidualMap = std::function<RealVector(const RealVector&)>;

struct NelderMeadOptions {
    double tol_f = 1e-8;
    double tol_x = 1e-8;
    std::size_t max_evals = 20000;
    /// Per-coordinate initial simplex edge. Empty: 5% of |x0_i| (0.00025 at zero).
    RealVector initial_step;
    /// Added to the clamped objective per unit of L1 distance outside the box.
    double bound_penalty = 1e3;
};

/// Derivative-free simplex minimization. Candidate vertices outside the box
/// are evaluated at their clamped image plus a distance penalty, and the
/// returned solution is always clamped into the box.
SolverReport nelder_mead_minimize(const Objective& f, const RealVector& x0,
                                  const std::optional<BoxBounds>& bounds = std::nullopt,
                                  const NelderMeadOptions& options = {});

struct DoglegOptions {
    double tol = 1e-10;
    std::size_t max_iters = 400;
    double initial_radius = 1.0;
    double max_radius = 1e6;
    double fd_relative_step = 1e-6;
};

/// Powell dogleg trust-region solver for square systems F(x) = 0.
/// The Jacobian is a forward-difference approximation.
SolverReport dogleg_solve(const ResidualMap& F, const RealVector& x0,
                          const DoglegOptions& options = {});

/// Composite trapezoid on a uniform grid.
double trapezoid_integral(std::span<const double> samples, double dt);

/// Composite trapezoid on an arbitrary increasing abscissa.
double trapezoid_integral(std::span<const double> samples, std::span<const double> abscissae);

/// Roots of a polynomial given in descending-power order, from the
/// eigenvalues of its companion matrix. Leading zeros are trimmed.
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs);

/// Expand prod (s - r_i) into descending real coefficients (imaginary
/// parts from conjugate pairs are discarded).
std::vector<double> polynomial_from_roots(std::span<const std::complex<double>> roots);

struct Rk4Options {
    /// Largest admissible |lambda_max| * dt.
    double stiffness_cap = 0.1;
};

/// Fixed-step classical RK4 of x' = A x + B u, y = C x + D u from zero state.
/// The input is linearly interpolated between samples for the half steps.
RealVector rk4_simulate(const Eigen::MatrixXd& A, const RealVector& B, const RealVector& C,
                        double D, std::span<const double> input, double dt,
                        const Rk4Options& options = {});

}  // namespace fopid

#endif  // FOPID_NUMERICS_HPP
