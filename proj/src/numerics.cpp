#include "fopid/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fopid {

BoxBounds::BoxBounds(RealVector lo, RealVector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) {
        throw std::invalid_argument("BoxBounds: lower and upper differ in length");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] <= upper[i])) {
            throw std::invalid_argument("BoxBounds: lower bound exceeds upper bound");
        }
    }
}

bool BoxBounds::contains(const RealVector& x) const {
    return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
           (x.array() <= upper.array()).all();
}

RealVector BoxBounds::clamp(const RealVector& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vertex {
    RealVector x;
    double value;
};

}  // namespace

SolverReport nelder_mead_minimize(const Objective& f, const RealVector& x0,
                                  const std::optional<BoxBounds>& bounds,
                                  const NelderMeadOptions& options) {
    const Eigen::Index n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead_minimize: empty start vector");
    if (bounds && bounds->size() != n) {
        throw std::invalid_argument("nelder_mead_minimize: bounds dimension mismatch");
    }

    SolverReport report;
    auto evaluate = [&](const RealVector& x) {
        ++report.evaluations;
        if (!bounds) {
            const double v = f(x);
            return std::isfinite(v) ? v : kInf;
        }
        const RealVector xc = bounds->clamp(x);
        const double v = f(xc);
        if (!std::isfinite(v)) return kInf;
        return v + options.bound_penalty * (x - xc).lpNorm<1>();
    };

    const RealVector start = bounds ? bounds->clamp(x0) : x0;
    const double f0 = f(start);
    ++report.evaluations;
    if (!std::isfinite(f0)) {
        throw std::invalid_argument("nelder_mead_minimize: objective is not finite at x0");
    }

    std::vector<Vertex> simplex;
    simplex.reserve(static_cast<std::size_t>(n) + 1);
    simplex.push_back({start, f0});
    for (Eigen::Index i = 0; i < n; ++i) {
        RealVector x = start;
        double step;
        if (options.initial_step.size() == n) {
            step = options.initial_step[i];
        } else {
            step = x[i] != 0.0 ? 0.05 * x[i] : 0.00025;
        }
        x[i] += step;
        // Keep the initial simplex inside the box so it does not start degenerate.
        if (bounds && (x[i] > bounds->upper[i] || x[i] < bounds->lower[i])) x[i] = start[i] - step;
        simplex.push_back({x, evaluate(x)});
    }

    auto by_value = [](const Vertex& a, const Vertex& b) { return a.value < b.value; };
    constexpr double rho = 1.0, chi = 2.0, psi = 0.5, sigma = 0.5;

    while (true) {
        std::stable_sort(simplex.begin(), simplex.end(), by_value);
        report.trace.push_back(simplex.front().value);

        double f_spread = 0.0, x_spread = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i) {
            f_spread = std::max(f_spread, std::abs(simplex[i].value - simplex[0].value));
            x_spread = std::max(x_spread, (simplex[i].x - simplex[0].x).lpNorm<Eigen::Infinity>());
        }
        if (std::isfinite(simplex[0].value) && f_spread <= options.tol_f && x_spread <= options.tol_x) {
            report.converged = true;
            break;
        }
        if (report.evaluations >= options.max_evals) break;
        ++report.iterations;

        RealVector centroid = RealVector::Zero(n);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i].x;
        centroid /= static_cast<double>(n);

        Vertex& worst = simplex.back();
        const double f_best = simplex.front().value;
        const double f_second_worst = simplex[simplex.size() - 2].value;

        const RealVector xr = (1.0 + rho) * centroid - rho * worst.x;
        const double fr = evaluate(xr);
        if (fr < f_best) {
            const RealVector xe = (1.0 + rho * chi) * centroid - rho * chi * worst.x;
            const double fe = evaluate(xe);
            worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
            continue;
        }
        if (fr < f_second_worst) {
            worst = {xr, fr};
            continue;
        }
        bool shrink = false;
        if (fr < worst.value) {
            const RealVector xc = (1.0 + psi * rho) * centroid - psi * rho * worst.x;
            const double fc = evaluate(xc);
            if (fc <= fr) {
                worst = {xc, fc};
            } else {
                shrink = true;
            }
        } else {
            const RealVector xcc = (1.0 - psi) * centroid + psi * worst.x;
            const double fcc = evaluate(xcc);
            if (fcc < worst.value) {
                worst = {xcc, fcc};
            } else {
                shrink = true;
            }
        }
        if (shrink) {
            for (std::size_t i = 1; i < simplex.size(); ++i) {
                simplex[i].x = simplex[0].x + sigma * (simplex[i].x - simplex[0].x);
                simplex[i].value = evaluate(simplex[i].x);
            }
        }
    }

    const Vertex& best = simplex.front();
    if (bounds && !bounds->contains(best.x)) {
        report.solution = bounds->clamp(best.x);
        const double v = f(report.solution);
        ++report.evaluations;
        report.objective_or_residual_norm = std::isfinite(v) ? v : kInf;
    } else {
        report.solution = best.x;
        report.objective_or_residual_norm = best.value;
    }
    return report;
}

namespace {

bool all_finite(const RealVector& v) { return v.allFinite(); }

Eigen::MatrixXd forward_jacobian(const ResidualMap& F, const RealVector& x, const RealVector& fx,
                                 double rel_step, std::size_t& evals) {
    Eigen::MatrixXd J(fx.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        RealVector xh = x;
        const double h = rel_step * std::max(1.0, std::abs(x[j]));
        xh[j] += h;
        const RealVector fh = F(xh);
        ++evals;
        J.col(j) = (fh - fx) / h;
    }
    return J;
}

}  // namespace

SolverReport dogleg_solve(const ResidualMap& F, const RealVector& x0, const DoglegOptions& options) {
    SolverReport report;
    RealVector x = x0;
    RealVector fx = F(x);
    ++report.evaluations;
    if (!all_finite(fx)) throw std::invalid_argument("dogleg_solve: residual is not finite at x0");
    if (fx.size() != x.size()) throw std::invalid_argument("dogleg_solve: system is not square");

    double radius = options.initial_radius * std::max(1.0, x.norm());
    report.trace.push_back(fx.norm());

    while (true) {
        if (fx.lpNorm<Eigen::Infinity>() <= options.tol) {
            report.converged = true;
            break;
        }
        if (report.iterations >= options.max_iters) break;
        ++report.iterations;

        const Eigen::MatrixXd J = forward_jacobian(F, x, fx, options.fd_relative_step, report.evaluations);
        if (!J.allFinite()) break;
        const RealVector g = J.transpose() * fx;
        const RealVector Jg = J * g;
        if (g.norm() == 0.0 || Jg.norm() == 0.0) break;  // stationary point of |F|^2

        const RealVector p_gn = J.completeOrthogonalDecomposition().solve(-fx);
        const RealVector p_cauchy = -(g.squaredNorm() / Jg.squaredNorm()) * g;

        // Inner loop: shrink the region until a step is accepted.
        bool accepted = false;
        while (!accepted) {
            RealVector p;
            if (p_gn.allFinite() && p_gn.norm() <= radius) {
                p = p_gn;
            } else if (p_cauchy.norm() >= radius || !p_gn.allFinite()) {
                p = -radius / g.norm() * g;
            } else {
                const RealVector d = p_gn - p_cauchy;
                const double a = d.squaredNorm();
                const double b = 2.0 * p_cauchy.dot(d);
                const double c = p_cauchy.squaredNorm() - radius * radius;
                const double t = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
                p = p_cauchy + t * d;
            }

            const double predicted = 0.5 * fx.squaredNorm() - 0.5 * (fx + J * p).squaredNorm();
            const RealVector x_new = x + p;
            const RealVector f_new = F(x_new);
            ++report.evaluations;
            const double actual = all_finite(f_new) ? 0.5 * fx.squaredNorm() - 0.5 * f_new.squaredNorm()
                                                    : -kInf;
            const double ratio = predicted > 0.0 ? actual / predicted : -1.0;

            const double step_norm = p.norm();
            if (ratio < 0.25) {
                radius = 0.25 * step_norm;
            } else if (ratio > 0.75 && step_norm >= 0.99 * radius) {
                radius = std::min(2.0 * radius, options.max_radius);
            }
            if (ratio > 1e-4 && actual > 0.0) {
                x = x_new;
                fx = f_new;
                report.trace.push_back(fx.norm());
                accepted = true;
            } else if (radius < 1e-14 * (1.0 + x.norm())) {
                break;
            }
        }
        if (!accepted) break;
    }

    report.converged = fx.lpNorm<Eigen::Infinity>() <= options.tol;
    report.solution = x;
    report.objective_or_residual_norm = fx.lpNorm<Eigen::Infinity>();
    return report;
}

double trapezoid_integral(std::span<const double> samples, double dt) {
    if (samples.size() < 2) throw std::invalid_argument("trapezoid_integral: need at least 2 samples");
    if (!(dt > 0.0)) throw std::invalid_argument("trapezoid_integral: dt must be positive");
    const double inner = std::accumulate(samples.begin() + 1, samples.end() - 1, 0.0);
    return dt * (inner + 0.5 * (samples.front() + samples.back()));
}

double trapezoid_integral(std::span<const double> samples, std::span<const double> abscissae) {
    if (samples.size() < 2) throw std::invalid_argument("trapezoid_integral: need at least 2 samples");
    if (samples.size() != abscissae.size()) {
        throw std::invalid_argument("trapezoid_integral: samples and abscissae differ in length");
    }
    double sum = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        sum += 0.5 * (abscissae[i] - abscissae[i - 1]) * (samples[i] + samples[i - 1]);
    }
    return sum;
}

namespace {

// Parlett-Reinsch diagonal similarity balancing.
void balance(Eigen::MatrixXd& M) {
    const Eigen::Index n = M.rows();
    constexpr double radix = 2.0;
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = M.col(i).lpNorm<1>() - std::abs(M(i, i));
            const double r = M.row(i).lpNorm<1>() - std::abs(M(i, i));
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix, f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                M.row(i) /= f;
                M.col(i) *= f;
            }
        }
    }
}

}  // namespace

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
    std::size_t first = 0;
    while (first < coeffs.size() && coeffs[first] == 0.0) ++first;
    if (first == coeffs.size()) throw std::invalid_argument("polynomial_roots: all-zero polynomial");
    const auto trimmed = coeffs.subspan(first);
    const std::size_t degree = trimmed.size() - 1;
    if (degree == 0) return {};

    const auto n = static_cast<Eigen::Index>(degree);
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) companion(0, j) = -trimmed[j + 1] / trimmed[0];
    for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    balance(companion);

    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success) throw std::runtime_error("polynomial_roots: eigenvalue iteration failed");
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

std::vector<double> polynomial_from_roots(std::span<const std::complex<double>> roots) {
    std::vector<std::complex<double>> c{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= r * c[i];
        }
        c = std::move(next);
    }
    std::vector<double> out(c.size());
    std::transform(c.begin(), c.end(), out.begin(), [](const auto& z) { return z.real(); });
    return out;
}

RealVector rk4_simulate(const Eigen::MatrixXd& A, const RealVector& B, const RealVector& C, double D,
                        std::span<const double> input, double dt, const Rk4Options& options) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4_simulate: dt must be positive");
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.size() != n || C.size() != n) {
        throw std::invalid_argument("rk4_simulate: inconsistent state dimensions");
    }
    if (n > 0) {
        const double lam = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues().cwiseAbs().maxCoeff();
        if (lam * dt > options.stiffness_cap) {
            std::ostringstream msg;
            msg << "rk4_simulate: |lambda_max|*dt = " << lam * dt << " exceeds " << options.stiffness_cap
                << "; reduce dt below " << options.stiffness_cap / lam;
            throw std::invalid_argument(msg.str());
        }
    }

    RealVector y(static_cast<Eigen::Index>(input.size()));
    RealVector x = RealVector::Zero(n);
    auto deriv = [&](const RealVector& s, double u) -> RealVector { return A * s + B * u; };
    for (std::size_t k = 0; k < input.size(); ++k) {
        y[static_cast<Eigen::Index>(k)] = C.dot(x) + D * input[k];
        if (k + 1 == input.size()) break;
        const double u0 = input[k], u1 = input[k + 1], um = 0.5 * (u0 + u1);
        const RealVector k1 = deriv(x, u0);
        const RealVector k2 = deriv(x + 0.5 * dt * k1, um);
        const RealVector k3 = deriv(x + 0.5 * dt * k2, um);
        const RealVector k4 = deriv(x + dt * k3, u1);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

}  // namespace fopid
