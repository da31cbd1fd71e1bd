#include "fopid/freq_tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fopid {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSingular = 1e6;

std::complex<double> jw_pow(double omega, double a) {
    return std::polar(std::pow(omega, a), a * kPi / 2.0);
}

double db(double x) { return 20.0 * std::log10(x); }

template <class F>
double track_phase(F&& g, double anchor, double omega, double delay) {
    double phase = std::arg(g(anchor));
    if (omega == anchor) return phase;
    const double decades = std::abs(std::log10(omega / anchor));
    const auto n = static_cast<int>(std::max({64.0, std::ceil(50.0 * decades), std::ceil(4.0 * std::max(omega, anchor) * delay)}));
    const double ratio = std::pow(omega / anchor, 1.0 / n);
    std::complex<double> prev = g(anchor);
    double w = anchor;
    for (int k = 1; k <= n; ++k) {
        w = k == n ? omega : w * ratio;
        const std::complex<double> cur = g(w);
        phase += std::arg(cur / prev);
        prev = cur;
    }
    return phase;
}

}  // namespace

void FopidParams::validate() const {
    for (double v : {Kp, Ki, Kd, lambda, mu}) {
        if (!std::isfinite(v)) throw std::invalid_argument("FopidParams: non-finite value");
    }
    if (Kp < 0 || Ki < 0 || Kd < 0) throw std::invalid_argument("FopidParams: gains must be >= 0");
    if (!(lambda > 0 && lambda <= 2 && mu > 0 && mu <= 2)) {
        throw std::invalid_argument("FopidParams: orders must lie in (0, 2]");
    }
}

bool FopidParams::admissible() const {
    const bool finite = std::isfinite(Kp) && std::isfinite(Ki) && std::isfinite(Kd) && std::isfinite(lambda) &&
                        std::isfinite(mu);
    return finite && Kp > 0 && Ki > 0 && Kd > 0 && lambda > 0 && lambda < 2 && mu > 0 && mu < 2;
}

RealVector FopidParams::to_vector() const {
    RealVector v(5);
    v << Kp, Ki, Kd, lambda, mu;
    return v;
}

FopidParams FopidParams::from_vector(const RealVector& v) {
    if (v.size() != 5) throw std::invalid_argument("FopidParams::from_vector: need 5 entries");
    return {v[0], v[1], v[2], v[3], v[4]};
}

void FreqSpec::validate() const {
    for (double v : {phi_m_deg, omega_gc, A_db, omega_t, B_db, omega_s}) {
        if (!std::isfinite(v)) throw std::invalid_argument("FreqSpec: non-finite value");
    }
    if (!(phi_m_deg > 0 && phi_m_deg < 180)) throw std::invalid_argument("FreqSpec: phase margin must lie in (0, 180)");
    if (!(omega_s > 0 && omega_s < omega_gc && omega_gc < omega_t)) {
        throw std::invalid_argument("FreqSpec: need 0 < omega_s < omega_gc < omega_t");
    }
}

Fotf fopid_to_fotf(const FopidParams& c) {
    c.validate();
    return Fotf(FracPoly({{c.Kd, c.lambda + c.mu}, {c.Kp, c.lambda}, {c.Ki, 0.0}}), FracPoly({{1.0, c.lambda}}), 0.0);
}

std::complex<double> controller_response(const FopidParams& c, double omega) {
    if (!(omega > 0)) throw std::invalid_argument("controller_response: omega must be positive");
    return c.Kp + c.Ki * jw_pow(omega, -c.lambda) + c.Kd * jw_pow(omega, c.mu);
}

ControllerResponse controller_response_analytic(const FopidParams& c, double omega) {
    const std::complex<double> C = controller_response(c, omega);
    const std::complex<double> dC =
        (-c.lambda * c.Ki * jw_pow(omega, -c.lambda) + c.mu * c.Kd * jw_pow(omega, c.mu)) / omega;
    return {std::abs(C), std::arg(C), (dC / C).imag()};
}

double unwrapped_phase(const Fotf& g, double omega_anchor, double omega) {
    if (!(omega_anchor > 0 && omega > 0)) throw std::invalid_argument("unwrapped_phase: frequencies must be positive");
    return track_phase([&](double w) { return freq_response(g, w); }, omega_anchor, omega, g.delay);
}

SpecResiduals spec_residuals(const FopidParams& c, const Fotf& p, const FreqSpec& spec) {
    spec.validate();
    const auto G = [&](double w) { return controller_response(c, w) * freq_response(p, w); };
    SpecResiduals r{};
    const double phase = track_phase(G, spec.omega_s, spec.omega_gc, p.delay);
    r[0] = phase + kPi - spec.phi_m_deg * kPi / 180.0;
    r[1] = std::abs(G(spec.omega_gc)) - 1.0;
    r[2] = controller_response_analytic(c, spec.omega_gc).phase_slope + phase_slope(p, spec.omega_gc);

    const std::complex<double> gt = G(spec.omega_t), gs = G(spec.omega_s);
    const double rt = std::abs(1.0 + gt), rs = std::abs(1.0 + gs);
    r[3] = rt < 1e-12 ? kSingular : db(std::abs(gt) / rt) - spec.A_db;
    r[4] = rs < 1e-12 ? kSingular : db(1.0 / rs) - spec.B_db;
    for (auto& v : r) {
        if (!std::isfinite(v)) v = kSingular;
    }
    return r;
}

std::optional<FopidParams> gains_for_orders(const Fotf& p, const FreqSpec& spec, double lambda, double mu) {
    const double w = spec.omega_gc;
    const std::complex<double> target = std::polar(1.0, -kPi + spec.phi_m_deg * kPi / 180.0) / freq_response(p, w);
    const std::complex<double> b[3] = {1.0, jw_pow(w, -lambda), jw_pow(w, mu)};
    const std::complex<double> db_[3] = {0.0, -lambda * b[1] / w, mu * b[2] / w};
    Eigen::Matrix3d M;
    Eigen::Vector3d rhs;
    for (int k = 0; k < 3; ++k) {
        M(0, k) = b[k].real();
        M(1, k) = b[k].imag();
        M(2, k) = (db_[k] / target).imag();
    }
    rhs << target.real(), target.imag(), -phase_slope(p, w);
    const auto lu = M.fullPivLu();
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::Vector3d g = lu.solve(rhs);
    return FopidParams{g[0], g[1], g[2], lambda, mu};
}

namespace {

bool within_tolerance(const SpecResiduals& r) {
    return std::abs(r[0]) <= 1e-6 && std::abs(r[1]) <= 1e-6 && std::abs(r[2]) <= 1e-6 && std::abs(r[3]) <= 1e-4 &&
           std::abs(r[4]) <= 1e-4;
}

double inf_norm(const SpecResiduals& r) {
    double m = 0;
    for (double v : r) m = std::max(m, std::abs(v));
    return m;
}

// Caps as upper bounds, with the first three conditions solved exactly.
std::optional<TuningResult> relaxed_design(const Fotf& p, const FreqSpec& spec) {
    std::size_t evals = 0;
    const auto cost = [&](double lambda, double mu) {
        ++evals;
        const auto c = gains_for_orders(p, spec, lambda, mu);
        if (!c) return 1e9;
        double bad = 0.0;
        for (double g : {c->Kp, c->Ki, c->Kd}) bad += std::max(0.0, 1e-6 - g);
        if (bad > 0) return 1e6 + bad;
        const SpecResiduals r = spec_residuals(*c, p, spec);
        if (std::abs(r[0]) > 1e-6) return 1e6 + std::abs(r[0]);  // landed on another phase branch
        const double h4 = std::max(0.0, r[3]), h5 = std::max(0.0, r[4]);
        return h4 * h4 + h5 * h5;
    };
    // Coarse scan of the order plane, then simplex refinement from the best cells.
    struct Cell {
        double v, l, m;
    };
    std::vector<Cell> cells;
    for (int i = 1; i < 40; ++i) {
        for (int j = 1; j < 40; ++j) {
            const double l = 0.05 * i, m = 0.05 * j;
            cells.push_back({cost(l, m), l, m});
        }
    }
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        return a.v < b.v || (a.v == b.v && (a.l < b.l || (a.l == b.l && a.m < b.m)));
    });
    if (cells.front().v >= 1e6) return std::nullopt;
    const BoxBounds box(Eigen::Vector2d(0.01, 0.01), Eigen::Vector2d(1.99, 1.99));
    NelderMeadOptions nm;
    nm.tol_f = 1e-14;
    nm.tol_x = 1e-10;
    nm.max_evals = 4000;
    nm.initial_step = Eigen::Vector2d(0.05, 0.05);
    std::optional<SolverReport> best;
    for (std::size_t k = 0; k < std::min<std::size_t>(4, cells.size()); ++k) {
        const SolverReport rep = nelder_mead_minimize(
            [&](const RealVector& x) { return cost(x[0], x[1]); }, Eigen::Vector2d(cells[k].l, cells[k].m), box, nm);
        if (!best || rep.objective_or_residual_norm < best->objective_or_residual_norm) best = rep;
    }
    const auto c = gains_for_orders(p, spec, best->solution[0], best->solution[1]);
    if (!c || !c->admissible()) return std::nullopt;
    TuningResult out;
    out.params = *c;
    out.residuals = spec_residuals(*c, p, spec);
    if (std::abs(out.residuals[0]) > 1e-6) return std::nullopt;
    out.caps_relaxed = true;
    out.converged = false;
    out.solver_report = *best;
    out.solver_report.evaluations = evals;
    return out;
}

}  // namespace

TuningResult tune_frequency_domain(const Fotf& p, const FreqSpec& spec, const std::optional<FopidParams>& x0,
                                   const FreqTuneOptions& opt) {
    spec.validate();
    const double pg = std::abs(freq_response(p, spec.omega_gc));
    if (!(pg > 0) || !std::isfinite(pg)) throw std::invalid_argument("tune_frequency_domain: plant gain at crossover is not usable");

    const ResidualMap F = [&](const RealVector& x) {
        const SpecResiduals r = spec_residuals(FopidParams::from_vector(x), p, spec);
        return RealVector(Eigen::Map<const RealVector>(r.data(), 5));
    };

    const FopidParams seed = x0 ? *x0
                                : FopidParams{1.0 / pg, spec.omega_gc / pg * 0.5, 0.5 / pg / spec.omega_gc, 1.0, 1.0};
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    std::optional<TuningResult> best;
    std::size_t total_evals = 0;
    for (int attempt = 0; attempt <= opt.restarts; ++attempt) {
        RealVector x = seed.to_vector();
        if (attempt > 0) {
            for (int i = 0; i < 3; ++i) x[i] *= std::exp(u(rng));
            for (int i = 3; i < 5; ++i) x[i] = std::clamp(x[i] + 0.6 * u(rng), 0.05, 1.95);
        }
        SolverReport rep = dogleg_solve(F, x, opt.dogleg);
        total_evals += rep.evaluations;
        TuningResult r;
        r.params = FopidParams::from_vector(rep.solution);
        r.residuals = spec_residuals(r.params, p, spec);
        r.converged = rep.converged && within_tolerance(r.residuals) && r.params.admissible();
        r.solver_report = std::move(rep);
        // Prefer admissible candidates, then smaller residuals.
        const auto score = [](const TuningResult& t) {
            return (t.params.admissible() ? 0.0 : 1e12) + inf_norm(t.residuals);
        };
        if (!best || (r.converged && !best->converged) ||
            (r.converged == best->converged && score(r) < score(*best))) {
            best = std::move(r);
        }
        if (best->converged) break;
    }
    best->solver_report.evaluations = total_evals;
    if (best->converged) return *best;

    std::ostringstream adv;
    adv << "no admissible solution of the five design equations was found";
    if (opt.relax_caps_on_failure) {
        if (auto relaxed = relaxed_design(p, spec)) {
            relaxed->solver_report.evaluations += total_evals;
            adv << "; returned a design meeting phase margin, crossover and flat phase exactly with the "
                   "sensitivity caps as upper bounds (cap excess "
                << std::max(relaxed->residuals[3], 0.0) << " dB on T, " << std::max(relaxed->residuals[4], 0.0)
                << " dB on S)";
            relaxed->advisory = adv.str() + "; try a lower gain crossover frequency";
            return *relaxed;
        }
    }
    best->advisory = adv.str() + "; try a lower gain crossover frequency";
    return *best;
}

}  // namespace fopid
