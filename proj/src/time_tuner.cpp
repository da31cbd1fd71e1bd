#include "fopid/time_tuner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "fopid/analysis.hpp"

namespace fopid {

namespace {

constexpr double kOverflow = 1e6;

StateSpaced integrator_chain(int m) {
    StateSpaced out = StateSpaced::gain(1.0);
    for (int i = 0; i < m; ++i) out = series(out, StateSpaced::integrator());
    return out;
}

// s^alpha for alpha <= 1 realized as integrators and one Oustaloup block;
// alpha = 1 is not representable here and is handled by callers.
StateSpaced proper_power(double alpha, const OustaloupConfig& ocfg) {
    const PowerSplit sp = split_power(alpha);
    if (sp.integer > 0) throw std::invalid_argument("proper_power: improper power");
    return series(integrator_chain(-sp.integer), oustaloup_state_space(sp.fraction, ocfg));
}

// Sum the outputs of a block-diagonal bank into one.
StateSpaced sum_outputs(const StateSpaced& bank) {
    const Eigen::MatrixXd w = Eigen::MatrixXd::Ones(1, bank.outputs());
    return {bank.A, bank.B, w * bank.C, w * bank.D};
}

// Same input feeding every member of a bank.
StateSpaced share_input(const StateSpaced& bank) {
    const Eigen::MatrixXd s = Eigen::MatrixXd::Ones(bank.inputs(), 1);
    return {bank.A, bank.B * s, bank.C, bank.D * s};
}

// t > 0 response of s*G; the D*s term only acts at t = 0.
StateSpaced strict_derivative(const StateSpaced& g) { return {g.A, g.B, g.C * g.A, g.C * g.B}; }

}  // namespace

void SimConfig::validate() const {
    if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("SimConfig: dt must be positive");
    if (!(t_end >= dt) || !std::isfinite(t_end)) throw std::invalid_argument("SimConfig: t_end must be >= dt");
    if (pade_order < 1) throw std::invalid_argument("SimConfig: pade_order must be >= 1");
    oustaloup.validate();
}

std::size_t SimConfig::samples() const { return static_cast<std::size_t>(std::llround(t_end / dt)) + 1; }

std::string to_string(IndexKind k) {
    switch (k) {
        case IndexKind::IAE: return "IAE";
        case IndexKind::ITAE: return "ITAE";
        case IndexKind::ISE: return "ISE";
        case IndexKind::ITSE: return "ITSE";
        case IndexKind::ISTES: return "ISTES";
        case IndexKind::ISTSE: return "ISTSE";
        case IndexKind::SUM_ALL: return "SUM_ALL";
    }
    return "?";
}

IndexKind parse_index_kind(const std::string& name) {
    std::string s;
    for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "iae") return IndexKind::IAE;
    if (s == "itae") return IndexKind::ITAE;
    if (s == "ise") return IndexKind::ISE;
    if (s == "itse") return IndexKind::ITSE;
    if (s == "istes") return IndexKind::ISTES;
    if (s == "istse") return IndexKind::ISTSE;
    if (s == "sum" || s == "sum_all") return IndexKind::SUM_ALL;
    throw std::invalid_argument("unknown index: " + name);
}

void IndexWeights::validate() const {
    bool positive = false;
    for (double v : w) {
        if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument("IndexWeights: weights must be finite and >= 0");
        positive = positive || v > 0;
    }
    if (!positive) throw std::invalid_argument("IndexWeights: at least one weight must be positive");
}

StateSpaced loop_realize(const StateSpaced& plant, const FopidParams& c, const OustaloupConfig& ocfg) {
    c.validate();
    if (!plant.is_siso()) throw std::invalid_argument("loop_realize: SISO plant required");
    const PowerSplit dsplit = split_power(c.mu);
    const bool use_d = c.Kd != 0.0;
    const int tap = use_d ? dsplit.integer : 0;
    const StateSpaced dy = derivative_output(plant, tap);

    // Plant with outputs [y; y^(tap)].
    Eigen::MatrixXd C2(2, plant.order()), D2(2, 1);
    C2 << plant.C, dy.C;
    D2 << plant.D, dy.D;
    const StateSpaced plant2(plant.A, plant.B, C2, D2);

    // Branches on y: Kp and Ki s^-lambda.
    StateSpaced on_y = StateSpaced::gain(c.Kp);
    if (c.Ki != 0.0) {
        const StateSpaced integ = scale_output(proper_power(-c.lambda, ocfg), c.Ki);
        on_y = sum_outputs(share_input(append(on_y, integ)));
    }
    StateSpaced on_tap = StateSpaced::gain(0.0);
    if (use_d) on_tap = scale_output(oustaloup_state_space(dsplit.fraction, ocfg), c.Kd);
    return series(plant2, sum_outputs(append(on_y, on_tap)));
}

StateSpaced sensitivity_from_loop(const StateSpaced& G) {
    const double d = 1.0 + G.D(0, 0);
    if (std::abs(d) < 1e-12) throw std::invalid_argument("sensitivity_from_loop: ill-posed loop (1 + D = 0)");
    Eigen::MatrixXd D(1, 1);
    D(0, 0) = 1.0 / d;
    return {G.A - G.B * G.C / d, G.B / d, -G.C / d, D};
}

ClosedLoop closed_loop_realize(const Fotf& p, const FopidParams& c, const SimConfig& cfg) {
    cfg.validate();
    const StateSpaced plant = realize(p, cfg.oustaloup, cfg.pade_order);
    ClosedLoop out;
    out.S = sensitivity_from_loop(loop_realize(plant, c, cfg.oustaloup));
    out.T = StateSpaced(out.S.A, out.S.B, -out.S.C, Eigen::MatrixXd::Ones(1, 1) - out.S.D);
    out.PS = series(out.S, plant);

    // W = (C/s) S, branch by branch on the error signal.
    StateSpaced bank = scale_output(StateSpaced::integrator(), c.Kp);
    if (c.Ki != 0.0) bank = append(bank, scale_output(proper_power(-c.lambda - 1.0, cfg.oustaloup), c.Ki));
    StateSpaced W = series(out.S, sum_outputs(share_input(bank)));
    if (c.Kd != 0.0) {
        const double a = c.mu - 1.0;
        if (a >= 1.0) {
            W = parallel(W, scale_output(strict_derivative(out.S), c.Kd));
            out.u_impulse_dropped = true;
        } else {
            W = parallel(W, series(out.S, scale_output(oustaloup_state_space(split_power(a).fraction, cfg.oustaloup), c.Kd)));
        }
    }
    if (W.D(0, 0) != 0.0) out.u_impulse_dropped = true;
    out.W = W;
    return out;
}

SimResult simulate_step(const ClosedLoop& loop, const SimConfig& cfg, const std::optional<Disturbance>& disturbance,
                        double reference) {
    cfg.validate();
    const std::size_t n = cfg.samples();
    SimResult r;
    r.t.resize(n);
    for (std::size_t k = 0; k < n; ++k) r.t[k] = static_cast<double>(k) * cfg.dt;
    r.u_impulse_dropped = loop.u_impulse_dropped && reference != 0.0;

    const std::vector<double> ref(n, reference);
    const RealVector yT = simulate_zoh(discretize_zoh(loop.T, cfg.dt), ref);
    RealVector u = impulse_response(loop.W, cfg.dt, n) * reference;
    RealVector y = yT;
    if (disturbance && disturbance->magnitude != 0.0) {
        std::vector<double> d(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            if (r.t[k] >= disturbance->time - 1e-12) d[k] = disturbance->magnitude;
        }
        y += simulate_zoh(discretize_zoh(loop.PS, cfg.dt), d);
        u -= simulate_zoh(discretize_zoh(loop.T, cfg.dt), d);
    }
    r.y.resize(n);
    r.u.resize(n);
    r.e.resize(n);
    std::size_t stop = n;
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        if (!std::isfinite(y[i]) || std::abs(y[i]) > kOverflow) {
            stop = k;
            r.overflow = true;
            break;
        }
        r.y[k] = y[i];
        r.u[k] = u[i];
        r.e[k] = reference - y[i];
    }
    for (auto* v : {&r.t, &r.y, &r.u, &r.e}) v->resize(stop);
    return r;
}

double performance_index(std::span<const double> e, double dt, IndexKind kind, const IndexWeights& weights) {
    if (e.empty()) throw std::invalid_argument("performance_index: empty trajectory");
    if (e.size() < 2) return 0.0;
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (double v : e) {
        if (!std::isfinite(v)) return inf;
    }
    if (kind == IndexKind::SUM_ALL) {
        weights.validate();
        constexpr IndexKind parts[] = {IndexKind::IAE, IndexKind::ITAE, IndexKind::ISE,
                                       IndexKind::ITSE, IndexKind::ISTES, IndexKind::ISTSE};
        double sum = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            if (weights.w[i] != 0.0) sum += weights.w[i] * performance_index(e, dt, parts[i]);
        }
        return sum;
    }
    std::vector<double> f(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) {
        const double t = static_cast<double>(k) * dt, v = e[k];
        switch (kind) {
            case IndexKind::IAE: f[k] = std::abs(v); break;
            case IndexKind::ITAE: f[k] = t * std::abs(v); break;
            case IndexKind::ISE: f[k] = v * v; break;
            case IndexKind::ITSE: f[k] = t * v * v; break;
            case IndexKind::ISTES: f[k] = t * t * t * t * v * v; break;
            case IndexKind::ISTSE: f[k] = t * t * v * v; break;
            case IndexKind::SUM_ALL: break;
        }
    }
    const double value = trapezoid_integral(f, dt);
    return std::isfinite(value) ? value : inf;
}

double performance_index(const SimResult& r, IndexKind kind, const IndexWeights& weights) {
    if (r.t.empty()) throw std::invalid_argument("performance_index: empty trajectory");
    if (r.overflow) return std::numeric_limits<double>::infinity();
    const double dt = r.t.size() > 1 ? r.t[1] - r.t[0] : 1.0;
    return performance_index(r.e, dt, kind, weights);
}

BoxBounds default_time_bounds() {
    RealVector lo(5), hi(5);
    lo << 0.01, 0.01, 0.01, 0.01, 0.01;
    hi << 500, 500, 500, 2, 2;
    return {lo, hi};
}

double time_objective(const StateSpaced& plant, const FopidParams& c, IndexKind kind, const SimConfig& cfg,
                      const IndexWeights& weights, double penalty) {
    StateSpaced S;
    try {
        S = sensitivity_from_loop(loop_realize(plant, c, cfg.oustaloup));
    } catch (const std::invalid_argument&) {
        return penalty + 1e3;
    }
    const double abscissa = spectral_abscissa(S);
    if (!std::isfinite(abscissa)) return penalty + 1e3;
    if (!(abscissa < -1e-9)) return penalty + std::min(abscissa + 1e-9, 1e3);
    const DiscreteLti d = discretize_zoh(S, cfg.dt);
    if (!d.Phi.allFinite() || !d.Gamma.allFinite()) return penalty + 1e3;
    const std::vector<double> ones(cfg.samples(), 1.0);
    const RealVector e = simulate_zoh(d, ones);
    if (!e.allFinite() || e.cwiseAbs().maxCoeff() > kOverflow) return penalty + 1e3;
    const double j = performance_index(std::span<const double>(e.data(), static_cast<std::size_t>(e.size())), cfg.dt,
                                       kind, weights);
    return std::isfinite(j) ? j : penalty + 1e3;
}

bool independently_stable(const Fotf& p, const FopidParams& c, const SimConfig& cfg, int oustaloup_order) {
    SimConfig alt = cfg;
    alt.oustaloup.order = oustaloup_order;
    try {
        const StateSpaced plant = realize(p, alt.oustaloup, alt.pade_order);
        return is_stable(sensitivity_from_loop(loop_realize(plant, c, alt.oustaloup)));
    } catch (const std::invalid_argument&) {
        return false;
    }
}

namespace {

// Gains are searched in log space, orders directly.
RealVector to_search(const RealVector& x) {
    RealVector z = x;
    for (int i = 0; i < 3; ++i) z[i] = std::log(x[i]);
    return z;
}

RealVector from_search(const RealVector& z) {
    RealVector x = z;
    for (int i = 0; i < 3; ++i) x[i] = std::exp(z[i]);
    return x;
}

}  // namespace

TimeTuneResult tune_time_domain(const Fotf& p, IndexKind kind, const BoxBounds& bounds, const SimConfig& cfg,
                                const TimeTuneOptions& opt) {
    cfg.validate();
    if (bounds.size() != 5) throw std::invalid_argument("tune_time_domain: bounds must have 5 entries");
    for (int i = 0; i < 3; ++i) {
        if (!(bounds.lower[i] > 0)) throw std::invalid_argument("tune_time_domain: gain bounds must be positive");
    }
    if (!(bounds.lower[3] > 0 && bounds.lower[4] > 0)) {
        throw std::invalid_argument("tune_time_domain: order bounds must be positive");
    }
    if (opt.starts < 1) throw std::invalid_argument("tune_time_domain: starts must be >= 1");
    if (kind == IndexKind::SUM_ALL) opt.weights.validate();

    const StateSpaced plant = realize(p, cfg.oustaloup, cfg.pade_order);
    const BoxBounds box(to_search(bounds.lower), to_search(bounds.upper));

    std::size_t evaluations = 0;
    const Objective f = [&](const RealVector& z) {
        ++evaluations;
        return time_objective(plant, FopidParams::from_vector(from_search(z)), kind, cfg, opt.weights, opt.penalty);
    };

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const RealVector base = box.clamp(to_search(RealVector::Ones(5)));

    NelderMeadOptions nm;
    nm.tol_f = 1e-10;
    nm.tol_x = 1e-8;
    nm.initial_step = (RealVector(5) << 0.5, 0.5, 0.5, 0.2, 0.2).finished();

    RealVector best_z;
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < opt.starts; ++s) {
        RealVector z = base;
        if (s > 0) {
            for (int i = 0; i < 3; ++i) z[i] += 1.5 * u(rng);
            for (int i = 3; i < 5; ++i) z[i] = 1.0 + 0.7 * u(rng);
            z = box.clamp(z);
        }
        double value = f(z);
        std::size_t budget = opt.max_evals_per_start;
        // Restart the simplex from its own optimum until it stops improving.
        for (int round = 0; round < 4 && budget > 50; ++round) {
            nm.max_evals = budget;
            const std::size_t before = evaluations;
            const SolverReport rep = nelder_mead_minimize(f, z, box, nm);
            budget -= std::min(budget, evaluations - before);
            const bool improved = rep.objective_or_residual_norm < value - 1e-9 * std::abs(value);
            if (rep.objective_or_residual_norm <= value) {
                z = rep.solution;
                value = rep.objective_or_residual_norm;
            }
            if (!improved) break;
        }
        if (value < best) {
            best = value;
            best_z = z;
        }
    }

    TimeTuneResult out;
    out.index = kind;
    out.evaluations = evaluations;
    if (!(best < opt.penalty)) {
        out.found = false;
        out.stable = false;
        out.j_min = std::numeric_limits<double>::infinity();
        out.message = "no stable candidate found in any start";
        return out;
    }
    out.params = FopidParams::from_vector(from_search(best_z));
    out.j_min = best;
    out.found = true;
    const ClosedLoop loop = closed_loop_realize(p, out.params, cfg);
    out.stable = is_stable(loop.S);
    const StepMetrics m = step_metrics(simulate_step(loop, cfg));
    out.mp_pct = m.mp_pct;
    out.t_r = m.t_r;
    return out;
}

std::vector<TimeTuneResult> tune_all_indices(const Fotf& p, const SimConfig& cfg, const BoxBounds& bounds,
                                             const TimeTuneOptions& opt) {
    std::vector<TimeTuneResult> out;
    for (IndexKind k : kAllIndices) {
        try {
            out.push_back(tune_time_domain(p, k, bounds, cfg, opt));
        } catch (const std::exception& ex) {
            TimeTuneResult r;
            r.index = k;
            r.found = false;
            r.j_min = std::numeric_limits<double>::infinity();
            r.message = ex.what();
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace fopid
