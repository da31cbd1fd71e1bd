#include "fopid/model_reduction.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fopid {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::vector<double> log_grid(const H2Options& opt) {
    if (!(opt.omega_low > 0.0) || !(opt.omega_high > opt.omega_low) || opt.points < 2) {
        throw std::invalid_argument("H2Options: need 0 < omega_low < omega_high and >= 2 points");
    }
    std::vector<double> w(opt.points);
    const double a = std::log10(opt.omega_low), b = std::log10(opt.omega_high);
    const double step = (b - a) / static_cast<double>(opt.points - 1);
    for (std::size_t i = 0; i < opt.points; ++i) w[i] = std::pow(10.0, a + step * static_cast<double>(i));
    return w;
}

double integrate_sq(std::span<const double> sq, std::span<const double> w) {
    return std::sqrt(trapezoid_integral(sq, w) / std::numbers::pi);
}

}  // namespace

TemplateKind kind_of(const ReducedModel& m) { return static_cast<TemplateKind>(m.index()); }

std::string to_string(TemplateKind k) {
    switch (k) {
        case TemplateKind::Foptd: return "foptd";
        case TemplateKind::Soptd: return "soptd";
        case TemplateKind::Nioptd1: return "nioptd1";
        case TemplateKind::Nioptd2: return "nioptd2";
    }
    return "?";
}

TemplateKind parse_template_kind(const std::string& name) {
    std::string s;
    for (char c : name) {
        if (c != '-' && c != '_') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (s == "foptd") return TemplateKind::Foptd;
    if (s == "soptd") return TemplateKind::Soptd;
    if (s == "nioptd1" || s == "nioptdi") return TemplateKind::Nioptd1;
    if (s == "nioptd2" || s == "nioptdii") return TemplateKind::Nioptd2;
    throw std::invalid_argument("unknown template kind: " + name);
}

void validate(const ReducedModel& m) {
    const auto fail = [](const char* what) { throw std::invalid_argument(std::string("ReducedModel: ") + what); };
    const auto p = parameters(m);
    for (double v : p) {
        if (!std::isfinite(v)) fail("non-finite parameter");
    }
    std::visit(overloaded{
                   [&](const Foptd& f) {
                       if (!(f.K > 0 && f.T > 0 && f.L >= 0)) fail("FOPTD needs K > 0, T > 0, L >= 0");
                   },
                   [&](const Soptd& f) {
                       if (!(f.K > 0 && f.b1 > 0 && f.b0 > 0 && f.L >= 0)) fail("SOPTD needs K, b1, b0 > 0, L >= 0");
                   },
                   [&](const Nioptd1& f) {
                       if (!(f.K > 0 && f.T > 0 && f.alpha > 0 && f.L >= 0)) {
                           fail("NIOPTD-I needs K, T, alpha > 0, L >= 0");
                       }
                   },
                   [&](const Nioptd2& f) {
                       if (!(f.K > 0 && f.b1 > 0 && f.b0 > 0 && f.L >= 0)) fail("NIOPTD-II needs K, b1, b0 > 0, L >= 0");
                       if (!(f.alpha > f.beta && f.beta > 0)) fail("NIOPTD-II needs alpha > beta > 0");
                   },
               },
               m);
}

Fotf to_fotf(const ReducedModel& m) {
    validate(m);
    return std::visit(overloaded{
                          [](const Foptd& f) { return Fotf({{f.K, 0.0}}, {{f.T, 1.0}, {1.0, 0.0}}, f.L); },
                          [](const Soptd& f) {
                              return Fotf({{f.K, 0.0}}, {{1.0, 2.0}, {f.b1, 1.0}, {f.b0, 0.0}}, f.L);
                          },
                          [](const Nioptd1& f) { return Fotf({{f.K, 0.0}}, {{f.T, f.alpha}, {1.0, 0.0}}, f.L); },
                          [](const Nioptd2& f) {
                              return Fotf({{f.K, 0.0}}, {{1.0, f.alpha}, {f.b1, f.beta}, {f.b0, 0.0}}, f.L);
                          },
                      },
                      m);
}

double damping_ratio(double b1, double b0) { return b1 / (2.0 * std::sqrt(b0)); }
double natural_frequency(double b0) { return std::sqrt(b0); }

std::vector<double> parameters(const ReducedModel& m) {
    return std::visit(overloaded{
                          [](const Foptd& f) { return std::vector<double>{f.K, f.T, f.L}; },
                          [](const Soptd& f) { return std::vector<double>{f.K, f.b1, f.b0, f.L}; },
                          [](const Nioptd1& f) { return std::vector<double>{f.K, f.T, f.alpha, f.L}; },
                          [](const Nioptd2& f) { return std::vector<double>{f.K, f.alpha, f.beta, f.b1, f.b0, f.L}; },
                      },
                      m);
}

std::vector<std::string> parameter_names(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::Foptd: return {"K", "T", "L"};
        case TemplateKind::Soptd: return {"K", "b1", "b0", "L"};
        case TemplateKind::Nioptd1: return {"K", "T", "alpha", "L"};
        case TemplateKind::Nioptd2: return {"K", "alpha", "beta", "b1", "b0", "L"};
    }
    return {};
}

ReducedModel from_parameters(TemplateKind kind, const std::vector<double>& p) {
    if (p.size() != parameter_names(kind).size()) throw std::invalid_argument("from_parameters: wrong count");
    switch (kind) {
        case TemplateKind::Foptd: return Foptd{p[0], p[1], p[2]};
        case TemplateKind::Soptd: return Soptd{p[0], p[1], p[2], p[3]};
        case TemplateKind::Nioptd1: return Nioptd1{p[0], p[1], p[2], p[3]};
        case TemplateKind::Nioptd2: return Nioptd2{p[0], p[1], p[2], p[3], p[4], p[5]};
    }
    throw std::invalid_argument("from_parameters: bad kind");
}

double h2_mismatch(const Fotf& a, const Fotf& b, const H2Options& opt) {
    const auto w = log_grid(opt);
    std::vector<double> sq(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::complex<double> d = freq_response(a, w[i]) - freq_response(b, w[i]);
        if (!std::isfinite(d.real()) || !std::isfinite(d.imag())) {
            std::ostringstream msg;
            msg << "h2_mismatch: non-finite response at omega = " << w[i];
            throw std::invalid_argument(msg.str());
        }
        sq[i] = std::norm(d);
    }
    return integrate_sq(sq, w);
}

double h2_mismatch(const Fotf& p, const ReducedModel& m, const H2Options& opt) {
    return h2_mismatch(p, to_fotf(m), opt);
}

double h2_norm(const Fotf& g, const H2Options& opt) {
    const auto w = log_grid(opt);
    std::vector<double> sq(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) sq[i] = std::norm(freq_response(g, w[i]));
    return integrate_sq(sq, w);
}

namespace {

/// Mismatch against a fixed plant on a fixed grid, with template responses
/// evaluated from precomputed logarithms.
class MismatchEvaluator {
public:
    MismatchEvaluator(const Fotf& p, const H2Options& opt) : w_(log_grid(opt)) {
        lnw_.resize(w_.size());
        plant_.resize(w_.size());
        sq_.resize(w_.size());
        for (std::size_t i = 0; i < w_.size(); ++i) {
            lnw_[i] = std::log(w_[i]);
            plant_[i] = freq_response(p, w_[i]);
            if (!std::isfinite(plant_[i].real()) || !std::isfinite(plant_[i].imag())) {
                std::ostringstream msg;
                msg << "fit_template: plant response non-finite at omega = " << w_[i];
                throw std::invalid_argument(msg.str());
            }
        }
    }

    double operator()(const ReducedModel& m) {
        // Each template is K / den(s) * e^{-Ls} with den = sum c_k s^{a_k}.
        double K = 0, L = 0;
        FracTerm den[3];
        int nd = 0;
        std::visit(overloaded{
                       [&](const Foptd& f) {
                           K = f.K, L = f.L;
                           den[0] = {f.T, 1.0};
                           den[1] = {1.0, 0.0};
                           nd = 2;
                       },
                       [&](const Soptd& f) {
                           K = f.K, L = f.L;
                           den[0] = {1.0, 2.0};
                           den[1] = {f.b1, 1.0};
                           den[2] = {f.b0, 0.0};
                           nd = 3;
                       },
                       [&](const Nioptd1& f) {
                           K = f.K, L = f.L;
                           den[0] = {f.T, f.alpha};
                           den[1] = {1.0, 0.0};
                           nd = 2;
                       },
                       [&](const Nioptd2& f) {
                           K = f.K, L = f.L;
                           den[0] = {1.0, f.alpha};
                           den[1] = {f.b1, f.beta};
                           den[2] = {f.b0, 0.0};
                           nd = 3;
                       },
                   },
                   m);
        std::complex<double> rot[3];
        for (int k = 0; k < nd; ++k) {
            const double ang = den[k].exponent * std::numbers::pi / 2.0;
            rot[k] = den[k].coeff * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        for (std::size_t i = 0; i < w_.size(); ++i) {
            std::complex<double> d = 0.0;
            for (int k = 0; k < nd; ++k) {
                d += den[k].exponent == 0.0 ? rot[k] : rot[k] * std::exp(den[k].exponent * lnw_[i]);
            }
            const std::complex<double> model = K / d * std::polar(1.0, -w_[i] * L);
            sq_[i] = std::norm(plant_[i] - model);
        }
        return integrate_sq(sq_, w_);
    }

    double truncation_estimate(const ReducedModel& m, double j_f) {
        const Fotf g = to_fotf(m);
        const double lo = std::norm(plant_.front() - freq_response(g, w_.front())) * w_.front();
        const double hi = std::norm(plant_.back() - freq_response(g, w_.back())) * w_.back();
        return std::sqrt(j_f * j_f + (lo + hi) / std::numbers::pi) - j_f;
    }

    const std::vector<double>& grid() const { return w_; }
    const std::vector<std::complex<double>>& plant() const { return plant_; }

private:
    std::vector<double> w_, lnw_, sq_;
    std::vector<std::complex<double>> plant_;
};

// Which entries of the parameter vector are optimized in log space.
std::vector<bool> log_mask(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::Foptd: return {true, true, false};
        case TemplateKind::Soptd: return {true, true, true, false};
        case TemplateKind::Nioptd1: return {true, true, false, false};
        case TemplateKind::Nioptd2: return {true, false, false, true, true, false};
    }
    return {};
}

BoxBounds search_box(TemplateKind kind) {
    const auto names = parameter_names(kind);
    RealVector lo(static_cast<Eigen::Index>(names.size())), hi(lo.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (names[i] == "L") {
            lo[k] = 0.0, hi[k] = 1e3;
        } else if (names[i] == "alpha") {
            lo[k] = 0.05, hi[k] = 4.0;
        } else if (names[i] == "beta") {
            lo[k] = 0.01, hi[k] = 3.0;
        } else {
            lo[k] = -25.0, hi[k] = 25.0;
        }
    }
    return {lo, hi};
}

RealVector encode(const ReducedModel& m) {
    const auto p = parameters(m);
    const auto mask = log_mask(kind_of(m));
    RealVector z(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) z[static_cast<Eigen::Index>(i)] = mask[i] ? std::log(p[i]) : p[i];
    return z;
}

ReducedModel decode(TemplateKind kind, const RealVector& z) {
    const auto mask = log_mask(kind);
    std::vector<double> p(static_cast<std::size_t>(z.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double v = z[static_cast<Eigen::Index>(i)];
        p[i] = mask[i] ? std::exp(v) : v;
    }
    return from_parameters(kind, p);
}

struct StepSeed {
    double dc = 1.0;
    double T = 1.0;
    double L = 0.1;
};

// Gain from the low end of the band, time constant and apparent delay from
// the step response (2% and 63% points).
StepSeed step_seed(const Fotf& p, const MismatchEvaluator& ev) {
    StepSeed s;
    s.dc = ev.plant().front().real();
    if (!(s.dc > 0.0)) s.dc = std::abs(ev.plant().front());
    double wb = ev.grid().back();
    for (std::size_t i = 0; i < ev.grid().size(); ++i) {
        if (std::abs(ev.plant()[i]) < std::abs(s.dc) / std::sqrt(2.0)) {
            wb = ev.grid()[i];
            break;
        }
    }
    const double tau = 1.0 / wb;
    s.T = tau;
    s.L = 0.1 * tau;
    try {
        const StateSpaced sys = realize(p);
        const std::size_t n = 4000;
        const double t_end = 20.0 * tau + 2.0 * p.delay;
        const double dt = t_end / static_cast<double>(n);
        const RealVector y = step_response(sys, dt, n + 1);
        const double yk = y[y.size() - 1];
        if (!(std::abs(yk) > 0.0) || !y.allFinite()) return s;
        double t2 = -1, t63 = -1;
        for (Eigen::Index k = 0; k < y.size(); ++k) {
            const double r = y[k] / yk;
            if (t2 < 0 && r >= 0.02) t2 = static_cast<double>(k) * dt;
            if (t63 < 0 && r >= 0.632) {
                t63 = static_cast<double>(k) * dt;
                break;
            }
        }
        if (t2 >= 0 && t63 > t2) {
            s.L = t2;
            s.T = t63 - t2;
        }
    } catch (const std::exception&) {
        // keep the frequency-based guess
    }
    return s;
}

ReducedModel heuristic_model(TemplateKind kind, const StepSeed& s) {
    const double a = 2.15 / s.T;  // double pole with the same 63% time
    switch (kind) {
        case TemplateKind::Foptd: return Foptd{s.dc, s.T, s.L};
        case TemplateKind::Soptd: return Soptd{s.dc * a * a, 2.0 * a, a * a, s.L};
        case TemplateKind::Nioptd1: return Nioptd1{s.dc, s.T, 1.0, s.L};
        case TemplateKind::Nioptd2: return Nioptd2{s.dc * a * a, 2.0, 1.0, 2.0 * a, a * a, s.L};
    }
    throw std::invalid_argument("heuristic_model: bad kind");
}

RealVector perturb(TemplateKind kind, const RealVector& z, std::mt19937_64& rng) {
    const auto names = parameter_names(kind);
    const auto mask = log_mask(kind);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RealVector out = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (mask[k]) {
            out[i] += 0.7 * u(rng);
        } else if (names[k] == "L") {
            out[i] = (z[i] > 0 ? z[i] : 0.05) * std::exp(0.7 * u(rng));
        } else {
            out[i] *= std::exp(0.15 * u(rng));
        }
    }
    if (kind == TemplateKind::Nioptd2 && out[2] >= out[1]) std::swap(out[1], out[2]);
    return search_box(kind).clamp(out);
}

RealVector initial_step(TemplateKind kind, const RealVector& z) {
    const auto names = parameter_names(kind);
    const auto mask = log_mask(kind);
    RealVector step(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (mask[k]) step[i] = 0.3;
        else if (names[k] == "L") step[i] = 0.1 * std::max(z[i], 0.1);
        else step[i] = 0.1;
    }
    return step;
}

bool lexicographically_less(const ReducedModel& a, const ReducedModel& b) {
    return parameters(a) < parameters(b);
}

}  // namespace

FitResult fit_template(const Fotf& p, TemplateKind kind, const std::optional<ReducedModel>& x0, const FitOptions& opt) {
    if (opt.starts < 1) throw std::invalid_argument("fit_template: starts must be >= 1");
    if (x0 && kind_of(*x0) != kind) throw std::invalid_argument("fit_template: seed model has the wrong template kind");
    MismatchEvaluator ev(p, opt.h2);
    const BoxBounds box = search_box(kind);

    std::vector<RealVector> seeds;
    if (x0) {
        validate(*x0);
        seeds.push_back(box.clamp(encode(*x0)));
    }
    seeds.push_back(box.clamp(encode(heuristic_model(kind, step_seed(p, ev)))));

    std::size_t evaluations = 0;
    const Objective objective = [&](const RealVector& z) {
        ++evaluations;
        double penalty = 0.0;
        RealVector zz = z;
        if (kind == TemplateKind::Nioptd2 && zz[2] >= zz[1]) {
            // keep alpha > beta: evaluate just inside the ordering and penalize
            penalty = 10.0 * (zz[2] - zz[1] + 1e-3);
            zz[2] = zz[1] - 1e-3;
        }
        const double v = ev(decode(kind, zz));
        return std::isfinite(v) ? v + penalty : std::numeric_limits<double>::infinity();
    };

    std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(kind));
    NelderMeadOptions nm;
    nm.tol_f = opt.tol;
    nm.tol_x = opt.tol;
    nm.max_evals = static_cast<std::size_t>(opt.max_evals_per_start);

    std::optional<FitResult> best;
    for (int s = 0; s < opt.starts; ++s) {
        RealVector z0 = static_cast<std::size_t>(s) < seeds.size()
                            ? seeds[static_cast<std::size_t>(s)]
                            : perturb(kind, seeds[static_cast<std::size_t>(s) % seeds.size()], rng);
        if (!std::isfinite(objective(z0))) continue;
        nm.initial_step = initial_step(kind, z0);
        const SolverReport rep = nelder_mead_minimize(objective, z0, box, nm);
        RealVector z = rep.solution;
        if (kind == TemplateKind::Nioptd2 && z[2] >= z[1]) z[2] = z[1] - 1e-3;
        FitResult r;
        r.kind = kind;
        r.model = decode(kind, z);
        r.j_f = ev(r.model);
        r.converged = rep.converged;
        if (!std::isfinite(r.j_f)) continue;
        if (!best || r.j_f < best->j_f || (r.j_f == best->j_f && lexicographically_less(r.model, best->model))) {
            best = r;
        }
    }
    if (!best) {
        FitResult r;
        r.kind = kind;
        r.model = decode(kind, seeds.front());
        r.j_f = std::numeric_limits<double>::infinity();
        r.converged = false;
        r.evaluations = evaluations;
        return r;
    }
    best->evaluations = evaluations;
    best->truncation_estimate = ev.truncation_estimate(best->model, best->j_f);
    return *best;
}

std::vector<RankEntry> rank_templates(const Fotf& p, const FitOptions& opt) {
    std::vector<RankEntry> out;
    auto run = [&](TemplateKind kind, const std::optional<ReducedModel>& seed) -> const RankEntry& {
        RankEntry e{kind, std::nullopt, {}};
        try {
            e.fit = fit_template(p, kind, seed, opt);
            if (!std::isfinite(e.fit->j_f)) {
                e.error = "no start produced a finite mismatch";
                e.fit.reset();
            }
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        out.push_back(std::move(e));
        return out.back();
    };
    // The richer templates start from their integer-order special case, so
    // they can never end worse than it.
    std::optional<ReducedModel> seed;
    {
        const RankEntry& f = run(TemplateKind::Foptd, std::nullopt);
        if (f.fit) {
            const auto& m = std::get<Foptd>(f.fit->model);
            seed = Nioptd1{m.K, m.T, 1.0, m.L};
        }
    }
    run(TemplateKind::Nioptd1, seed);
    seed.reset();
    {
        const RankEntry& s = run(TemplateKind::Soptd, std::nullopt);
        if (s.fit) {
            const auto& m = std::get<Soptd>(s.fit->model);
            seed = Nioptd2{m.K, 2.0, 1.0, m.b1, m.b0, m.L};
        }
    }
    run(TemplateKind::Nioptd2, seed);
    std::stable_sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.fit.has_value() != b.fit.has_value()) return a.fit.has_value();
        if (!a.fit) return false;
        return a.fit->j_f < b.fit->j_f;
    });
    return out;
}

}  // namespace fopid
