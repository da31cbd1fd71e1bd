#include "fopid/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fopid {

namespace {

constexpr double kExponentTol = 1e-12;

std::vector<double> trim_leading(std::vector<double> p) {
    std::size_t first = 0;
    while (first + 1 < p.size() && p[first] == 0.0) ++first;
    p.erase(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(first));
    return p;
}

std::complex<double> horner(std::span<const double> p, std::complex<double> s) {
    std::complex<double> acc = 0.0;
    for (double c : p) acc = acc * s + c;
    return acc;
}

// s^n as a descending coefficient vector.
std::vector<double> monomial(int n) {
    std::vector<double> p(static_cast<std::size_t>(n) + 1, 0.0);
    p[0] = 1.0;
    return p;
}

}  // namespace

std::vector<double> poly_mul(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

std::vector<double> poly_add(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::max(a.size(), b.size());
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) out[n - a.size() + i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[n - b.size() + i] += b[i];
    return out;
}

FracPoly::FracPoly(std::vector<FracTerm> terms) {
    for (const auto& t : terms) {
        if (!std::isfinite(t.coeff) || !std::isfinite(t.exponent)) {
            throw std::invalid_argument("FracPoly: non-finite coefficient or exponent");
        }
    }
    std::stable_sort(terms.begin(), terms.end(),
                     [](const FracTerm& a, const FracTerm& b) { return a.exponent > b.exponent; });
    for (const auto& t : terms) {
        if (!terms_.empty() && std::abs(terms_.back().exponent - t.exponent) <= kExponentTol) {
            terms_.back().coeff += t.coeff;
        } else {
            terms_.push_back(t);
        }
    }
    std::erase_if(terms_, [](const FracTerm& t) { return t.coeff == 0.0; });
    if (terms_.empty()) throw std::invalid_argument("FracPoly: needs at least one non-zero term");
}

FracPoly FracPoly::from_coefficients(std::span<const double> descending) {
    std::vector<FracTerm> terms;
    const auto n = descending.size();
    for (std::size_t i = 0; i < n; ++i) {
        terms.push_back({descending[i], static_cast<double>(n - 1 - i)});
    }
    return FracPoly(std::move(terms));
}

bool FracPoly::is_integer_order() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const FracTerm& t) { return t.exponent == std::round(t.exponent); });
}

std::complex<double> FracPoly::at(double omega) const {
    if (omega < 0.0) throw std::invalid_argument("FracPoly::at: negative frequency");
    std::complex<double> sum = 0.0;
    if (omega == 0.0) {
        for (const auto& t : terms_) {
            if (t.exponent < 0.0) throw std::invalid_argument("FracPoly::at: singular term at omega = 0");
            if (t.exponent == 0.0) sum += t.coeff;
        }
        return sum;
    }
    const double log_w = std::log(omega);
    for (const auto& t : terms_) {
        const double mag = t.coeff * std::exp(t.exponent * log_w);
        const double ang = t.exponent * std::numbers::pi / 2.0;
        sum += std::complex<double>(mag * std::cos(ang), mag * std::sin(ang));
    }
    return sum;
}

FracPoly operator*(const FracPoly& a, const FracPoly& b) {
    std::vector<FracTerm> out;
    out.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& x : a.terms_) {
        for (const auto& y : b.terms_) out.push_back({x.coeff * y.coeff, x.exponent + y.exponent});
    }
    return FracPoly(std::move(out));
}

FracPoly operator+(const FracPoly& a, const FracPoly& b) {
    std::vector<FracTerm> out = a.terms_;
    out.insert(out.end(), b.terms_.begin(), b.terms_.end());
    return FracPoly(std::move(out));
}

FracPoly operator*(double k, const FracPoly& p) {
    std::vector<FracTerm> out = p.terms_;
    for (auto& t : out) t.coeff *= k;
    return FracPoly(std::move(out));
}

FracTransferFunction::FracTransferFunction(FracPoly n, FracPoly d, double L)
    : num(std::move(n)), den(std::move(d)), delay(L) {
    if (!(delay >= 0.0) || !std::isfinite(delay)) throw std::invalid_argument("Fotf: delay must be >= 0");
}

RationalTf::RationalTf(std::vector<double> n, std::vector<double> d) {
    d = trim_leading(std::move(d));
    if (d.empty() || d.front() == 0.0) throw std::invalid_argument("RationalTf: zero denominator");
    n = trim_leading(std::move(n));
    if (n.empty()) n = {0.0};
    const double lead = d.front();
    if (lead != 1.0) {
        for (auto& c : d) c /= lead;
        for (auto& c : n) c /= lead;
    }
    num = std::move(n);
    den = std::move(d);
}

std::complex<double> RationalTf::at(double omega) const {
    const std::complex<double> s(0.0, omega);
    return horner(num, s) / horner(den, s);
}

double RationalTf::dc_gain() const { return num.back() / den.back(); }

void OustaloupConfig::validate() const {
    if (!(omega_low > 0.0) || !(omega_high > omega_low)) {
        throw std::invalid_argument("OustaloupConfig: need 0 < omega_low < omega_high");
    }
    if (order < 1) throw std::invalid_argument("OustaloupConfig: order must be >= 1");
}

PowerSplit split_power(double alpha) {
    const double whole = std::trunc(alpha);
    double frac = alpha - whole;
    if (std::abs(frac) < kExponentTol) frac = 0.0;
    return {static_cast<int>(whole), frac};
}

OustaloupFilter oustaloup_filter(double gamma, const OustaloupConfig& cfg) {
    cfg.validate();
    if (!(std::abs(gamma) < 1.0)) throw std::invalid_argument("oustaloup_filter: |gamma| must be < 1");
    OustaloupFilter f;
    if (gamma == 0.0) return f;
    const double ratio = cfg.omega_high / cfg.omega_low;
    const int n = 2 * cfg.order + 1;
    for (int k = 1; k <= n; ++k) {
        f.zeros.push_back(cfg.omega_low * std::pow(ratio, (2.0 * k - 1.0 - gamma) / (2.0 * n)));
        f.poles.push_back(cfg.omega_low * std::pow(ratio, (2.0 * k - 1.0 + gamma) / (2.0 * n)));
    }
    f.gain = std::pow(cfg.omega_high, gamma);
    return f;
}

namespace {

struct Fraction {
    std::vector<double> num;
    std::vector<double> den;
};

Fraction add(const Fraction& a, const Fraction& b) {
    if (a.den == b.den) return {poly_add(a.num, b.num), a.den};
    return {poly_add(poly_mul(a.num, b.den), poly_mul(b.num, a.den)), poly_mul(a.den, b.den)};
}

// gain * prod(s + z) / prod(s + p)
Fraction filter_fraction(const OustaloupFilter& f) {
    std::vector<double> num{f.gain}, den{1.0};
    for (double z : f.zeros) num = poly_mul(num, std::vector<double>{1.0, z});
    for (double p : f.poles) den = poly_mul(den, std::vector<double>{1.0, p});
    return {num, den};
}

// Sum of terms sharing one fractional remainder: (sum c s^n) * O(f).
Fraction group_fraction(const std::vector<std::pair<double, int>>& terms, double fraction,
                        const OustaloupConfig& cfg) {
    int n_min = 0, n_max = 0;
    for (const auto& [c, n] : terms) {
        n_min = std::min(n_min, n);
        n_max = std::max(n_max, n);
    }
    std::vector<double> poly(static_cast<std::size_t>(n_max - n_min) + 1, 0.0);
    for (const auto& [c, n] : terms) poly[static_cast<std::size_t>(n_max - n)] += c;
    Fraction out{poly, monomial(-n_min)};
    if (fraction != 0.0) {
        const Fraction o = filter_fraction(oustaloup_filter(fraction, cfg));
        out.num = poly_mul(out.num, o.num);
        out.den = poly_mul(out.den, o.den);
    }
    return out;
}

Fraction rational_of(const FracPoly& p, const OustaloupConfig& cfg) {
    std::map<double, std::vector<std::pair<double, int>>> groups;
    for (const auto& t : p.terms()) {
        const PowerSplit sp = split_power(t.exponent);
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& kv) {
            return std::abs(kv.first - sp.fraction) <= kExponentTol;
        });
        if (it == groups.end()) it = groups.emplace(sp.fraction, std::vector<std::pair<double, int>>{}).first;
        it->second.emplace_back(t.coeff, sp.integer);
    }
    Fraction total;
    bool first = true;
    for (const auto& [fraction, terms] : groups) {
        const Fraction g = group_fraction(terms, fraction, cfg);
        total = first ? g : add(total, g);
        first = false;
    }
    return total;
}

}  // namespace

std::complex<double> freq_response(const Fotf& g, double omega) {
    if (omega < 0.0 || !std::isfinite(omega)) throw std::invalid_argument("freq_response: omega must be >= 0");
    const std::complex<double> den = g.den.at(omega);
    if (den == 0.0) throw std::invalid_argument("freq_response: denominator vanishes");
    const std::complex<double> delay = std::polar(1.0, -omega * g.delay);
    return g.num.at(omega) / den * delay;
}

double phase_slope(const Fotf& g, double omega, double h) {
    if (!(omega > 0.0)) throw std::invalid_argument("phase_slope: omega must be positive");
    const double lo = omega * (1.0 - h), hi = omega * (1.0 + h);
    // The ratio's argument is the unwrapped phase increment for small h.
    return std::arg(freq_response(g, hi) / freq_response(g, lo)) / (hi - lo);
}

RationalTf oustaloup(double alpha, const OustaloupConfig& cfg) {
    cfg.validate();
    if (!(std::abs(alpha) < 2.0)) throw std::invalid_argument("oustaloup: alpha must lie in (-2, 2)");
    const PowerSplit sp = split_power(alpha);
    Fraction f{{1.0}, {1.0}};
    if (sp.fraction != 0.0) f = filter_fraction(oustaloup_filter(sp.fraction, cfg));
    if (sp.integer > 0) f.num = poly_mul(f.num, monomial(sp.integer));
    if (sp.integer < 0) f.den = poly_mul(f.den, monomial(-sp.integer));
    return {f.num, f.den};
}

RationalTf pade_delay(double L, int order) {
    if (!(L >= 0.0)) throw std::invalid_argument("pade_delay: L must be >= 0");
    if (order < 1) throw std::invalid_argument("pade_delay: order must be >= 1");
    if (L == 0.0) return {};
    const int n = order;
    std::vector<double> num(static_cast<std::size_t>(n) + 1), den(static_cast<std::size_t>(n) + 1);
    // c_k = (2n-k)! n! / ((2n)! k! (n-k)!), built by the ratio c_{k+1}/c_k.
    double c = 1.0;
    for (int k = 0; k <= n; ++k) {
        const double ck = c * std::pow(L, k);
        den[static_cast<std::size_t>(n - k)] = ck;
        num[static_cast<std::size_t>(n - k)] = (k % 2 == 0 ? ck : -ck);
        c *= static_cast<double>(n - k) / static_cast<double>((2 * n - k) * (k + 1));
    }
    return {num, den};
}

RationalTf rationalize(const Fotf& g, const OustaloupConfig& ocfg, int pade_order, std::size_t degree_cap) {
    ocfg.validate();
    const Fraction n = rational_of(g.num, ocfg);
    const Fraction d = rational_of(g.den, ocfg);
    RationalTf out(poly_mul(n.num, d.den), poly_mul(n.den, d.num));
    if (g.delay > 0.0) out = series(out, pade_delay(g.delay, pade_order));
    if (std::max(out.num_degree(), out.den_degree()) > degree_cap) {
        std::ostringstream msg;
        msg << "rationalize: realized degree " << std::max(out.num_degree(), out.den_degree())
            << " exceeds cap " << degree_cap << "; lower the Oustaloup order or use realize()";
        throw std::invalid_argument(msg.str());
    }
    return out;
}

Fotf series(const Fotf& a, const Fotf& b) { return {a.num * b.num, a.den * b.den, a.delay + b.delay}; }

RationalTf series(const RationalTf& a, const RationalTf& b) {
    return {poly_mul(a.num, b.num), poly_mul(a.den, b.den)};
}

RationalTf feedback_unity(const RationalTf& g) { return {g.num, poly_add(g.den, g.num)}; }

bool is_stable(const RationalTf& g, double margin) {
    if (g.den_degree() < 1) throw std::invalid_argument("is_stable: denominator degree must be >= 1");
    const auto roots = polynomial_roots(g.den);
    return std::all_of(roots.begin(), roots.end(), [&](const auto& r) { return r.real() < -margin; });
}

StateSpaced oustaloup_state_space(double gamma, const OustaloupConfig& cfg) {
    const OustaloupFilter f = oustaloup_filter(gamma, cfg);
    StateSpaced sys = StateSpaced::gain(f.gain);
    for (std::size_t k = 0; k < f.zeros.size(); ++k) {
        // (s + z)/(s + p) = 1 + (z - p)/(s + p)
        Eigen::MatrixXd A(1, 1), B(1, 1), C(1, 1), D(1, 1);
        A(0, 0) = -f.poles[k];
        B(0, 0) = 1.0;
        C(0, 0) = f.zeros[k] - f.poles[k];
        D(0, 0) = 1.0;
        sys = series(sys, StateSpaced(A, B, C, D));
    }
    return sys;
}

namespace {

// Mix a block-diagonal bank: inputs selected by `select` (bank inputs x
// outer inputs) and outputs combined by `weights` (outer outputs x bank outputs).
StateSpaced mix(const StateSpaced& bank, const Eigen::MatrixXd& weights, const Eigen::MatrixXd& select) {
    return {bank.A, bank.B * select, weights * bank.C, weights * bank.D * select};
}

}  // namespace

StateSpaced realize(const Fotf& g, const OustaloupConfig& ocfg, int pade_order) {
    ocfg.validate();
    for (const auto* poly : {&g.num, &g.den}) {
        for (const auto& t : poly->terms()) {
            if (t.exponent < 0.0) throw std::invalid_argument("realize: negative exponents are not supported");
        }
    }
    const FracTerm lead = g.den.leading();
    if (g.num.leading().exponent > lead.exponent + kExponentTol) {
        throw std::invalid_argument("realize: improper transfer function");
    }

    // z solves den(s) z = v: v -> O(-f0)/d0 -> n0 integrators -> z.
    const PowerSplit lead_split = split_power(lead.exponent);
    const int depth = lead_split.integer;
    StateSpaced front = scale_output(oustaloup_state_space(-lead_split.fraction, ocfg), 1.0 / lead.coeff);
    const Eigen::Index nf = front.order();
    const Eigen::Index nz = nf + depth;

    // Outputs of the core: taps z^(k), k = 0..depth.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nz, nz), B = Eigen::MatrixXd::Zero(nz, 1);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(depth + 1, nz), D = Eigen::MatrixXd::Zero(depth + 1, 1);
    A.topLeftCorner(nf, nf) = front.A;
    B.topRows(nf) = front.B;
    if (depth > 0) {
        A.block(nf, 0, 1, nf) = front.C;  // first integrator integrates w
        B(nf, 0) = front.D(0, 0);
        for (int i = 1; i < depth; ++i) A(nf + i, nf + i - 1) = 1.0;
    }
    for (int k = 0; k <= depth; ++k) {
        const int pos = depth - k;  // number of integrations applied
        if (pos == 0) {
            C.block(k, 0, 1, nf) = front.C;
            D(k, 0) = front.D(0, 0);
        } else {
            C(k, nf + pos - 1) = 1.0;
        }
    }
    const StateSpaced core(A, B, C, D);

    // Bank of O(f) blocks, one per (tap, fraction) pair; outputs [q; y].
    struct Entry {
        int tap;
        double fraction;
        double q_weight = 0.0;
        double y_weight = 0.0;
    };
    std::vector<Entry> entries;
    auto add_term = [&](const FracTerm& t, bool to_feedback) {
        const PowerSplit sp = split_power(t.exponent);
        auto it = std::find_if(entries.begin(), entries.end(), [&](const Entry& e) {
            return e.tap == sp.integer && std::abs(e.fraction - sp.fraction) <= kExponentTol;
        });
        if (it == entries.end()) {
            entries.push_back({sp.integer, sp.fraction});
            it = entries.end() - 1;
        }
        (to_feedback ? it->q_weight : it->y_weight) += t.coeff;
    };
    for (std::size_t j = 1; j < g.den.terms().size(); ++j) add_term(g.den.terms()[j], true);
    for (const auto& t : g.num.terms()) add_term(t, false);

    StateSpaced bank;
    bool first = true;
    Eigen::MatrixXd select = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(entries.size()), depth + 1);
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const StateSpaced block = oustaloup_state_space(entries[i].fraction, ocfg);
        bank = first ? block : append(bank, block);
        first = false;
        select(row, entries[i].tap) = 1.0;
        weights(0, row) = entries[i].q_weight;
        weights(1, row) = entries[i].y_weight;
    }
    const StateSpaced forward = series(core, mix(bank, weights, select));

    // Close v = u - q; keep output y.
    const double denom = 1.0 + forward.D(0, 0);
    if (std::abs(denom) < 1e-14) throw std::invalid_argument("realize: ill-posed algebraic loop");
    const Eigen::MatrixXd Cq = forward.C.row(0), Cy = forward.C.row(1);
    const double Dy = forward.D(1, 0);
    Eigen::MatrixXd Acl = forward.A - forward.B * Cq / denom;
    Eigen::MatrixXd Bcl = forward.B / denom;
    Eigen::MatrixXd Ccl = Cy - Dy * Cq / denom;
    Eigen::MatrixXd Dcl(1, 1);
    Dcl(0, 0) = Dy / denom;
    StateSpaced out(Acl, Bcl, Ccl, Dcl);

    if (g.delay > 0.0) {
        const RationalTf pade = pade_delay(g.delay, pade_order);
        out = series(out, realize_tf(pade.num, pade.den));
    }
    return out;
}

}  // namespace fopid
