#include "fopid/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fopid {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_rows(std::ofstream& out, const std::string& header, const std::vector<const std::vector<double>*>& cols) {
    out << header << '\n';
    const std::size_t n = cols.empty() ? 0 : cols.front()->size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << fmt((*cols[j])[i]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed");
}

// First time the response crosses `level` (interpolated), or -1.
double crossing(const std::vector<double>& t, const std::vector<double>& y, double level) {
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k] >= level) {
            if (k == 0) return t[0];
            const double f = (level - y[k - 1]) / (y[k] - y[k - 1]);
            return t[k - 1] + f * (t[k] - t[k - 1]);
        }
    }
    return -1.0;
}

}  // namespace

std::vector<double> log_space(double lo, double hi, std::size_t points) {
    if (!(lo > 0) || !(hi > lo) || points < 2) throw std::invalid_argument("log_space: need 0 < lo < hi, points >= 2");
    std::vector<double> w(points);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < points; ++i) {
        w[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    return w;
}

FrequencyCurve bode_curve(const Fotf& g, double omega_lo, double omega_hi, std::size_t points) {
    FrequencyCurve c;
    bool have_prev = false;
    std::complex<double> prev;
    double phase = 0.0;
    for (double w : log_space(omega_lo, omega_hi, points)) {
        std::complex<double> v;
        try {
            v = freq_response(g, w);
        } catch (const std::invalid_argument&) {
            c.gaps.push_back(w);
            continue;
        }
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || v == 0.0) {
            c.gaps.push_back(w);
            continue;
        }
        phase = have_prev ? phase + std::arg(v / prev) : std::arg(v);
        prev = v;
        have_prev = true;
        c.omega.push_back(w);
        c.magnitude_db.push_back(20.0 * std::log10(std::abs(v)));
        c.phase_deg.push_back(phase * kRadToDeg);
    }
    return c;
}

SensitivityCurves sensitivity_curves(const Fotf& loop, double omega_lo, double omega_hi, std::size_t points) {
    SensitivityCurves out;
    std::complex<double> prev_s, prev_t;
    double ps = 0, pt = 0;
    bool have_prev = false;
    for (double w : log_space(omega_lo, omega_hi, points)) {
        std::complex<double> G;
        try {
            G = freq_response(loop, w);
        } catch (const std::invalid_argument&) {
            out.S.gaps.push_back(w);
            out.T.gaps.push_back(w);
            continue;
        }
        const std::complex<double> den = 1.0 + G;
        if (std::abs(den) < 1e-9) {
            out.near_singular.push_back(w);
            out.S.gaps.push_back(w);
            out.T.gaps.push_back(w);
            continue;
        }
        const std::complex<double> S = 1.0 / den, T = G / den;
        ps = have_prev ? ps + std::arg(S / prev_s) : std::arg(S);
        pt = have_prev ? pt + std::arg(T / prev_t) : std::arg(T);
        prev_s = S, prev_t = T;
        have_prev = true;
        out.S.omega.push_back(w);
        out.S.magnitude_db.push_back(20.0 * std::log10(std::abs(S)));
        out.S.phase_deg.push_back(ps * kRadToDeg);
        out.T.omega.push_back(w);
        out.T.magnitude_db.push_back(20.0 * std::log10(std::abs(T)));
        out.T.phase_deg.push_back(pt * kRadToDeg);
    }
    return out;
}

StepMetrics step_metrics(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.empty()) throw std::invalid_argument("step_metrics: mismatched or empty samples");
    StepMetrics m;
    m.y_ss = y.back();
    if (!(std::abs(m.y_ss) > 1e-12) || !std::isfinite(m.y_ss)) return m;
    m.defined = true;
    // Work on the response normalized by its final value.
    std::vector<double> z(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) z[k] = y[k] / m.y_ss;
    m.mp_pct = std::max(0.0, 100.0 * (*std::max_element(z.begin(), z.end()) - 1.0));
    const double t10 = crossing(t, z, 0.1), t90 = crossing(t, z, 0.9);
    m.t_r = (t10 >= 0 && t90 >= 0) ? t90 - t10 : std::numeric_limits<double>::quiet_NaN();

    std::size_t last_out = z.size();
    for (std::size_t k = z.size(); k-- > 0;) {
        if (std::abs(z[k] - 1.0) > 0.02) {
            last_out = k;
            break;
        }
    }
    if (last_out == z.size()) {
        m.t_s = t.front();
    } else if (last_out + 1 < z.size()) {
        const double a = std::abs(z[last_out] - 1.0), b = std::abs(z[last_out + 1] - 1.0);
        const double f = a == b ? 1.0 : (a - 0.02) / (a - b);
        m.t_s = t[last_out] + f * (t[last_out + 1] - t[last_out]);
    } else {
        m.t_s = t.back();
    }
    const std::size_t tail = z.size() - z.size() / 10;
    m.settled = last_out == z.size() || last_out < tail;
    return m;
}

StepMetrics step_metrics(const SimResult& r) {
    if (r.overflow) return StepMetrics{};
    return step_metrics(r.t, r.y);
}

GainSweepReport iso_damping_sweep(const Fotf& p, const FopidParams& c, const std::vector<double>& gains,
                                  const SimConfig& cfg) {
    GainSweepReport out;
    for (double k : gains) {
        if (!(k > 0) || !std::isfinite(k)) throw std::invalid_argument("iso_damping_sweep: multipliers must be positive");
    }
    for (double k : gains) {
        FopidParams ck = c;
        ck.Kp *= k;
        ck.Ki *= k;
        ck.Kd *= k;
        out.gains.push_back(k);
        try {
            const ClosedLoop loop = closed_loop_realize(p, ck, cfg);
            const bool stable = is_stable(loop.S);
            out.stable.push_back(stable);
            out.metrics.push_back(stable ? step_metrics(simulate_step(loop, cfg)) : StepMetrics{});
        } catch (const std::invalid_argument&) {
            out.stable.push_back(false);
            out.metrics.push_back(StepMetrics{});
        }
    }
    return out;
}

double overshoot_spread(const GainSweepReport& r) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
        if (!r.stable[i] || !r.metrics[i].defined) return std::numeric_limits<double>::infinity();
        lo = std::min(lo, r.metrics[i].mp_pct);
        hi = std::max(hi, r.metrics[i].mp_pct);
    }
    return r.metrics.empty() ? 0.0 : hi - lo;
}

void export_csv(const FrequencyCurve& c, const std::string& path) {
    auto out = open_out(path);
    write_rows(out, "omega,mag_db,phase_deg", {&c.omega, &c.magnitude_db, &c.phase_deg});
}

void export_csv(const SimResult& r, const std::string& path) {
    auto out = open_out(path);
    write_rows(out, "t,y,u,e", {&r.t, &r.y, &r.u, &r.e});
}

void export_csv(const GainSweepReport& r, const std::string& path) {
    std::vector<double> mp, tr, ts, st;
    for (std::size_t i = 0; i < r.gains.size(); ++i) {
        mp.push_back(r.metrics[i].mp_pct);
        tr.push_back(r.metrics[i].t_r);
        ts.push_back(r.metrics[i].t_s);
        st.push_back(r.stable[i] ? 1.0 : 0.0);
    }
    auto out = open_out(path);
    write_rows(out, "gain,mp_pct,t_r,t_s,stable", {&r.gains, &mp, &tr, &ts, &st});
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    t.columns.resize(t.header.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t j = 0;
        while (std::getline(ss, cell, ',')) {
            if (j >= t.columns.size()) throw std::runtime_error("CSV row wider than header in " + path);
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            t.columns[j++].push_back(end != cell.c_str() && *end == '\0' ? v : std::numeric_limits<double>::quiet_NaN());
        }
        if (j != t.columns.size()) throw std::runtime_error("CSV row narrower than header in " + path);
    }
    return t;
}

}  // namespace fopid
