#ifndef FOPID_ANALYSIS_HPP
#define FOPID_ANALYSIS_HPP

#include <string>
#include <utility>
#include <vector>

#include "fopid/time_tuner.hpp"

namespace fopid {

struct FrequencyCurve {
    std::vector<double> omega;
    std::vector<double> magnitude_db;
    std::vector<double> phase_deg;
    /// Grid frequencies that were skipped (singular or non-finite).
    std::vector<double> gaps;
};

std::vector<double> log_space(double lo, double hi, std::size_t points);

/// Exact response on a log grid, phase unwrapped from the low end.
FrequencyCurve bode_curve(const Fotf& g, double omega_lo, double omega_hi, std::size_t points);

struct SensitivityCurves {
    FrequencyCurve S;
    FrequencyCurve T;
    /// Frequencies where |1 + G| < 1e-9.
    std::vector<double> near_singular;
};

SensitivityCurves sensitivity_curves(const Fotf& loop, double omega_lo = 1e-3, double omega_hi = 1e3,
                                     std::size_t points = 400);

/// Rise time 10-90 %, settling into a 2 % band.
struct StepMetrics {
    double mp_pct = 0.0;
    double t_r = 0.0;
    double t_s = 0.0;
    double y_ss = 0.0;
    /// False when y_ss is ~0; the other fields are then meaningless.
    bool defined = false;
    /// Final 10 % of samples inside the band; t_s is meaningless otherwise.
    bool settled = false;
};

StepMetrics step_metrics(const std::vector<double>& t, const std::vector<double>& y);
StepMetrics step_metrics(const SimResult& r);

struct GainSweepReport {
    std::vector<double> gains;
    std::vector<StepMetrics> metrics;
    std::vector<bool> stable;
};

inline const std::vector<double> kDefaultSweepGains{0.7, 1.0, 1.3, 1.5};

/// Step metrics of the loop with the controller scaled by each multiplier.
GainSweepReport iso_damping_sweep(const Fotf& p, const FopidParams& c,
                                  const std::vector<double>& gains = kDefaultSweepGains, const SimConfig& cfg = {});

/// Largest minus smallest overshoot over the stable entries.
double overshoot_spread(const GainSweepReport& r);

/// Headered CSV, one row per sample, values printed with 17 significant digits.
void export_csv(const FrequencyCurve& c, const std::string& path);
void export_csv(const SimResult& r, const std::string& path);
void export_csv(const GainSweepReport& r, const std::string& path);

/// Non-numeric cells read back as NaN.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

CsvTable read_csv(const std::string& path);

}  // namespace fopid

#endif  // FOPID_ANALYSIS_HPP
