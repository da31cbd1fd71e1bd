#ifndef FOPID_FREQ_TUNER_HPP
#define FOPID_FREQ_TUNER_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "fopid/fractional.hpp"
#include "fopid/numerics.hpp"

namespace fopid {

/// C(s) = Kp + Ki/s^lambda + Kd s^mu
struct FopidParams {
    double Kp = 1.0;
    double Ki = 0.0;
    double Kd = 0.0;
    double lambda = 1.0;
    double mu = 1.0;

    /// Finite, gains >= 0, orders in (0, 2].
    void validate() const;
    /// Strict form used for tuned designs: gains > 0, orders in (0, 2).
    bool admissible() const;

    RealVector to_vector() const;
    static FopidParams from_vector(const RealVector& v);
};

struct FreqSpec {
    double phi_m_deg = 80.0;
    double omega_gc = 1.0;
    double A_db = -40.0;
    double omega_t = 10.0;
    double B_db = -40.0;
    double omega_s = 0.01;

    void validate() const;
};

using SpecResiduals = std::array<double, 5>;

struct TuningResult {
    FopidParams params;
    SpecResiduals residuals{};
    bool converged = false;
    SolverReport solver_report;
    /// Set when the equality system had no admissible root and the design
    /// meets the phase/gain/flatness conditions with the caps treated as
    /// upper bounds instead.
    bool caps_relaxed = false;
    std::string advisory;
};

/// (Kp s^lambda + Ki + Kd s^(lambda+mu)) / s^lambda
Fotf fopid_to_fotf(const FopidParams& c);

std::complex<double> controller_response(const FopidParams& c, double omega);

struct ControllerResponse {
    double magnitude = 0.0;
    double phase = 0.0;
    /// d(Arg C)/d omega
    double phase_slope = 0.0;
};

ControllerResponse controller_response_analytic(const FopidParams& c, double omega);

/// r1 phase (rad), r2 gain, r3 phase slope, r4 |T(j omega_t)| - A (dB),
/// r5 |S(j omega_s)| - B (dB). The loop phase is unwrapped along a log
/// grid starting at omega_s.
SpecResiduals spec_residuals(const FopidParams& c, const Fotf& p, const FreqSpec& spec);

/// Unwrapped Arg G(j omega) tracked from omega_anchor.
double unwrapped_phase(const Fotf& g, double omega_anchor, double omega);

struct FreqTuneOptions {
    DoglegOptions dogleg{1e-9, 400, 1.0, 1e6, 1e-6};
    int restarts = 16;
    std::uint64_t seed = 7;
    /// Search for a caps-as-bounds design when no admissible root exists.
    bool relax_caps_on_failure = true;
};

TuningResult tune_frequency_domain(const Fotf& p, const FreqSpec& spec,
                                   const std::optional<FopidParams>& x0 = std::nullopt,
                                   const FreqTuneOptions& opt = {});

/// Gains that satisfy the phase, gain and flatness conditions exactly for
/// fixed orders. Empty when the 3x3 system is singular.
std::optional<FopidParams> gains_for_orders(const Fotf& p, const FreqSpec& spec, double lambda, double mu);

}  // namespace fopid

#endif  // FOPID_FREQ_TUNER_HPP
