#ifndef FOPID_TIME_TUNER_HPP
#define FOPID_TIME_TUNER_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fopid/freq_tuner.hpp"
#include "fopid/fractional.hpp"

namespace fopid {

struct SimConfig {
    double dt = 0.01;
    double t_end = 50.0;
    int pade_order = 3;
    OustaloupConfig oustaloup;

    void validate() const;
    std::size_t samples() const;
};

struct SimResult {
    std::vector<double> t, y, u, e;
    /// |y| exceeded 1e6 or went non-finite; trajectories stop there.
    bool overflow = false;
    /// The ideal derivative kick at t = 0 is not representable by samples.
    bool u_impulse_dropped = false;
};

enum class IndexKind { IAE, ITAE, ISE, ITSE, ISTES, ISTSE, SUM_ALL };

inline constexpr IndexKind kAllIndices[] = {IndexKind::IAE,   IndexKind::ISE,   IndexKind::ITAE,   IndexKind::ITSE,
                                            IndexKind::ISTES, IndexKind::ISTSE, IndexKind::SUM_ALL};

std::string to_string(IndexKind k);
/// iae, itae, ise, itse, istes, istse, sum (case-insensitive).
IndexKind parse_index_kind(const std::string& name);

/// Weights of IAE, ITAE, ISE, ITSE, ISTES, ISTSE in the combined index.
struct IndexWeights {
    std::array<double, 6> w{1, 1, 1, 1, 1, 1};
    void validate() const;
};

/// Realized closed loop. S maps reference to error, T reference to output,
/// W = (C/s) S whose impulse response is the control signal for a unit step,
/// PS maps an input disturbance to the output.
struct ClosedLoop {
    StateSpaced S, T, W, PS;
    bool u_impulse_dropped = false;
};

/// Loop transfer C(s)P(s) realized with the plant first; the controller
/// reads plant-output derivative taps so no ideal differentiator is formed.
StateSpaced loop_realize(const StateSpaced& plant, const FopidParams& c, const OustaloupConfig& ocfg);

/// S = 1/(1 + G) from a realization of G.
StateSpaced sensitivity_from_loop(const StateSpaced& G);

ClosedLoop closed_loop_realize(const Fotf& p, const FopidParams& c, const SimConfig& cfg);

struct Disturbance {
    double time = 25.0;
    double magnitude = 1.0;
};

SimResult simulate_step(const ClosedLoop& loop, const SimConfig& cfg,
                        const std::optional<Disturbance>& disturbance = std::nullopt, double reference = 1.0);

/// Trapezoid integral of the chosen error functional; +inf on overflow or
/// non-finite samples.
double performance_index(const SimResult& r, IndexKind kind, const IndexWeights& weights = {});

/// Same functional evaluated from an error sequence sampled at k*dt.
double performance_index(std::span<const double> e, double dt, IndexKind kind, const IndexWeights& weights = {});

BoxBounds default_time_bounds();

struct TimeTuneOptions {
    int starts = 8;
    std::uint64_t seed = 1;
    std::size_t max_evals_per_start = 4000;
    IndexWeights weights;
    double penalty = 1e6;
};

struct TimeTuneResult {
    FopidParams params;
    double j_min = 0.0;
    IndexKind index = IndexKind::IAE;
    double mp_pct = 0.0;
    double t_r = 0.0;
    bool stable = false;
    /// False when no start found a stable loop; params are then meaningless.
    bool found = false;
    std::size_t evaluations = 0;
    std::string message;
};

/// Objective used by the tuner: the index of a stable loop, or
/// penalty + violation for unstable or non-finite candidates.
double time_objective(const StateSpaced& plant, const FopidParams& c, IndexKind kind, const SimConfig& cfg,
                      const IndexWeights& weights = {}, double penalty = 1e6);

TimeTuneResult tune_time_domain(const Fotf& p, IndexKind kind, const BoxBounds& bounds = default_time_bounds(),
                                const SimConfig& cfg = {}, const TimeTuneOptions& opt = {});

std::vector<TimeTuneResult> tune_all_indices(const Fotf& p, const SimConfig& cfg = {},
                                             const BoxBounds& bounds = default_time_bounds(),
                                             const TimeTuneOptions& opt = {});

/// Stability of the loop realized again with a different Oustaloup order.
bool independently_stable(const Fotf& p, const FopidParams& c, const SimConfig& cfg, int oustaloup_order = 7);

}  // namespace fopid

#endif  // FOPID_TIME_TUNER_HPP
