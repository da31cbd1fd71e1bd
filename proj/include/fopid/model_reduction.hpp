#ifndef FOPID_MODEL_REDUCTION_HPP
#define FOPID_MODEL_REDUCTION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fopid/fractional.hpp"

namespace fopid {

/// K/(T s + 1) e^{-Ls}
struct Foptd {
    double K = 1.0, T = 1.0, L = 0.0;
};
/// K/(s^2 + b1 s + b0) e^{-Ls}
struct Soptd {
    double K = 1.0, b1 = 2.0, b0 = 1.0, L = 0.0;
};
/// K/(T s^alpha + 1) e^{-Ls}
struct Nioptd1 {
    double K = 1.0, T = 1.0, alpha = 1.0, L = 0.0;
};
/// K/(s^alpha + b1 s^beta + b0) e^{-Ls}
struct Nioptd2 {
    double K = 1.0, alpha = 2.0, beta = 1.0, b1 = 2.0, b0 = 1.0, L = 0.0;
};

using ReducedModel = std::variant<Foptd, Soptd, Nioptd1, Nioptd2>;

enum class TemplateKind { Foptd, Soptd, Nioptd1, Nioptd2 };

inline constexpr TemplateKind kAllTemplates[] = {TemplateKind::Foptd, TemplateKind::Soptd, TemplateKind::Nioptd1,
                                                 TemplateKind::Nioptd2};

TemplateKind kind_of(const ReducedModel& m);
std::string to_string(TemplateKind k);
/// Accepts foptd, soptd, nioptd1, nioptd2 (case-insensitive).
TemplateKind parse_template_kind(const std::string& name);

/// Throws std::invalid_argument when a template invariant is violated.
void validate(const ReducedModel& m);

Fotf to_fotf(const ReducedModel& m);

/// Damping ratio and natural frequency implied by (b1, b0).
double damping_ratio(double b1, double b0);
double natural_frequency(double b0);

/// Free parameters in a fixed order, and the inverse.
std::vector<double> parameters(const ReducedModel& m);
ReducedModel from_parameters(TemplateKind kind, const std::vector<double>& p);
std::vector<std::string> parameter_names(TemplateKind kind);

struct H2Options {
    double omega_low = 1e-4;
    double omega_high = 1e4;
    std::size_t points = 2000;
};

/// sqrt((1/pi) * integral |a - b|^2 d omega), log-grid trapezoid.
double h2_mismatch(const Fotf& a, const Fotf& b, const H2Options& opt = {});
double h2_mismatch(const Fotf& p, const ReducedModel& m, const H2Options& opt = {});

/// H2 norm of a single system over the same support.
double h2_norm(const Fotf& g, const H2Options& opt = {});

struct FitOptions {
    H2Options h2;
    int starts = 8;
    std::uint64_t seed = 20240611;
    int max_evals_per_start = 6000;
    double tol = 1e-8;
};

struct FitResult {
    TemplateKind kind = TemplateKind::Foptd;
    ReducedModel model;
    double j_f = 0.0;
    /// Rough size of the mismatch mass outside the integration band.
    double truncation_estimate = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

FitResult fit_template(const Fotf& p, TemplateKind kind, const std::optional<ReducedModel>& x0 = std::nullopt,
                       const FitOptions& opt = {});

struct RankEntry {
    TemplateKind kind;
    std::optional<FitResult> fit;
    std::string error;
};

/// All four fits, ascending by j_f; failed fits are listed last.
std::vector<RankEntry> rank_templates(const Fotf& p, const FitOptions& opt = {});

}  // namespace fopid

#endif  // FOPID_MODEL_REDUCTION_HPP
