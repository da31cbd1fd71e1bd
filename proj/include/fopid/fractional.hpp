#ifndef FOPID_FRACTIONAL_HPP
#define FOPID_FRACTIONAL_HPP

#include <complex>
#include <span>
#include <vector>

#include "fopid/state_space.hpp"

namespace fopid {

/// coeff * s^exponent
struct FracTerm {
    double coeff = 0.0;
    double exponent = 0.0;
};

/// Sum of real-power Laplace terms, kept in strictly descending exponent
/// order with duplicate exponents merged.
class FracPoly {
public:
    FracPoly() : FracPoly(std::vector<FracTerm>{{1.0, 0.0}}) {}
    explicit FracPoly(std::vector<FracTerm> terms);
    FracPoly(std::initializer_list<FracTerm> terms) : FracPoly(std::vector<FracTerm>(terms)) {}

    /// Integer-order polynomial from descending-power coefficients.
    static FracPoly from_coefficients(std::span<const double> descending);

    const std::vector<FracTerm>& terms() const { return terms_; }
    const FracTerm& leading() const { return terms_.front(); }
    bool is_integer_order() const;

    /// Value at s = j*omega using the principal branch of (j omega)^a.
    std::complex<double> at(double omega) const;

    friend FracPoly operator*(const FracPoly& a, const FracPoly& b);
    friend FracPoly operator+(const FracPoly& a, const FracPoly& b);
    friend FracPoly operator*(double k, const FracPoly& p);

private:
    std::vector<FracTerm> terms_;
};

/// num(s)/den(s) * exp(-delay*s)
struct FracTransferFunction {
    FracPoly num;
    FracPoly den;
    double delay = 0.0;

    FracTransferFunction() = default;
    FracTransferFunction(FracPoly n, FracPoly d, double L = 0.0);
};

using Fotf = FracTransferFunction;

/// Integer-order transfer function in descending powers, den monic.
struct RationalTf {
    std::vector<double> num;
    std::vector<double> den;

    RationalTf() : num{1.0}, den{1.0} {}
    RationalTf(std::vector<double> n, std::vector<double> d);

    std::size_t num_degree() const { return num.size() - 1; }
    std::size_t den_degree() const { return den.size() - 1; }
    std::complex<double> at(double omega) const;
    double dc_gain() const;
};

struct OustaloupConfig {
    double omega_low = 1e-4;
    double omega_high = 1e4;
    /// N in the recursive formula; the filter has 2N+1 zero-pole pairs.
    int order = 5;

    void validate() const;
};

/// Zeros, poles and gain of the band-limited approximation of s^gamma,
/// |gamma| < 1: gain * prod (s + zeros_k)/(s + poles_k).
struct OustaloupFilter {
    std::vector<double> zeros;
    std::vector<double> poles;
    double gain = 1.0;
};

OustaloupFilter oustaloup_filter(double gamma, const OustaloupConfig& cfg);

/// Split a real power into integer part (toward zero) and remainder in (-1, 1).
struct PowerSplit {
    int integer = 0;
    double fraction = 0.0;
};
PowerSplit split_power(double alpha);

std::complex<double> freq_response(const Fotf& g, double omega);

/// d(Arg g(j omega))/d omega by central difference with relative step h.
double phase_slope(const Fotf& g, double omega, double h = 1e-4);

/// Rational approximation of s^alpha for alpha in (-2, 2).
RationalTf oustaloup(double alpha, const OustaloupConfig& cfg = {});

/// Diagonal [order/order] Pade approximation of exp(-L s).
RationalTf pade_delay(double L, int order = 3);

/// Replace every fractional power by its Oustaloup realization and the
/// delay by its Pade approximation.
RationalTf rationalize(const Fotf& g, const OustaloupConfig& ocfg = {}, int pade_order = 3,
                       std::size_t degree_cap = 80);

Fotf series(const Fotf& a, const Fotf& b);
RationalTf series(const RationalTf& a, const RationalTf& b);
RationalTf feedback_unity(const RationalTf& g);

bool is_stable(const RationalTf& g, double margin = 1e-9);

/// State-space realization of a proper FOTF with non-negative exponents.
/// Fractional powers are realized as cascades of first-order Oustaloup
/// sections, so no high-degree polynomial is ever formed.
StateSpaced realize(const Fotf& g, const OustaloupConfig& ocfg = {}, int pade_order = 3);

/// Cascade realization of s^gamma for |gamma| < 1.
StateSpaced oustaloup_state_space(double gamma, const OustaloupConfig& cfg);

/// Helpers on descending coefficient vectors.
std::vector<double> poly_mul(std::span<const double> a, std::span<const double> b);
std::vector<double> poly_add(std::span<const double> a, std::span<const double> b);

}  // namespace fopid

#endif  // FOPID_FRACTIONAL_HPP
