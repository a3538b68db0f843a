#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include "qmem/errors.hpp"

namespace qmem
{

// CODATA 2018 exact / recommended values.
namespace constants
{
inline constexpr double hbar = 1.054571817e-34;   // J s
inline constexpr double h = 6.62607015e-34;       // J s
inline constexpr double k_B = 1.380649e-23;       // J / K
inline constexpr double c = 299792458.0;          // m / s
inline constexpr double e = 1.602176634e-19;      // C
inline constexpr double two_pi = 2.0 * std::numbers::pi;
} // namespace constants

// Ordinary frequency in Hz. Every public interface takes Hz; the angular
// value only exists behind angular().
class Frequency
{
public:
    explicit Frequency(double hz) : hz_(hz) { require(hz > 0.0, "frequency must be > 0"); }

    static Frequency from_angular(double rad_per_s) { return Frequency(rad_per_s / constants::two_pi); }

    double hz() const noexcept { return hz_; }
    double angular() const noexcept { return constants::two_pi * hz_; }

    friend bool operator==(const Frequency &, const Frequency &) = default;

private:
    double hz_;
};

class Temperature
{
public:
    explicit Temperature(double kelvin) : kelvin_(kelvin) { require(kelvin >= 0.0, "temperature must be >= 0"); }

    double kelvin() const noexcept { return kelvin_; }

private:
    double kelvin_;
};

struct FrequencyTrace
{
    std::vector<double> frequencies;                // Hz, strictly increasing
    std::vector<std::complex<double>> response;

    // Throws invalid_argument unless lengths match and frequencies increase.
    void validate() const;
    std::size_t size() const noexcept { return frequencies.size(); }
};

struct TimeTrace
{
    std::vector<double> times;      // s, strictly increasing
    std::vector<double> amplitude;

    void validate() const;
    std::size_t size() const noexcept { return times.size(); }
};

// Bose-Einstein occupation 1/(exp(hbar w / k_B T) - 1); zero at T = 0.
double thermal_occupation(Frequency f, Temperature T);

// tau_th = 1 / ((n_th + 1) * Gamma_m), Gamma_m = w / Q. Reduces to Q/w when
// hbar w >> k_B T and to hbar Q / (k_B T) when hbar w << k_B T.
double thermal_decoherence_time(double Q, Frequency f, Temperature T);

} // namespace qmem
