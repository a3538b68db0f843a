#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace qmem::duffing
{

// x'' + (w0/Q) x' + w0^2 x + beta x^3 = F cos(w t), w0 = 2 pi f0.
// beta is in (rad/s)^2 per amplitude unit squared and F in amplitude units
// times (rad/s)^2. beta > 0 stiffens (peaks bend to higher frequency).
struct DuffingParams
{
    double f0 = 0.0;
    double Q = 0.0;
    double beta = 0.0;
    double drive = 0.0;

    void validate() const;
};

struct Root
{
    double amplitude = 0.0;
    bool stable = true;
};

enum class Direction
{
    forward,    // increasing frequency
    backward,   // decreasing frequency
};

enum class Branch
{
    single,   // only one steady state exists at this frequency
    lower,
    upper,
};

struct SweepResult
{
    std::vector<double> frequencies;   // Hz, in sweep order
    std::vector<double> amplitudes;
    std::vector<Branch> branches;
    std::optional<std::pair<double, double>> bistable_range;   // Hz
};

struct BackbonePoint
{
    double amplitude = 0.0;
    double frequency = 0.0;   // Hz
};

struct BackboneFit
{
    double f0 = 0.0;   // Hz
    double A = 0.0;    // Hz per amplitude^n
    double n = 0.0;
    double residual_norm = 0.0;   // Hz
    double sigma_f0 = 0.0, sigma_A = 0.0, sigma_n = 0.0;
};

// Harmonic-balance steady states a^2 [(w0^2 - w^2 + 3/4 beta a^2)^2 + (w0 w / Q)^2] = F^2,
// ascending in amplitude. One or three roots; the middle of three is unstable.
std::vector<Root> steady_state_amplitudes(const DuffingParams &p, double f_drive);

// Drive above which a bistable interval exists, F_c^2 = 8 c^3 / (3 sqrt(3) |k|)
// with k = 3/4 beta and c = w0 w_c / Q at the cusp. +inf for beta = 0.
double critical_drive(const DuffingParams &p);

// Frequency interval with three steady states, from the real roots of the
// cubic's discriminant (a polynomial in the detuning).
std::optional<std::pair<double, double>> bistable_range(const DuffingParams &p);

// Branch-following sweep over n_points evenly spaced frequencies in [f_lo, f_hi].
SweepResult sweep(const DuffingParams &p, double f_lo, double f_hi, int n_points, Direction direction);

// Integral of (forward - backward) amplitude over frequency.
double hysteresis_area(const DuffingParams &p, double f_lo, double f_hi, int n_points);

// Resonance peak (maximum of the upper branch) for each drive level.
std::vector<BackbonePoint> backbone(const DuffingParams &p, const std::vector<double> &drive_levels);

// f = f0 + A a^n by Levenberg-Marquardt from f0 = min f, n = 2 and A from the
// two extreme points. Needs >= 4 points with distinct positive amplitudes.
BackboneFit fit_backbone(const std::vector<BackbonePoint> &points);

// CSV `f_Hz,amp,branch` with branch in {single, lower, upper}.
void write_sweep_csv(std::ostream &out, const SweepResult &result);

const char *to_string(Branch b);

} // namespace qmem::duffing
