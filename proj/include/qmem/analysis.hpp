#pragma once

#include <complex>
#include <iosfwd>

#include "qmem/core.hpp"

namespace qmem::analysis
{

enum class LorentzianMode
{
    magnitude,   // fit |b + A / (1 + 2i (f - f0) / kappa)| to |data|
    complex,     // fit b + A e^{i theta} / (1 + 2i (f - f0) / kappa) to data
};

struct ResonanceFit
{
    double f0 = 0.0;          // Hz
    double Q = 0.0;
    double linewidth = 0.0;   // Hz, f0 / Q
    double amplitude = 0.0;
    double phase = 0.0;       // rad, complex mode only
    std::complex<double> background;
    double sigma_f0 = 0.0, sigma_Q = 0.0, sigma_amplitude = 0.0;
    std::complex<double> sigma_background;
    double residual_norm = 0.0;   // RMS residual relative to the peak magnitude
};

// Energy-decay convention: tau = Q / w.
struct RingdownFit
{
    double tau = 0.0;   // s
    double initial_amplitude = 0.0;
    double offset = 0.0;
    double sigma_tau = 0.0, sigma_amplitude = 0.0, sigma_offset = 0.0;
    double residual_norm = 0.0;   // RMS residual relative to the peak magnitude
};

// Needs >= 20 points and a peak standing clear of the noise floor
// (Error(no_peak_found) otherwise). Initialised from the peak sample and
// the half-power width.
ResonanceFit fit_lorentzian(const FrequencyTrace &trace, LorentzianMode mode = LorentzianMode::magnitude);

// offset + A exp(-t / tau). Needs >= 20 points. Error(non_decaying_trace)
// for constant traces or when tau exceeds 100x the time span.
RingdownFit fit_ringdown(const TimeTrace &trace);

// Exact tau and A of A exp(-t / tau) through two samples (no offset).
RingdownFit ringdown_from_two_points(double t1, double y1, double t2, double y2);

// |Q - w tau| / Q.
double q_tau_consistency(double Q, Frequency f, double tau);

// Q = w tau.
double quality_from_lifetime(Frequency f, double tau);

struct FrequencyTraceFile
{
    FrequencyTrace trace;
    bool has_phase = false;   // `f_Hz,re,im` rather than `f_Hz,mag`
};

FrequencyTraceFile read_frequency_trace_csv(std::istream &in);
TimeTrace read_time_trace_csv(std::istream &in);

} // namespace qmem::analysis
