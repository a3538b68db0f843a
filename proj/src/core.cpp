#include "qmem/core.hpp"

#include <cmath>

namespace qmem
{

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::no_defect_mode_in_gap: return "NoDefectModeInGap";
    case Errc::fit_did_not_converge: return "FitDidNotConverge";
    case Errc::degenerate_jacobian: return "DegenerateJacobian";
    case Errc::resonance_not_in_window: return "ResonanceNotInWindow";
    case Errc::degenerate_modes: return "DegenerateModes";
    case Errc::drive_on_resonance: return "DriveOnResonance";
    case Errc::drive_off_difference_frequency: return "DriveOffDifferenceFrequency";
    case Errc::step_too_large: return "StepTooLarge";
    case Errc::out_of_defect: return "OutOfDefect";
    case Errc::no_peak_found: return "NoPeakFound";
    case Errc::non_decaying_trace: return "NonDecayingTrace";
    case Errc::format_error: return "FormatError";
    }
    return "Unknown";
}

namespace
{
template <class T>
void check_axis(const std::vector<double> &axis, const std::vector<T> &values, const char *name)
{
    require(axis.size() == values.size(), std::string(name) + ": axis and values differ in length");
    for (std::size_t i = 1; i < axis.size(); ++i)
        require(axis[i] > axis[i - 1], std::string(name) + ": axis must be strictly increasing");
}
} // namespace

void FrequencyTrace::validate() const { check_axis(frequencies, response, "FrequencyTrace"); }

void TimeTrace::validate() const { check_axis(times, amplitude, "TimeTrace"); }

double thermal_occupation(Frequency f, Temperature T)
{
    if (T.kelvin() == 0.0)
        return 0.0;
    const double x = constants::hbar * f.angular() / (constants::k_B * T.kelvin());
    // expm1 keeps precision for x << 1; overflows cleanly to +inf for x >> 1.
    return 1.0 / std::expm1(x);
}

double thermal_decoherence_time(double Q, Frequency f, Temperature T)
{
    require(Q > 0.0, "Q must be > 0");
    const double gamma = f.angular() / Q;
    return 1.0 / ((thermal_occupation(f, T) + 1.0) * gamma);
}

} // namespace qmem
