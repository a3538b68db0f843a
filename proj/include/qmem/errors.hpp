#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qmem
{

enum class Errc
{
    invalid_argument,
    no_defect_mode_in_gap,
    fit_did_not_converge,
    degenerate_jacobian,
    resonance_not_in_window,
    degenerate_modes,
    drive_on_resonance,
    drive_off_difference_frequency,
    step_too_large,
    out_of_defect,
    no_peak_found,
    non_decaying_trace,
    format_error,
};

std::string_view to_string(Errc code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error
{
public:
    Error(Errc code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline void require(bool condition, const std::string &what)
{
    if (!condition)
        throw Error(Errc::invalid_argument, what);
}

} // namespace qmem
