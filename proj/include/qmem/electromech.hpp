#pragma once

#include <complex>
#include <iosfwd>
#include <optional>

#include "qmem/core.hpp"

namespace qmem::em
{

// Butterworth-Van-Dyke model: static capacitance C0 in parallel with a
// motional Lm-Cm(-Rm) series branch.
struct BvdParams
{
    double C0 = 0.0;   // F
    double Cm = 0.0;   // F
    double Lm = 0.0;   // H
    double Rm = 0.0;   // Ohm, 0 = lossless

    void validate() const;
    double series_resonance() const;        // Hz, 1/(2 pi sqrt(Lm Cm))
    double parallel_resonance() const;      // Hz, f_s sqrt(1 + Cm/C0)
};

// Resonant circuit the mode couples to. Either Lr is given (f_r derived) or
// f_r is given directly (e.g. a qubit transition frequency).
class ShuntCircuit
{
public:
    static ShuntCircuit from_inductance(double Cr, double Lr);
    static ShuntCircuit from_frequency(double Cr, double f_r);
    // Both given: f_r must agree with 1/(2 pi sqrt(Lr Cr)) within 1e-9 relative.
    static ShuntCircuit from_both(double Cr, double Lr, double f_r);

    double Cr() const { return Cr_; }
    std::optional<double> Lr() const { return Lr_; }
    double f_r() const { return f_r_; }

private:
    ShuntCircuit(double Cr, std::optional<double> Lr, double f_r) : Cr_(Cr), Lr_(Lr), f_r_(f_r) {}
    double Cr_;
    std::optional<double> Lr_;
    double f_r_;
};

// Coupling rate expressed as an ordinary frequency (g/2pi of the angular rate).
struct CouplingRate
{
    double g_hz = 0.0;
    bool approximation_valid = true;   // false when Cr <= 10 (C0 + Cm)
};

struct FitBvdOptions
{
    bool fit_resistance = false;
};

struct BvdFit
{
    BvdParams params;
    double residual_norm = 0.0;   // relative residuals
};

// Y = i w C0 + 1 / (Rm + i w Lm + 1 / (i w Cm)). At an exact lossless series
// resonance the imaginary part is +inf.
std::complex<double> bvd_admittance(const BvdParams &p, Frequency f);

// Nonlinear least squares on Im Y (and Re Y when fitting Rm), initialised by
// a linear solve that is exact for lossless data. Needs >= 50 points with
// the series resonance (Im Y pole, + to -) inside the window.
BvdFit fit_bvd(const FrequencyTrace &trace, const FitBvdOptions &options = {});

// g = 1/2 sqrt(w_r w_m) sqrt(Cm / (Cr + Cm + C0)). f_m defaults to the BVD
// series resonance.
CouplingRate coupling_rate_gsm(const BvdParams &p, const ShuntCircuit &shunt, std::optional<Frequency> f_m = {});

// g_ij = 1/2 sqrt(w_i w_j) Cij / sqrt((Ci + Cij)(Cj + Cij)).
CouplingRate coupling_rate_gij(double Ci, double Cj, double Cij, Frequency fi, Frequency fj);

struct DefectArraySpec
{
    int n = 1;   // defect unit cells driven in phase
};

// Cm -> N Cm, Lm -> Lm / N, C0 -> N C0 (electrodes grow with the array).
BvdParams scale_defects(const BvdParams &p, DefectArraySpec spec);

// CSV `f_Hz,ReY_S,ImY_S`.
FrequencyTrace read_admittance_csv(std::istream &in);
void write_admittance_csv(std::ostream &out, const FrequencyTrace &trace);

} // namespace qmem::em
