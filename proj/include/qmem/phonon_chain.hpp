#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qmem/core.hpp"

// One-dimensional longitudinal-wave surrogate of the phononic-crystal Bragg
// mirror. Each segment is a uniform waveguide section; impedance contrast
// between the narrow and wide sections stands in for the width modulation of
// the real device.
namespace qmem::chain
{

struct Segment
{
    double length = 0.0;             // m
    double sound_speed = 0.0;        // m/s
    double impedance = 0.0;          // kg/(m^2 s), area-normalised

    void validate() const;
};

// Laid out symmetrically as (narrow/2, wide, narrow/2) so a chain of cells is
// mirror symmetric about its centre. The Bloch dispersion does not depend on
// the choice of cell origin.
struct UnitCell
{
    Segment narrow;
    Segment wide;

    double lattice_constant() const { return narrow.length + wide.length; }
    void validate() const;
};

struct ChainSpec
{
    int mirror_cells_per_side = 0;
    UnitCell mirror_cell;
    UnitCell defect_cell;
    double termination_impedance = 0.0;

    void validate() const;
};

struct BandGap
{
    double f_low = 0.0;    // Hz
    double f_high = 0.0;   // Hz

    double center() const { return 0.5 * (f_low + f_high); }
    double width() const { return f_high - f_low; }
    double fractional_width() const { return width() / center(); }
};

struct DefectMode
{
    double frequency = 0.0;             // Hz
    double localization_length = 0.0;  // m, 1/kappa of the mirror Bloch wave
    double radiative_q = 0.0;
};

struct ProfilePoint
{
    int cell_index = 0;       // 0 = defect, negative = left mirror, positive = right mirror
    double position = 0.0;    // m, cell centre relative to the chain centre
    double amplitude = 0.0;   // normalised to 1 at the defect
};

struct Scattering
{
    std::complex<double> t;
    std::complex<double> r;
};

// Transfer matrix acting on (particle velocity, force per area).
Eigen::Matrix2cd segment_matrix(const Segment &segment, double f_hz);
Eigen::Matrix2cd cell_matrix(const UnitCell &cell, double f_hz);

// cos(q a) of the infinite periodic chain; |result| <= 1 inside a passband.
double dispersion(const UnitCell &cell, Frequency f);

// Bloch attenuation per cell, kappa*a = acosh|cos(qa)|; zero inside a passband.
double bloch_decay_per_cell(const UnitCell &cell, Frequency f);

// Maximal intervals with |cos(qa)| > 1 inside [f_min, f_max]. A gap narrower
// than the scan resolution is only found if some sample lands inside it.
std::vector<BandGap> find_band_gaps(const UnitCell &cell, double f_min, double f_max, double resolution);

// Ordered segments of the full chain, left termination to right termination.
std::vector<Segment> layout(const ChainSpec &chain);

Scattering scatter(const ChainSpec &chain, Frequency f);

// Power transmission |t|^2 between matched terminations.
double transmission(const ChainSpec &chain, Frequency f);

// Throws Error(no_defect_mode_in_gap) if the gap interior holds no
// transmission peak at least 10x above the in-gap floor.
DefectMode find_defect_mode(const ChainSpec &chain, const BandGap &gap);

// Per-cell envelope sqrt(|v|^2 + |F/Z|^2) at cell centres of the resonant
// standing wave (parity of the excitation chosen to match the mode).
std::vector<ProfilePoint> mode_profile(const ChainSpec &chain, const DefectMode &mode);

// Reference cell: equal sound speed in both sections, third-order Bragg
// condition (each section 3/4 wavelength at 100 MHz) and an impedance ratio
// giving a ~20 % gap centred on 100 MHz.
UnitCell calibrated_cell();

// Defect cell whose wide section is 3/2 wavelength at 100 MHz (mode at gap
// centre); extra_wide_length lengthens it to pull the mode frequency down.
UnitCell calibrated_defect_cell(double extra_wide_length = 0.0);

ChainSpec calibrated_chain(int mirror_cells_per_side, double extra_defect_length = 0.0);

} // namespace qmem::chain
