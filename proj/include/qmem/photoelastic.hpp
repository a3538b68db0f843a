#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qmem/core.hpp"

namespace qmem::pe
{

using Voigt = Eigen::Matrix<double, 6, 1>;

// Photoelastic tensor in Voigt notation, Delta(1/n^2)_i = p_ij S_j.
class PhotoelasticTensor
{
public:
    // Trigonal (class 32) pattern.
    static PhotoelasticTensor trigonal(double p11, double p12, double p13, double p14, double p31, double p33, double p41,
                                       double p44);
    // alpha-quartz, p11 = 0.16, p12 = 0.27, ...
    static PhotoelasticTensor quartz_default();
    // Arbitrary matrix; no symmetry imposed.
    explicit PhotoelasticTensor(const Eigen::Matrix<double, 6, 6> &p) : p_(p) {}

    const Eigen::Matrix<double, 6, 6> &matrix() const { return p_; }
    double p11() const { return p_(0, 0); }
    double p12() const { return p_(0, 1); }
    double p31() const { return p_(2, 0); }
    double p41() const { return p_(3, 0); }

    bool has_trigonal_symmetry() const;

private:
    Eigen::Matrix<double, 6, 6> p_;
};

struct StrainState
{
    Voigt S = Voigt::Zero();

    void validate() const;   // |S_i| < 1e-2
};

struct OpticalConfig
{
    double wavelength = 1064e-9;        // m
    double n_o = 1.528;
    double n_e = 1.536;
    double plate_thickness = 3.5e-6;    // m
    double polarization_angle = 0.0;    // rad from crystal X toward Y
    std::optional<double> c1;           // front-surface reflection amplitude
    std::optional<double> c2;           // back-surface reflection amplitude

    void validate() const;
    // Normal-incidence Fresnel defaults: c1 = (n_o - 1)/(n_o + 1), c2 = (1 - c1^2) c1.
    double front_amplitude() const;
    double back_amplitude() const;
};

// Width-extension standing wave, y measured from the defect center:
// u = u0 sin(pi y / L) sin(w t), S_yy = S0 cos(pi y / L) sin(w t), S0 = u0 pi / L.
struct StandingWaveMode
{
    double defect_width = 0.0;   // L, m
    double amplitude = 0.0;      // u0, m
    double frequency = 0.0;      // Hz

    void validate() const;
    double peak_strain() const;
};

struct PrincipalIndices
{
    double n_x = 0.0, n_y = 0.0, n_z = 0.0;
    double theta = 0.0;   // rad, rotation in the Y-Z plane
};

struct ModulationResult
{
    double delta0 = 0.0;           // rad
    double M = 0.0;                // rad, >= 0
    double modulation_phase = 0.0; // 0 or pi; carries the sign of the strain
    double dc_power = 0.0;
    // Coefficient of sin(w_m t) inside the bracket, 4 c1 c2 sin(delta0) J1(M).
    double beat_amplitude = 0.0;

    // Actual first-harmonic amplitude of the detected intensity (half of the above).
    double single_sided() const { return 0.5 * beat_amplitude; }
};

struct ScanPoint
{
    double position = 0.0;   // m
    double value = 0.0;
};

Voigt index_perturbation(const PhotoelasticTensor &p, const StrainState &s);

// p12 cos^2(phi) + p11 sin^2(phi) for polarization angle phi in the X-Y plane.
double effective_coefficient(const PhotoelasticTensor &p, double polarization_angle);

// Small-strain principal indices under a pure S_yy strain.
PrincipalIndices principal_indices(const OpticalConfig &config, double S_yy,
                                   const PhotoelasticTensor &p = PhotoelasticTensor::quartz_default());

double displacement(const StandingWaveMode &mode, double y, double t);

// Throws Error(out_of_defect) for |y| > L/2.
double strain_field(const StandingWaveMode &mode, double y, double t);

struct PhaseModulation
{
    double delta0 = 0.0;
    double M = 0.0;   // signed
};

PhaseModulation phase_modulation(const OpticalConfig &config, const StandingWaveMode &mode, double y,
                                 const PhotoelasticTensor &p = PhotoelasticTensor::quartz_default());

ModulationResult detected_power(const OpticalConfig &config, const StandingWaveMode &mode, double y,
                                const PhotoelasticTensor &p = PhotoelasticTensor::quartz_default());

// 10 log10((p12 / p11)^2).
double polarization_contrast(const PhotoelasticTensor &p);

// Beat amplitude at the antinode with S0 scaled by each envelope sample,
// normalised to the sample with the largest envelope (the defect).
std::vector<ScanPoint> mode_profile_scan(const std::vector<ScanPoint> &envelope, const OpticalConfig &config,
                                         const StandingWaveMode &mode_template,
                                         const PhotoelasticTensor &p = PhotoelasticTensor::quartz_default());

// CSV `y_um,signal_norm`.
void write_scan_csv(std::ostream &out, const std::vector<ScanPoint> &scan);

} // namespace qmem::pe
