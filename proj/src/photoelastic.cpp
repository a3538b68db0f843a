#include "qmem/photoelastic.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "qmem/csv.hpp"
#include "qmem/log.hpp"

namespace qmem::pe
{

using std::numbers::pi;

PhotoelasticTensor PhotoelasticTensor::trigonal(double p11, double p12, double p13, double p14, double p31, double p33,
                                                double p41, double p44)
{
    Eigen::Matrix<double, 6, 6> p;
    // clang-format off
    p << p11,  p12, p13,  p14, 0.0, 0.0,
         p12,  p11, p13, -p14, 0.0, 0.0,
         p31,  p31, p33,  0.0, 0.0, 0.0,
         p41, -p41, 0.0,  p44, 0.0, 0.0,
         0.0,  0.0, 0.0,  0.0, p44, p41,
         0.0,  0.0, 0.0,  0.0, p14, 0.5 * (p11 - p12);
    // clang-format on
    return PhotoelasticTensor(p);
}

PhotoelasticTensor PhotoelasticTensor::quartz_default()
{
    return trigonal(0.16, 0.27, 0.27, -0.03, 0.29, -0.047, 0.10, -0.079);
}

bool PhotoelasticTensor::has_trigonal_symmetry() const
{
    const auto &p = p_;
    return p == trigonal(p(0, 0), p(0, 1), p(0, 2), p(0, 3), p(2, 0), p(2, 2), p(3, 0), p(3, 3)).matrix();
}

void StrainState::validate() const
{
    require(S.cwiseAbs().maxCoeff() < 1e-2, "strain components must stay below 1e-2");
}

void OpticalConfig::validate() const
{
    require(wavelength > 0.0 && plate_thickness > 0.0, "wavelength and plate thickness must be > 0");
    require(n_o > 1.0 && n_e > 1.0, "refractive indices must be > 1");
    require(!c1 || *c1 >= 0.0, "c1 must be >= 0");
    require(!c2 || *c2 >= 0.0, "c2 must be >= 0");
}

double OpticalConfig::front_amplitude() const { return c1 ? *c1 : (n_o - 1.0) / (n_o + 1.0); }

double OpticalConfig::back_amplitude() const
{
    if (c2)
        return *c2;
    const double r = (n_o - 1.0) / (n_o + 1.0);
    return (1.0 - r * r) * r;
}

void StandingWaveMode::validate() const
{
    require(defect_width > 0.0 && frequency > 0.0, "standing wave needs L > 0 and f_m > 0");
    require(amplitude >= 0.0, "standing wave amplitude must be >= 0");
}

double StandingWaveMode::peak_strain() const { return amplitude * pi / defect_width; }

Voigt index_perturbation(const PhotoelasticTensor &p, const StrainState &s)
{
    s.validate();
    return p.matrix() * s.S;
}

double effective_coefficient(const PhotoelasticTensor &p, double polarization_angle)
{
    const double c = std::cos(polarization_angle), s = std::sin(polarization_angle);
    return p.p12() * c * c + p.p11() * s * s;
}

PrincipalIndices principal_indices(const OpticalConfig &config, double S_yy, const PhotoelasticTensor &p)
{
    config.validate();
    require(std::abs(S_yy) < 1e-2, "strain must stay below 1e-2");
    const double no = config.n_o, ne = config.n_e;
    PrincipalIndices out;
    const double byy = 1.0 / (no * no) + p.p11() * S_yy;
    const double bzz = 1.0 / (ne * ne) + p.p31() * S_yy;
    out.theta = 0.5 * std::atan2(-2.0 * p.p41() * S_yy, byy - bzz);
    out.n_x = no - 0.5 * no * no * no * p.p12() * S_yy;
    out.n_y = no - 0.5 * no * no * no * p.p11() * S_yy;
    out.n_z = ne - 0.5 * ne * ne * ne * p.p31() * S_yy;
    return out;
}

namespace
{
void check_inside(const StandingWaveMode &mode, double y)
{
    mode.validate();
    if (std::abs(y) > 0.5 * mode.defect_width)
        throw Error(Errc::out_of_defect, "position lies outside the defect; use a mode-profile scan");
}
} // namespace

double displacement(const StandingWaveMode &mode, double y, double t)
{
    check_inside(mode, y);
    return mode.amplitude * std::sin(pi * y / mode.defect_width) * std::sin(constants::two_pi * mode.frequency * t);
}

double strain_field(const StandingWaveMode &mode, double y, double t)
{
    check_inside(mode, y);
    return mode.peak_strain() * std::cos(pi * y / mode.defect_width) * std::sin(constants::two_pi * mode.frequency * t);
}

PhaseModulation phase_modulation(const OpticalConfig &config, const StandingWaveMode &mode, double y,
                                 const PhotoelasticTensor &p)
{
    config.validate();
    check_inside(mode, y);
    const double k0 = constants::two_pi / config.wavelength;
    const double no3 = config.n_o * config.n_o * config.n_o;
    PhaseModulation out;
    out.delta0 = config.n_o * k0 * 2.0 * config.plate_thickness;
    out.M = k0 * config.plate_thickness * no3 * effective_coefficient(p, config.polarization_angle) * mode.peak_strain() *
            std::cos(pi * y / mode.defect_width);
    return out;
}

ModulationResult detected_power(const OpticalConfig &config, const StandingWaveMode &mode, double y,
                                const PhotoelasticTensor &p)
{
    const PhaseModulation pm = phase_modulation(config, mode, y, p);
    const double c1 = config.front_amplitude(), c2 = config.back_amplitude();
    ModulationResult r;
    r.delta0 = pm.delta0;
    r.M = std::abs(pm.M);
    r.modulation_phase = pm.M < 0.0 ? pi : 0.0;
    if (r.M > 0.5)
        logger().warn("modulation depth M = {:g} is outside the small-modulation regime", r.M);
    r.dc_power = 0.5 * (c1 * c1 + c2 * c2 + 2.0 * c1 * c2 * std::cos(r.delta0) * std::cyl_bessel_j(0.0, r.M));
    r.beat_amplitude = 4.0 * c1 * c2 * std::sin(r.delta0) * std::cyl_bessel_j(1.0, r.M);
    return r;
}

double polarization_contrast(const PhotoelasticTensor &p)
{
    require(p.p11() != 0.0 && p.p12() != 0.0, "p11 and p12 must be nonzero");
    const double ratio = p.p12() / p.p11();
    return 10.0 * std::log10(ratio * ratio);
}

std::vector<ScanPoint> mode_profile_scan(const std::vector<ScanPoint> &envelope, const OpticalConfig &config,
                                         const StandingWaveMode &mode_template, const PhotoelasticTensor &p)
{
    mode_template.validate();
    std::vector<ScanPoint> out;
    out.reserve(envelope.size());
    double reference = 0.0, peak = 0.0;
    for (const auto &pt : envelope) {
        StandingWaveMode local = mode_template;
        local.amplitude = mode_template.amplitude * std::abs(pt.value);
        const double beat = std::abs(detected_power(config, local, 0.0, p).beat_amplitude);
        out.push_back({pt.position, beat});
        if (std::abs(pt.value) > peak) {
            peak = std::abs(pt.value);
            reference = beat;
        }
    }
    for (auto &pt : out)
        pt.value = reference > 0.0 ? pt.value / reference : 0.0;
    return out;
}

void write_scan_csv(std::ostream &out, const std::vector<ScanPoint> &scan)
{
    csv::write_header(out, {"y_um", "signal_norm"});
    for (const auto &pt : scan)
        out << csv::format_number(pt.position * 1e6) << ',' << csv::format_number(pt.value) << '\n';
}

} // namespace qmem::pe
