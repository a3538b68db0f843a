#include "qmem/phonon_chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qmem::chain
{

namespace
{

constexpr double kCalibratedSpeed = 5700.0;          // m/s
constexpr double kCalibratedCenter = 100e6;          // Hz
constexpr double kNarrowImpedance = 1.51e7;          // kg/(m^2 s)
constexpr double kImpedanceRatio = 2.664;

double wavelength_at_center() { return kCalibratedSpeed / kCalibratedCenter; }

Segment half(const Segment &s)
{
    Segment h = s;
    h.length *= 0.5;
    return h;
}

double abs_dispersion_minus_one(const UnitCell &cell, double f)
{
    return std::abs(dispersion(cell, Frequency(f))) - 1.0;
}

// Bisection on |cos qa| - 1 between an in-band point and an in-gap point.
double refine_edge(const UnitCell &cell, double in_band, double in_gap)
{
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (in_band + in_gap);
        if (std::abs(in_gap - in_band) <= 1e-12 * mid)
            break;
        if (abs_dispersion_minus_one(cell, mid) > 0.0)
            in_gap = mid;
        else
            in_band = mid;
    }
    return 0.5 * (in_band + in_gap);
}

// Outgoing amplitudes for incoming amplitudes a (from the left) and d (from
// the right) on a structure with total transfer matrix m between two
// half-spaces of impedance z. Returns the left-end state (v, F).
Eigen::Vector2cd left_state(const Eigen::Matrix2cd &m, double z, std::complex<double> a, std::complex<double> d)
{
    // Unknowns: b (reflected to the left), c (transmitted to the right).
    Eigen::Matrix2cd lhs;
    Eigen::Vector2cd rhs;
    lhs << -(m(0, 0) - m(0, 1) * z), 1.0,
           -(m(1, 0) - m(1, 1) * z), z;
    rhs << m(0, 0) * a + m(0, 1) * z * a - d,
           m(1, 0) * a + m(1, 1) * z * a + z * d;
    const Eigen::Vector2cd bc = lhs.partialPivLu().solve(rhs);
    const std::complex<double> b = bc[0];
    return {a + b, z * (a - b)};
}

Eigen::Matrix2cd total_matrix(const std::vector<Segment> &segments, double f)
{
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    for (const auto &s : segments)
        m = segment_matrix(s, f) * m;
    return m;
}

double golden_section_max(const ChainSpec &chain, double lo, double hi)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto value = [&](double f) { return std::log(transmission(chain, Frequency(f))); };
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = value(x1), f2 = value(x2);
    while (hi - lo > 1e-14 * hi) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = value(x1);
        }
    }
    return 0.5 * (lo + hi);
}

// Frequency on one side of the peak where transmission falls to `level`.
double half_power_point(const ChainSpec &chain, double f_peak, double level, double direction, double limit)
{
    double step = 1e-12 * f_peak;
    double inside = f_peak;
    double outside = f_peak + direction * step;
    while (transmission(chain, Frequency(outside)) > level) {
        inside = outside;
        step *= 2.0;
        outside = f_peak + direction * step;
        if ((outside - limit) * direction > 0.0)
            throw Error(Errc::no_defect_mode_in_gap, "transmission peak does not fall to half maximum inside the gap");
    }
    for (int i = 0; i < 200 && std::abs(outside - inside) > 1e-15 * f_peak; ++i) {
        const double mid = 0.5 * (inside + outside);
        if (transmission(chain, Frequency(mid)) > level)
            inside = mid;
        else
            outside = mid;
    }
    return 0.5 * (inside + outside);
}

} // namespace

void Segment::validate() const
{
    require(length > 0.0 && sound_speed > 0.0 && impedance > 0.0, "segment fields must be > 0");
}

void UnitCell::validate() const
{
    narrow.validate();
    wide.validate();
}

void ChainSpec::validate() const
{
    require(mirror_cells_per_side >= 0, "mirror_cells_per_side must be >= 0");
    require(termination_impedance > 0.0, "termination impedance must be > 0");
    mirror_cell.validate();
    defect_cell.validate();
}

Eigen::Matrix2cd segment_matrix(const Segment &segment, double f_hz)
{
    const double phase = constants::two_pi * f_hz / segment.sound_speed * segment.length;
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    const std::complex<double> i(0.0, 1.0);
    Eigen::Matrix2cd m;
    m << c, i * s / segment.impedance,
         i * segment.impedance * s, c;
    return m;
}

Eigen::Matrix2cd cell_matrix(const UnitCell &cell, double f_hz)
{
    const Segment h = half(cell.narrow);
    return segment_matrix(h, f_hz) * segment_matrix(cell.wide, f_hz) * segment_matrix(h, f_hz);
}

double dispersion(const UnitCell &cell, Frequency f)
{
    const double k1l1 = f.angular() / cell.narrow.sound_speed * cell.narrow.length;
    const double k2l2 = f.angular() / cell.wide.sound_speed * cell.wide.length;
    const double ratio = cell.narrow.impedance / cell.wide.impedance;
    return std::cos(k1l1) * std::cos(k2l2) - 0.5 * (ratio + 1.0 / ratio) * std::sin(k1l1) * std::sin(k2l2);
}

double bloch_decay_per_cell(const UnitCell &cell, Frequency f)
{
    const double d = std::abs(dispersion(cell, f));
    return d > 1.0 ? std::acosh(d) : 0.0;
}

std::vector<BandGap> find_band_gaps(const UnitCell &cell, double f_min, double f_max, double resolution)
{
    require(f_min > 0.0 && f_min < f_max, "need 0 < f_min < f_max");
    require(resolution > 0.0, "resolution must be > 0");
    cell.validate();

    const auto n = static_cast<std::size_t>(std::ceil((f_max - f_min) / resolution));
    std::vector<BandGap> gaps;
    bool in_gap = false;
    double prev_f = f_min;
    double gap_start = f_min;
    for (std::size_t i = 0; i <= n; ++i) {
        const double f = std::min(f_min + static_cast<double>(i) * resolution, f_max);
        const bool g = abs_dispersion_minus_one(cell, f) > 0.0;
        if (g && !in_gap)
            gap_start = (i == 0) ? f_min : refine_edge(cell, prev_f, f);
        if (!g && in_gap)
            gaps.push_back({gap_start, refine_edge(cell, f, prev_f)});
        in_gap = g;
        prev_f = f;
    }
    if (in_gap)
        gaps.push_back({gap_start, f_max});
    return gaps;
}

std::vector<Segment> layout(const ChainSpec &chain)
{
    chain.validate();
    std::vector<Segment> out;
    auto push_cell = [&](const UnitCell &c) {
        out.push_back(half(c.narrow));
        out.push_back(c.wide);
        out.push_back(half(c.narrow));
    };
    for (int i = 0; i < chain.mirror_cells_per_side; ++i)
        push_cell(chain.mirror_cell);
    push_cell(chain.defect_cell);
    for (int i = 0; i < chain.mirror_cells_per_side; ++i)
        push_cell(chain.mirror_cell);
    return out;
}

Scattering scatter(const ChainSpec &chain, Frequency f)
{
    const Eigen::Matrix2cd m = total_matrix(layout(chain), f.hz());
    const double z = chain.termination_impedance;
    const Eigen::Vector2cd psi = left_state(m, z, 1.0, 0.0);
    const std::complex<double> r = psi[0] - 1.0;
    const Eigen::Vector2cd out = m * psi;
    return {out[0], r};
}

double transmission(const ChainSpec &chain, Frequency f)
{
    return std::norm(scatter(chain, f).t);
}

DefectMode find_defect_mode(const ChainSpec &chain, const BandGap &gap)
{
    chain.validate();
    require(gap.f_low > 0.0 && gap.f_low < gap.f_high, "invalid band gap");

    constexpr int kSamples = 4001;
    const double margin = 0.01 * gap.width();
    const double lo = gap.f_low + margin;
    const double hi = gap.f_high - margin;
    std::vector<double> freqs(kSamples), trans(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        freqs[i] = lo + (hi - lo) * i / (kSamples - 1);
        trans[i] = transmission(chain, Frequency(freqs[i]));
    }
    const auto max_it = std::max_element(trans.begin(), trans.end());
    const auto idx = static_cast<int>(max_it - trans.begin());
    const double floor = *std::min_element(trans.begin(), trans.end());
    if (idx == 0 || idx == kSamples - 1 || *max_it < 10.0 * floor)
        throw Error(Errc::no_defect_mode_in_gap, "no transmission peak inside the gap interior");

    DefectMode mode;
    mode.frequency = golden_section_max(chain, freqs[idx - 1], freqs[idx + 1]);
    const double peak = transmission(chain, Frequency(mode.frequency));
    const double f_lo = half_power_point(chain, mode.frequency, 0.5 * peak, -1.0, gap.f_low);
    const double f_hi = half_power_point(chain, mode.frequency, 0.5 * peak, +1.0, gap.f_high);
    mode.radiative_q = mode.frequency / (f_hi - f_lo);

    const double kappa_a = bloch_decay_per_cell(chain.mirror_cell, Frequency(mode.frequency));
    mode.localization_length = kappa_a > 0.0 ? chain.mirror_cell.lattice_constant() / kappa_a
                                             : std::numeric_limits<double>::infinity();
    return mode;
}

std::vector<ProfilePoint> mode_profile(const ChainSpec &chain, const DefectMode &mode)
{
    const std::vector<Segment> segments = layout(chain);
    const double f = mode.frequency;
    const double z = chain.termination_impedance;
    const Eigen::Matrix2cd m = total_matrix(segments, f);
    const int n_cells = 2 * chain.mirror_cells_per_side + 1;

    // Cell centres sit in the middle of each wide section (segment 3i+1).
    auto envelope = [&](std::complex<double> d) {
        std::vector<double> amp;
        Eigen::Vector2cd psi = left_state(m, z, 1.0, d);
        for (int c = 0; c < n_cells; ++c) {
            const auto &narrow = segments[3 * c];
            const auto &wide = segments[3 * c + 1];
            psi = segment_matrix(narrow, f) * psi;
            Segment half_wide = half(wide);
            const Eigen::Vector2cd mid = segment_matrix(half_wide, f) * psi;
            amp.push_back(std::sqrt(std::norm(mid[0]) + std::norm(mid[1] / wide.impedance)));
            psi = segment_matrix(segments[3 * c + 2], f) * segment_matrix(wide, f) * psi;
        }
        return amp;
    };
    std::vector<double> even = envelope(1.0);
    std::vector<double> odd = envelope(-1.0);
    const int center = chain.mirror_cells_per_side;
    const std::vector<double> &amp = even[center] >= odd[center] ? even : odd;

    std::vector<ProfilePoint> out;
    const double a_mirror = chain.mirror_cell.lattice_constant();
    const double a_defect = chain.defect_cell.lattice_constant();
    for (int c = 0; c < n_cells; ++c) {
        const int index = c - center;
        double position = 0.0;
        if (index != 0)
            position = (index > 0 ? 1.0 : -1.0) * (0.5 * a_defect + (std::abs(index) - 0.5) * a_mirror);
        out.push_back({index, position, amp[c] / amp[center]});
    }
    return out;
}

UnitCell calibrated_cell()
{
    const double quarter3 = 0.75 * wavelength_at_center();
    UnitCell cell;
    cell.narrow = {quarter3, kCalibratedSpeed, kNarrowImpedance};
    cell.wide = {quarter3, kCalibratedSpeed, kImpedanceRatio * kNarrowImpedance};
    return cell;
}

UnitCell calibrated_defect_cell(double extra_wide_length)
{
    UnitCell cell = calibrated_cell();
    cell.wide.length = 1.5 * wavelength_at_center() + extra_wide_length;
    return cell;
}

ChainSpec calibrated_chain(int mirror_cells_per_side, double extra_defect_length)
{
    ChainSpec spec;
    spec.mirror_cells_per_side = mirror_cells_per_side;
    spec.mirror_cell = calibrated_cell();
    spec.defect_cell = calibrated_defect_cell(extra_defect_length);
    spec.termination_impedance = kNarrowImpedance;
    return spec;
}

} // namespace qmem::chain
