#include "qmem/duffing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <unsupported/Eigen/Polynomials>

#include "qmem/core.hpp"
#include "qmem/csv.hpp"
#include "qmem/least_squares.hpp"

namespace qmem::duffing
{

using constants::two_pi;

void DuffingParams::validate() const
{
    require(f0 > 0.0 && Q > 0.0, "Duffing resonator needs f0 > 0 and Q > 0");
    require(std::isfinite(beta) && std::isfinite(drive), "beta and drive must be finite");
}

namespace
{

// Scaled variables: Omega = f / f0, delta = Q (1 - Omega^2), u = Q k z / w0^2
// with z = a^2 and k = 3/4 beta. The amplitude equation becomes
//   u^3 + 2 delta u^2 + (delta^2 + Omega^2) u = P,   P = k F^2 Q^3 / w0^6,
// with O(1) coefficients near resonance.
struct Scaled
{
    double k = 0.0;
    double w0 = 0.0;
    double P = 0.0;
};

Scaled scaled(const DuffingParams &p)
{
    Scaled s;
    s.k = 0.75 * p.beta;
    s.w0 = two_pi * p.f0;
    const double w0_2 = s.w0 * s.w0;
    s.P = s.k * p.drive * p.drive * p.Q * p.Q * p.Q / (w0_2 * w0_2 * w0_2);
    return s;
}

double cubic(double u, double delta, double omega2, double P)
{
    return ((u + 2.0 * delta) * u + delta * delta + omega2) * u - P;
}

double cubic_slope(double u, double delta, double omega2)
{
    return 3.0 * u * u + 4.0 * delta * u + delta * delta + omega2;
}

double discriminant(double delta, double omega2, double P)
{
    const double b = 2.0 * delta, c = delta * delta + omega2, d = -P;
    return 18.0 * b * c * d - 4.0 * b * b * b * d + b * b * c * c - 4.0 * c * c * c - 27.0 * d * d;
}

std::vector<double> real_cubic_roots(double delta, double omega2, double P)
{
    Eigen::Vector4d coeffs(-P, delta * delta + omega2, 2.0 * delta, 1.0);
    Eigen::PolynomialSolver<double, 3> solver(coeffs);
    const auto &roots = solver.roots();
    std::vector<double> out;
    if (discriminant(delta, omega2, P) > 0.0) {
        for (int i = 0; i < 3; ++i)
            out.push_back(roots[i].real());
    } else {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (std::abs(roots[i].imag()) < std::abs(roots[best].imag()))
                best = i;
        out.push_back(roots[best].real());
    }
    for (double &u : out) {
        for (int it = 0; it < 8; ++it) {
            const double slope = cubic_slope(u, delta, omega2);
            if (slope == 0.0)
                break;
            const double step = cubic(u, delta, omega2, P) / slope;
            u -= step;
            if (std::abs(step) <= 1e-16 * std::max(std::abs(u), 1e-300))
                break;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

using Poly = std::vector<double>;   // ascending coefficients

Poly mul(const Poly &a, const Poly &b)
{
    Poly out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] += a[i] * b[j];
    return out;
}

Poly add(Poly a, const Poly &b, double scale = 1.0)
{
    if (a.size() < b.size())
        a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i)
        a[i] += scale * b[i];
    return a;
}

double eval(const Poly &p, double x)
{
    double v = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it)
        v = v * x + *it;
    return v;
}

} // namespace

std::vector<Root> steady_state_amplitudes(const DuffingParams &p, double f_drive)
{
    p.validate();
    require(f_drive > 0.0, "drive frequency must be > 0");
    const Scaled s = scaled(p);
    const double w = two_pi * f_drive;
    if (s.k == 0.0) {
        const double D = s.w0 * s.w0 - w * w, c = s.w0 * w / p.Q;
        return {{std::abs(p.drive) / std::sqrt(D * D + c * c), true}};
    }
    const double omega = f_drive / p.f0;
    const double omega2 = omega * omega;
    const double delta = p.Q * (1.0 - omega2);
    std::vector<Root> out;
    for (double u : real_cubic_roots(delta, omega2, s.P)) {
        const double z = u * s.w0 * s.w0 / (p.Q * s.k);
        if (z < 0.0)
            continue;
        out.push_back({std::sqrt(z), cubic_slope(u, delta, omega2) > 0.0});
    }
    if (out.empty())
        out.push_back({0.0, true});
    std::sort(out.begin(), out.end(), [](const Root &a, const Root &b) { return a.amplitude < b.amplitude; });
    return out;
}

double critical_drive(const DuffingParams &p)
{
    p.validate();
    const double k = 0.75 * p.beta;
    if (k == 0.0)
        return std::numeric_limits<double>::infinity();
    // Cusp of the fold curves: delta^2 = 3 Omega^2 with sign(delta) = -sign(k).
    const double sign = k > 0.0 ? 1.0 : -1.0;
    const double r3q = std::sqrt(3.0) / p.Q;
    const double omega_c = 0.5 * (sign * r3q + std::sqrt(r3q * r3q + 4.0));
    const double w0 = two_pi * p.f0;
    const double c = w0 * w0 * omega_c / p.Q;
    return std::sqrt(8.0 * c * c * c / (3.0 * std::sqrt(3.0) * std::abs(k)));
}

std::optional<std::pair<double, double>> bistable_range(const DuffingParams &p)
{
    p.validate();
    const Scaled s = scaled(p);
    if (s.k == 0.0 || s.P == 0.0)
        return std::nullopt;

    // With Omega^2 = 1 - delta / Q the discriminant is a quintic in delta:
    //   -4 c^2 e - 36 P delta c + 32 P delta^3 - 27 P^2,
    // c = delta^2 + e, e = 1 - delta / Q.
    const Poly e{1.0, -1.0 / p.Q};
    const Poly c = add(e, Poly{0.0, 0.0, 1.0});
    Poly disc = mul(mul(c, c), e);
    for (double &v : disc)
        v *= -4.0;
    disc = add(disc, mul(Poly{0.0, 1.0}, c), -36.0 * s.P);
    disc = add(disc, Poly{0.0, 0.0, 0.0, 1.0}, 32.0 * s.P);
    disc = add(disc, Poly{1.0}, -27.0 * s.P * s.P);

    Eigen::VectorXd coeffs = Eigen::Map<Eigen::VectorXd>(disc.data(), static_cast<Eigen::Index>(disc.size()));
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(coeffs);
    std::vector<double> deltas;
    for (Eigen::Index i = 0; i < solver.roots().size(); ++i) {
        const auto r = solver.roots()[i];
        if (std::abs(r.imag()) <= 1e-9 * std::max(1.0, std::abs(r.real())) && r.real() < p.Q)
            deltas.push_back(r.real());
    }
    std::sort(deltas.begin(), deltas.end());
    for (std::size_t i = 0; i + 1 < deltas.size(); ++i) {
        const double mid = 0.5 * (deltas[i] + deltas[i + 1]);
        if (eval(disc, mid) > 0.0) {
            auto to_f = [&](double d) { return p.f0 * std::sqrt(1.0 - d / p.Q); };
            // Larger delta is the lower frequency.
            return std::make_pair(to_f(deltas[i + 1]), to_f(deltas[i]));
        }
    }
    return std::nullopt;
}

SweepResult sweep(const DuffingParams &p, double f_lo, double f_hi, int n_points, Direction direction)
{
    p.validate();
    require(f_lo > 0.0 && f_hi > f_lo, "sweep needs 0 < f_lo < f_hi");
    require(n_points >= 2, "sweep needs at least 2 points");
    SweepResult out;
    for (int i = 0; i < n_points; ++i)
        out.frequencies.push_back(f_lo + (f_hi - f_lo) * i / (n_points - 1));
    if (direction == Direction::backward)
        std::reverse(out.frequencies.begin(), out.frequencies.end());

    Branch current = Branch::single;
    double previous = -1.0;
    for (double f : out.frequencies) {
        std::vector<double> stable;
        for (const Root &r : steady_state_amplitudes(p, f))
            if (r.stable)
                stable.push_back(r.amplitude);
        double amp = stable.front();
        if (stable.size() == 1) {
            current = Branch::single;
        } else {
            if (current == Branch::single) {
                // Entering the bistable window: continue on the nearer branch.
                current = (previous >= 0.0 && std::abs(stable.back() - previous) < std::abs(stable.front() - previous))
                              ? Branch::upper
                              : Branch::lower;
            }
            amp = current == Branch::upper ? stable.back() : stable.front();
        }
        out.amplitudes.push_back(amp);
        out.branches.push_back(current);
        previous = amp;
    }

    if (auto range = bistable_range(p)) {
        const double lo = std::max(range->first, f_lo), hi = std::min(range->second, f_hi);
        if (lo < hi)
            out.bistable_range = std::make_pair(lo, hi);
    }
    return out;
}

double hysteresis_area(const DuffingParams &p, double f_lo, double f_hi, int n_points)
{
    const SweepResult fwd = sweep(p, f_lo, f_hi, n_points, Direction::forward);
    SweepResult bwd = sweep(p, f_lo, f_hi, n_points, Direction::backward);
    std::reverse(bwd.amplitudes.begin(), bwd.amplitudes.end());
    double area = 0.0;
    for (int i = 0; i + 1 < n_points; ++i) {
        const double df = fwd.frequencies[i + 1] - fwd.frequencies[i];
        area += 0.5 * df *
                (std::abs(fwd.amplitudes[i] - bwd.amplitudes[i]) + std::abs(fwd.amplitudes[i + 1] - bwd.amplitudes[i + 1]));
    }
    return area;
}

std::vector<BackbonePoint> backbone(const DuffingParams &p, const std::vector<double> &drive_levels)
{
    p.validate();
    require(drive_levels.size() >= 3, "backbone needs at least 3 drive levels");
    const double k = 0.75 * p.beta;
    const double w0 = two_pi * p.f0, w0_2 = w0 * w0;
    const double damping_shift = w0_2 / (2.0 * p.Q * p.Q);
    std::vector<BackbonePoint> out;
    for (double F : drive_levels) {
        require(F >= 0.0, "drive levels must be >= 0");
        // dz/dw = 0 on the response curve gives D + k z = w0^2 / (2 Q^2).
        double w = w0, z = 0.0;
        for (int it = 0; it < 200; ++it) {
            const double c = w0 * w / p.Q;
            z = F * F / (damping_shift * damping_shift + c * c);
            const double w2 = w0_2 + k * z - damping_shift;
            require(w2 > 0.0, "softening too strong: resonance peak pushed to zero frequency");
            const double next = std::sqrt(w2);
            const bool done = std::abs(next - w) <= 1e-15 * w;
            w = next;
            if (done)
                break;
        }
        out.push_back({std::sqrt(z), w / two_pi});
    }
    return out;
}

BackboneFit fit_backbone(const std::vector<BackbonePoint> &points)
{
    require(points.size() >= 4, "backbone fit needs at least 4 points");
    std::vector<BackbonePoint> pts = points;
    std::sort(pts.begin(), pts.end(), [](const auto &a, const auto &b) { return a.amplitude < b.amplitude; });
    for (std::size_t i = 0; i < pts.size(); ++i) {
        require(pts[i].amplitude > 0.0 && std::isfinite(pts[i].frequency), "backbone amplitudes must be positive");
        if (i > 0)
            require(pts[i].amplitude > pts[i - 1].amplitude, "backbone amplitudes must be distinct");
    }

    const auto [f_min, f_max] = std::minmax_element(pts.begin(), pts.end(),
                                                    [](const auto &a, const auto &b) { return a.frequency < b.frequency; });
    const double f0_guess = f_min->frequency;
    const double spread = f_max->frequency - f_min->frequency > 0.0 ? f_max->frequency - f_min->frequency : 1e-6 * f0_guess;
    const double a_ref = pts.back().amplitude;
    const double a_lo = pts.front().amplitude / a_ref;
    // Two-point slope with n = 2, in units of the reference amplitude.
    const double B_guess = (pts.back().frequency - pts.front().frequency) / (1.0 - a_lo * a_lo);

    // x = ((f0 - f0_guess) / spread, B / spread, n), f = f0 + B (a / a_ref)^n.
    const auto m = static_cast<int>(pts.size());
    lsq::ResidualFn residuals = [&](const Eigen::VectorXd &x, Eigen::VectorXd &r) {
        for (int i = 0; i < m; ++i) {
            const double model = x[0] + x[1] * std::pow(pts[i].amplitude / a_ref, x[2]);
            r[i] = model - (pts[i].frequency - f0_guess) / spread;
        }
    };
    Eigen::VectorXd x0(3);
    x0 << 0.0, B_guess / spread, 2.0;
    const lsq::Result res = lsq::minimize(residuals, m, x0);

    BackboneFit fit;
    fit.f0 = f0_guess + res.params[0] * spread;
    fit.n = res.params[2];
    const double B = res.params[1] * spread;
    fit.A = B / std::pow(a_ref, fit.n);
    fit.residual_norm = res.residual_norm * spread;

    const double dof = std::max(1, m - 3);
    const Eigen::Matrix3d cov = res.covariance * (res.residual_norm * res.residual_norm / dof);
    fit.sigma_f0 = std::sqrt(cov(0, 0)) * spread;
    fit.sigma_n = std::sqrt(cov(2, 2));
    const Eigen::Vector3d grad(0.0, spread / std::pow(a_ref, fit.n), -fit.A * std::log(a_ref));
    fit.sigma_A = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
    return fit;
}

const char *to_string(Branch b)
{
    switch (b) {
    case Branch::single: return "single";
    case Branch::lower: return "lower";
    case Branch::upper: return "upper";
    }
    return "single";
}

void write_sweep_csv(std::ostream &out, const SweepResult &result)
{
    csv::write_header(out, {"f_Hz", "amp", "branch"});
    for (std::size_t i = 0; i < result.frequencies.size(); ++i)
        out << csv::format_number(result.frequencies[i]) << ',' << csv::format_number(result.amplitudes[i]) << ','
            << to_string(result.branches[i]) << '\n';
}

} // namespace qmem::duffing
