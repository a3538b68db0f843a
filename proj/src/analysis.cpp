#include "qmem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "qmem/csv.hpp"
#include "qmem/least_squares.hpp"
#include "qmem/log.hpp"

namespace qmem::analysis
{

using cplx = std::complex<double>;

namespace
{

double median(std::vector<double> v)
{
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// Covariance scaled by the residual variance.
Eigen::MatrixXd scaled_covariance(const lsq::Result &r, int n_params)
{
    const double dof = std::max<double>(1.0, static_cast<double>(r.residuals.size() - n_params));
    return r.covariance * (r.residual_norm * r.residual_norm / dof);
}

struct PeakGuess
{
    std::size_t index = 0;
    double height = 0.0;     // above the baseline
    double baseline = 0.0;
    double linewidth = 0.0;  // Hz
};

PeakGuess locate_peak(const std::vector<double> &f, const std::vector<double> &mag)
{
    PeakGuess g;
    g.index = static_cast<std::size_t>(std::max_element(mag.begin(), mag.end()) - mag.begin());
    g.baseline = median(mag);
    std::vector<double> dev(mag.size());
    for (std::size_t i = 0; i < mag.size(); ++i)
        dev[i] = std::abs(mag[i] - g.baseline);
    const double mad = 1.4826 * median(dev);
    g.height = mag[g.index] - g.baseline;
    if (!(g.height > 0.0) || g.height < 5.0 * mad)
        throw Error(Errc::no_peak_found, "no resonance stands above the noise floor");

    // Half-power level of a Lorentzian magnitude is 1/sqrt(2) of its peak.
    const double level = g.baseline + g.height / std::sqrt(2.0);
    auto crossing = [&](int step) -> std::optional<double> {
        for (auto i = static_cast<std::ptrdiff_t>(g.index); i + step >= 0 && i + step < static_cast<std::ptrdiff_t>(mag.size());
             i += step) {
            const double a = mag[i], b = mag[i + step];
            if (b < level) {
                const double frac = (a - level) / (a - b);
                return f[i] + frac * (f[i + step] - f[i]);
            }
        }
        return std::nullopt;
    };
    const auto lo = crossing(-1), hi = crossing(+1);
    const double spacing = (f.back() - f.front()) / static_cast<double>(f.size() - 1);
    if (lo && hi)
        g.linewidth = *hi - *lo;
    else if (lo)
        g.linewidth = 2.0 * (f[g.index] - *lo);
    else if (hi)
        g.linewidth = 2.0 * (*hi - f[g.index]);
    g.linewidth = std::max(g.linewidth, 2.0 * spacing);
    return g;
}

} // namespace

ResonanceFit fit_lorentzian(const FrequencyTrace &trace, LorentzianMode mode)
{
    trace.validate();
    require(trace.size() >= 20, "Lorentzian fit needs at least 20 points");
    const auto m = static_cast<int>(trace.size());
    std::vector<double> mag(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i)
        mag[i] = std::abs(trace.response[i]);
    const PeakGuess g = locate_peak(trace.frequencies, mag);

    // Centred, linewidth-scaled axis; amplitudes scaled by the peak magnitude.
    const double fc = 0.5 * (trace.frequencies.front() + trace.frequencies.back());
    const double w = g.linewidth;
    const double s = mag[g.index];
    std::vector<double> x_axis(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i)
        x_axis[i] = (trace.frequencies[i] - fc) / w;

    const bool is_complex = mode == LorentzianMode::complex;
    // Magnitude: (x0, log kappa/w, A, b_re, b_im). Complex adds theta after A.
    auto model = [&](const Eigen::VectorXd &p, double x) {
        const double kappa = std::exp(p[1]);
        const cplx amp = is_complex ? std::polar(p[2], p[3]) : cplx(p[2], 0.0);
        const cplx bg = is_complex ? cplx(p[4], p[5]) : cplx(p[3], p[4]);
        return bg + amp / cplx(1.0, 2.0 * (x - p[0]) / kappa);
    };
    const int n_params = is_complex ? 6 : 5;
    const int n_res = is_complex ? 2 * m : m;
    lsq::ResidualFn residuals = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
        for (int i = 0; i < m; ++i) {
            const cplx y = model(p, x_axis[i]);
            if (is_complex) {
                r[i] = y.real() - trace.response[i].real() / s;
                r[m + i] = y.imag() - trace.response[i].imag() / s;
            } else {
                r[i] = std::abs(y) - mag[i] / s;
            }
        }
    };

    Eigen::VectorXd p0(n_params);
    const double x_peak = x_axis[g.index];
    if (is_complex) {
        const cplx bg = 0.5 * (trace.response.front() + trace.response.back()) / s;
        const cplx peak = trace.response[g.index] / s - bg;
        p0 << x_peak, 0.0, std::abs(peak), std::arg(peak), bg.real(), bg.imag();
    } else {
        p0 << x_peak, 0.0, g.height / s, g.baseline / s, 0.0;
    }

    const lsq::Result res = lsq::minimize(residuals, n_res, p0);
    const Eigen::VectorXd &p = res.params;
    ResonanceFit fit;
    fit.f0 = fc + p[0] * w;
    fit.linewidth = std::exp(p[1]) * w;
    fit.Q = fit.f0 / fit.linewidth;
    fit.amplitude = p[2] * s;
    fit.phase = is_complex ? p[3] : 0.0;
    const int b = is_complex ? 4 : 3;
    fit.background = cplx(p[b], p[b + 1]) * s;
    if (fit.amplitude < 0.0 && !is_complex) {
        // |b - A L| = |(-b) + A L|: same curve, report A > 0.
        fit.amplitude = -fit.amplitude;
        fit.background = -fit.background;
    }
    fit.residual_norm = res.residual_norm / std::sqrt(static_cast<double>(n_res));
    if (fit.f0 < trace.frequencies.front() || fit.f0 > trace.frequencies.back() || !(fit.Q > 0.0))
        throw Error(Errc::fit_did_not_converge, "fitted resonance left the trace window");

    const Eigen::MatrixXd cov = scaled_covariance(res, n_params);
    fit.sigma_f0 = std::sqrt(cov(0, 0)) * w;
    // Q = (fc + w x0) / (w e^{p1}).
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params);
    grad[0] = 1.0 / std::exp(p[1]);
    grad[1] = -fit.Q;
    fit.sigma_Q = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
    fit.sigma_amplitude = std::sqrt(cov(2, 2)) * s;
    fit.sigma_background = cplx(std::sqrt(cov(b, b)), std::sqrt(cov(b + 1, b + 1))) * s;
    return fit;
}

RingdownFit ringdown_from_two_points(double t1, double y1, double t2, double y2)
{
    require(t2 != t1, "two-point ringdown needs distinct times");
    require(y1 > 0.0 && y2 > 0.0, "two-point ringdown needs positive samples");
    if (y1 == y2)
        throw Error(Errc::non_decaying_trace, "equal samples carry no decay");
    RingdownFit fit;
    fit.tau = (t2 - t1) / std::log(y1 / y2);
    if (!(fit.tau > 0.0))
        throw Error(Errc::non_decaying_trace, "samples grow in time");
    fit.initial_amplitude = y1 * std::exp(t1 / fit.tau);
    return fit;
}

RingdownFit fit_ringdown(const TimeTrace &trace)
{
    trace.validate();
    require(trace.size() >= 20, "ringdown fit needs at least 20 points");
    const auto m = static_cast<int>(trace.size());
    const auto [lo_it, hi_it] = std::minmax_element(trace.amplitude.begin(), trace.amplitude.end());
    if (*hi_it == *lo_it)
        throw Error(Errc::non_decaying_trace, "trace is constant");

    const double t0 = trace.times.front();
    const double span = trace.times.back() - t0;
    const double s = std::max(std::abs(*hi_it), std::abs(*lo_it));

    // Three-window estimate: (y0 - ym) / (ym - ye) = exp(span / 2 tau).
    const std::size_t win = std::max<std::size_t>(1, trace.size() / 20);
    auto window_mean = [&](std::size_t centre) {
        const std::size_t a = centre >= win / 2 ? centre - win / 2 : 0;
        const std::size_t b = std::min(trace.size(), a + win);
        double sum = 0.0, tsum = 0.0;
        for (std::size_t i = a; i < b; ++i) {
            sum += trace.amplitude[i];
            tsum += trace.times[i];
        }
        return std::make_pair(tsum / static_cast<double>(b - a), sum / static_cast<double>(b - a));
    };
    const auto [ta, ya] = window_mean(win / 2);
    const auto [tm, ym] = window_mean(trace.size() / 2);
    const auto [te, ye] = window_mean(trace.size() - 1 - win / 2);
    double tau = 0.5 * span, offset = 0.0, amp = trace.amplitude.front();
    const double ratio = (ya - ym) / (ym - ye);
    if (ratio > 1.0 && std::isfinite(ratio)) {
        tau = 0.5 * (te - ta) / std::log(ratio);
        offset = (ya * ye - ym * ym) / (ya + ye - 2.0 * ym);
        amp = (ya - offset) * std::exp((ta - t0) / tau);
    }

    // p = (log(tau / span), A / s, offset / s), time measured from t0.
    lsq::ResidualFn residuals = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
        const double inv_tau = 1.0 / (std::exp(p[0]) * span);
        for (int i = 0; i < m; ++i)
            r[i] = p[2] + p[1] * std::exp(-(trace.times[i] - t0) * inv_tau) - trace.amplitude[i] / s;
    };
    Eigen::VectorXd p0(3);
    p0 << std::log(tau / span), amp / s, offset / s;
    const lsq::Result res = lsq::minimize(residuals, m, p0);

    RingdownFit fit;
    fit.tau = std::exp(res.params[0]) * span;
    if (!std::isfinite(fit.tau) || fit.tau > 100.0 * span)
        throw Error(Errc::non_decaying_trace, "fitted lifetime exceeds 100x the trace span");
    if (span < 2.0 * fit.tau)
        logger().warn("ringdown trace spans only {:.3g} lifetimes", span / fit.tau);
    // Amplitude referred to t = 0 rather than the first sample.
    fit.initial_amplitude = res.params[1] * s * std::exp(t0 / fit.tau);
    fit.offset = res.params[2] * s;
    fit.residual_norm = res.residual_norm / std::sqrt(static_cast<double>(m));

    const Eigen::MatrixXd cov = scaled_covariance(res, 3);
    fit.sigma_tau = fit.tau * std::sqrt(cov(0, 0));
    fit.sigma_amplitude = std::sqrt(cov(1, 1)) * s * std::exp(t0 / fit.tau);
    fit.sigma_offset = std::sqrt(cov(2, 2)) * s;
    return fit;
}

double quality_from_lifetime(Frequency f, double tau)
{
    require(tau > 0.0, "lifetime must be > 0");
    return f.angular() * tau;
}

double q_tau_consistency(double Q, Frequency f, double tau)
{
    require(Q > 0.0, "Q must be > 0");
    return std::abs(Q - quality_from_lifetime(f, tau)) / Q;
}

FrequencyTraceFile read_frequency_trace_csv(std::istream &in)
{
    const csv::Table table = csv::read(in, std::vector<std::vector<std::string>>{{"f_Hz", "mag"}, {"f_Hz", "re", "im"}});
    FrequencyTraceFile out;
    out.has_phase = table.header.size() == 3;
    for (const auto &row : table.rows) {
        out.trace.frequencies.push_back(row[0]);
        out.trace.response.emplace_back(row[1], out.has_phase ? row[2] : 0.0);
    }
    out.trace.validate();
    return out;
}

TimeTrace read_time_trace_csv(std::istream &in)
{
    const csv::Table table = csv::read(in, std::vector<std::string>{"t_s", "amp"});
    TimeTrace trace;
    for (const auto &row : table.rows) {
        trace.times.push_back(row[0]);
        trace.amplitude.push_back(row[1]);
    }
    trace.validate();
    return trace;
}

} // namespace qmem::analysis
