#include "qmem/electromech.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "qmem/csv.hpp"
#include "qmem/least_squares.hpp"
#include "qmem/log.hpp"

namespace qmem::em
{

using constants::two_pi;

void BvdParams::validate() const
{
    require(C0 > 0.0 && Cm > 0.0 && Lm > 0.0, "BVD needs C0, Cm, Lm > 0");
    require(Rm >= 0.0, "BVD needs Rm >= 0");
}

double BvdParams::series_resonance() const { return 1.0 / (two_pi * std::sqrt(Lm * Cm)); }

double BvdParams::parallel_resonance() const { return series_resonance() * std::sqrt(1.0 + Cm / C0); }

ShuntCircuit ShuntCircuit::from_inductance(double Cr, double Lr)
{
    require(Cr > 0.0 && Lr > 0.0, "shunt needs Cr, Lr > 0");
    return ShuntCircuit(Cr, Lr, 1.0 / (two_pi * std::sqrt(Lr * Cr)));
}

ShuntCircuit ShuntCircuit::from_frequency(double Cr, double f_r)
{
    require(Cr > 0.0 && f_r > 0.0, "shunt needs Cr, f_r > 0");
    return ShuntCircuit(Cr, std::nullopt, f_r);
}

ShuntCircuit ShuntCircuit::from_both(double Cr, double Lr, double f_r)
{
    const ShuntCircuit derived = from_inductance(Cr, Lr);
    require(f_r > 0.0 && std::abs(derived.f_r() - f_r) <= 1e-9 * f_r,
            "shunt f_r disagrees with 1/(2 pi sqrt(Lr Cr))");
    return derived;
}

std::complex<double> bvd_admittance(const BvdParams &p, Frequency f)
{
    require(p.C0 > 0.0 && p.Cm >= 0.0 && p.Rm >= 0.0, "BVD needs C0 > 0, Cm >= 0, Rm >= 0");
    const double w = f.angular();
    const std::complex<double> shunt(0.0, w * p.C0);
    if (p.Cm == 0.0)
        return shunt;
    const std::complex<double> z(p.Rm, w * p.Lm - 1.0 / (w * p.Cm));
    if (z == 0.0)
        return {0.0, std::numeric_limits<double>::infinity()};
    return shunt + 1.0 / z;
}

namespace
{

struct Window
{
    std::size_t pole = 0;   // Im Y[pole] > 0 > Im Y[pole + 1]
};

Window locate_pole(const FrequencyTrace &trace)
{
    for (std::size_t i = 0; i + 1 < trace.size(); ++i)
        if (trace.response[i].imag() > 0.0 && trace.response[i + 1].imag() < 0.0)
            return {i};
    throw Error(Errc::resonance_not_in_window, "Im Y has no + to - sign change in the window");
}

// y = Im Y / w = C0 + Cm / (1 - w^2 Lm Cm) rearranged to
// y = a + b w^2 y + c w^2 with a = C0 + Cm, b = Lm Cm, c = -Lm Cm C0.
std::optional<BvdParams> linear_guess(const FrequencyTrace &trace)
{
    const auto n = static_cast<Eigen::Index>(trace.size());
    Eigen::MatrixXd A(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = two_pi * trace.frequencies[i];
        const double y = trace.response[i].imag() / w;
        A(i, 0) = 1.0;
        A(i, 1) = w * w * y;
        A(i, 2) = w * w;
        rhs[i] = y;
    }
    Eigen::Vector3d scale;
    for (int j = 0; j < 3; ++j) {
        scale[j] = A.col(j).norm();
        A.col(j) /= scale[j];
    }
    const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(rhs).cwiseQuotient(scale);
    const double a = sol[0], b = sol[1], c = sol[2];
    if (!(b > 0.0))
        return std::nullopt;
    BvdParams p;
    p.C0 = -c / b;
    p.Cm = a - p.C0;
    if (!(p.C0 > 0.0 && p.Cm > 0.0))
        return std::nullopt;
    p.Lm = b / p.Cm;
    return p;
}

// Coarse guess from the pole position and, if visible, the antiresonance.
BvdParams structural_guess(const FrequencyTrace &trace, const Window &win)
{
    const double f_s = 0.5 * (trace.frequencies[win.pole] + trace.frequencies[win.pole + 1]);
    const std::size_t far = (f_s - trace.frequencies.front() > trace.frequencies.back() - f_s) ? 0 : trace.size() - 1;
    BvdParams p;
    p.C0 = std::abs(trace.response[far].imag()) / (two_pi * trace.frequencies[far]);
    p.Cm = 1e-4 * p.C0;
    for (std::size_t i = win.pole + 1; i + 1 < trace.size(); ++i) {
        if (trace.response[i].imag() < 0.0 && trace.response[i + 1].imag() > 0.0) {
            const double f_p = 0.5 * (trace.frequencies[i] + trace.frequencies[i + 1]);
            p.Cm = p.C0 * ((f_p / f_s) * (f_p / f_s) - 1.0);
            break;
        }
    }
    p.Lm = 1.0 / (std::pow(two_pi * f_s, 2) * p.Cm);
    return p;
}

} // namespace

BvdFit fit_bvd(const FrequencyTrace &trace, const FitBvdOptions &options)
{
    trace.validate();
    require(trace.size() >= 50, "BVD fit needs at least 50 points");
    const Window win = locate_pole(trace);

    BvdParams guess = linear_guess(trace).value_or(structural_guess(trace, win));
    // The resonance is a free parameter of its own, counted in grid steps from
    // the observed pole (offset by 1 to keep finite-difference steps sane);
    // fitting Lm and Cm separately would tie a difference step to a shift of
    // many linewidths.
    const double f_pole = 0.5 * (trace.frequencies[win.pole] + trace.frequencies[win.pole + 1]);
    const double f_step = trace.frequencies[win.pole + 1] - trace.frequencies[win.pole];
    const double w_s = two_pi * f_pole;
    // Resistance scale: Lm w_s / Q for a nominal Q of 1e4.
    const double r_scale = guess.Lm * w_s / 1e4;

    const auto n = static_cast<int>(trace.size());
    double y_max = 0.0;
    for (const auto &y : trace.response)
        y_max = std::max(y_max, std::abs(y));
    std::vector<double> weight(n);
    for (int i = 0; i < n; ++i)
        weight[i] = 1.0 / std::max(std::abs(trace.response[i]), 1e-6 * y_max);

    auto model = [&](const Eigen::VectorXd &x) {
        BvdParams p;
        p.C0 = std::exp(x[0]);
        p.Cm = std::exp(x[1]);
        const double w = two_pi * (f_pole + (x[2] - 1.0) * f_step);
        p.Lm = 1.0 / (w * w * p.Cm);
        if (options.fit_resistance)
            p.Rm = r_scale * x[3];
        return p;
    };

    const int n_res = options.fit_resistance ? 2 * n : n;
    lsq::ResidualFn residuals = [&](const Eigen::VectorXd &x, Eigen::VectorXd &r) {
        const BvdParams p = model(x);
        for (int i = 0; i < n; ++i) {
            const double w = two_pi * trace.frequencies[i];
            const std::complex<double> z(p.Rm, w * p.Lm - 1.0 / (w * p.Cm));
            const std::complex<double> y = std::complex<double>(0.0, w * p.C0) + 1.0 / z;
            r[i] = (y.imag() - trace.response[i].imag()) * weight[i];
            if (options.fit_resistance)
                r[n + i] = (y.real() - trace.response[i].real()) * weight[i];
        }
    };

    Eigen::VectorXd x0(options.fit_resistance ? 4 : 3);
    x0 << std::log(guess.C0), std::log(guess.Cm), 1.0;
    if (options.fit_resistance)
        x0[3] = 0.0;

    const lsq::Result result = lsq::minimize(residuals, n_res, x0);
    BvdFit fit;
    fit.params = model(result.params);
    // A slightly negative Rm is noise around a lossless mode.
    fit.params.Rm = std::max(fit.params.Rm, 0.0);
    fit.residual_norm = result.residual_norm;
    return fit;
}

CouplingRate coupling_rate_gsm(const BvdParams &p, const ShuntCircuit &shunt, std::optional<Frequency> f_m)
{
    require(p.C0 > 0.0 && p.Cm >= 0.0, "BVD needs C0 > 0, Cm >= 0");
    CouplingRate out;
    if (p.Cm == 0.0)
        return out;
    const double w_m = f_m ? f_m->angular() : two_pi * p.series_resonance();
    const double w_r = two_pi * shunt.f_r();
    const double g = 0.5 * std::sqrt(w_r * w_m) * std::sqrt(p.Cm / (shunt.Cr() + p.Cm + p.C0));
    out.g_hz = g / two_pi;
    if (shunt.Cr() <= 10.0 * (p.C0 + p.Cm)) {
        out.approximation_valid = false;
        logger().warn("coupling estimate: Cr = {:g} F is not >> C0 + Cm = {:g} F", shunt.Cr(), p.C0 + p.Cm);
    }
    return out;
}

CouplingRate coupling_rate_gij(double Ci, double Cj, double Cij, Frequency fi, Frequency fj)
{
    require(Ci > 0.0 && Cj > 0.0 && Cij >= 0.0, "need Ci, Cj > 0 and Cij >= 0");
    const double g = 0.5 * std::sqrt(fi.angular() * fj.angular()) * Cij / std::sqrt((Ci + Cij) * (Cj + Cij));
    return {g / two_pi, true};
}

BvdParams scale_defects(const BvdParams &p, DefectArraySpec spec)
{
    require(spec.n >= 1, "defect count must be >= 1");
    BvdParams out = p;
    out.Cm = p.Cm * spec.n;
    out.Lm = p.Lm / spec.n;
    out.C0 = p.C0 * spec.n;
    return out;
}

FrequencyTrace read_admittance_csv(std::istream &in)
{
    const csv::Table table = csv::read(in, {"f_Hz", "ReY_S", "ImY_S"});
    FrequencyTrace trace;
    for (const auto &row : table.rows) {
        trace.frequencies.push_back(row[0]);
        trace.response.emplace_back(row[1], row[2]);
    }
    trace.validate();
    return trace;
}

void write_admittance_csv(std::ostream &out, const FrequencyTrace &trace)
{
    csv::write_header(out, {"f_Hz", "ReY_S", "ImY_S"});
    for (std::size_t i = 0; i < trace.size(); ++i)
        out << csv::format_number(trace.frequencies[i]) << ',' << csv::format_number(trace.response[i].real()) << ','
            << csv::format_number(trace.response[i].imag()) << '\n';
}

} // namespace qmem::em
