#include "qmem/qdyn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/KroneckerProduct>

#include "qmem/log.hpp"

namespace qmem::qdyn
{

using Eigen::MatrixXcd;
using cplx = std::complex<double>;
using constants::two_pi;

void ModeParams::validate() const
{
    require(frequency > 0.0, "mode frequency must be > 0");
    require(decay_rate >= 0.0 && dephasing_rate >= 0.0, "mode rates must be >= 0");
    require(anharmonicity >= 0.0, "anharmonicity (E_C/h) must be >= 0");
}

void TriModeSystem::validate() const
{
    qubit.validate();
    snail.validate();
    mech.validate();
    require(std::isfinite(g_qs) && std::isfinite(g_sm) && std::isfinite(g3), "couplings must be finite");
}

void DriveSpec::validate() const
{
    require(drive_frequency > 0.0, "drive frequency must be > 0");
    require(duration >= 0.0, "drive duration must be >= 0");
    require(epsilon.has_value() != n_s.has_value(), "give exactly one of drive amplitude or n_s");
    if (n_s)
        require(*n_s >= 0.0, "n_s must be >= 0");
}

void Dims::validate() const
{
    require(qubit == 2 || qubit == 3, "qubit levels must be 2 or 3");
    require(mech >= 2, "mechanical cutoff must be >= 2");
    require(snail == 0 || snail >= 2, "SNAIL cutoff must be 0 (eliminated) or >= 2");
}

int Dims::index(int nq, int nm, int ns) const
{
    const int ds = snail > 0 ? snail : 1;
    require(nq >= 0 && nq < qubit && nm >= 0 && nm < mech && ns >= 0 && ns < ds, "Fock index out of range");
    return (nq * mech + nm) * ds + ns;
}

DensityMatrix::DensityMatrix(Dims dims, Eigen::MatrixXcd rho) : dims_(dims), rho_(std::move(rho))
{
    dims_.validate();
    require(rho_.rows() == dims_.total() && rho_.cols() == dims_.total(), "density matrix size does not match dims");
}

DensityMatrix DensityMatrix::basis(Dims dims, int nq, int nm, int ns)
{
    dims.validate();
    MatrixXcd rho = MatrixXcd::Zero(dims.total(), dims.total());
    const int k = dims.index(nq, nm, ns);
    rho(k, k) = 1.0;
    return DensityMatrix(dims, std::move(rho));
}

double DensityMatrix::population(int nq, int nm, int ns) const
{
    const int k = dims_.index(nq, nm, ns);
    return rho_(k, k).real();
}

double DensityMatrix::trace() const { return rho_.trace().real(); }

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

double DensityMatrix::hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const
{
    const MatrixXcd herm = 0.5 * (rho_ + rho_.adjoint());
    return Eigen::SelfAdjointEigenSolver<MatrixXcd>(herm, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

void DensityMatrix::validate() const
{
    require(hermiticity_error() <= 1e-10, "density matrix is not Hermitian");
    require(std::abs(trace() - 1.0) <= 1e-9, "density matrix trace is not 1");
    require(min_eigenvalue() >= -1e-9, "density matrix is not positive semidefinite");
}

double Dissipation::max_rate() const
{
    return std::max({qubit_decay, qubit_dephasing, mech_decay, mech_dephasing, snail_decay});
}

DressedSystem dress(const TriModeSystem &sys)
{
    sys.validate();
    const double f_q = sys.qubit.frequency, f_s = sys.snail.frequency, f_m = sys.mech.frequency;
    auto check = [](double delta, double g, const char *pair) {
        // The tolerance lets |lambda| = 0.1 exactly through.
        if (std::abs(delta) * (1.0 + 1e-9) < 10.0 * std::abs(g))
            throw Error(Errc::degenerate_modes, std::string(pair) + " detuning is below 10 g; perturbative dressing invalid");
    };
    check(f_q - f_s, sys.g_qs, "qubit-SNAIL");
    check(f_s - f_m, sys.g_sm, "SNAIL-mechanics");

    DressedSystem d;
    d.lambda_qs = sys.g_qs == 0.0 ? 0.0 : sys.g_qs / (f_q - f_s);
    d.lambda_sm = sys.g_sm == 0.0 ? 0.0 : sys.g_sm / (f_s - f_m);
    // Second-order level shifts: each mode is pushed away from its partner.
    d.f_q = f_q + d.lambda_qs * sys.g_qs;
    d.f_s = f_s - d.lambda_qs * sys.g_qs + d.lambda_sm * sys.g_sm;
    d.f_m = f_m - d.lambda_sm * sys.g_sm;
    return d;
}

std::array<double, 3> exact_normal_modes(const TriModeSystem &sys)
{
    sys.validate();
    Eigen::Matrix3d m;
    m << sys.qubit.frequency, sys.g_qs, 0.0, sys.g_qs, sys.snail.frequency, sys.g_sm, 0.0, sys.g_sm, sys.mech.frequency;
    const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(m, Eigen::EigenvaluesOnly).eigenvalues();
    return {ev[2], ev[1], ev[0]};
}

double hybridized_decay(double gamma_m, double lambda_sm, double gamma_s)
{
    require(gamma_m >= 0.0 && gamma_s >= 0.0, "decay rates must be >= 0");
    return gamma_m + lambda_sm * lambda_sm * gamma_s;
}

std::complex<double> effective_eta(const DriveSpec &drive, double f_s)
{
    drive.validate();
    require(f_s > 0.0, "SNAIL frequency must be > 0");
    const double f_d = drive.drive_frequency;
    if (std::abs(f_d - f_s) < 1e-6 * f_s)
        throw Error(Errc::drive_on_resonance, "drive frequency coincides with the SNAIL mode");
    const cplx phase = std::polar(1.0, drive.phase);
    if (drive.n_s)
        return std::sqrt(*drive.n_s) * phase;
    return 2.0 * f_d * *drive.epsilon / (f_s * f_s - f_d * f_d) * phase;
}

double effective_coupling_rate(double g3, double lambda_qs, double lambda_sm, double eta_magnitude)
{
    return std::abs(6.0 * g3 * lambda_qs * lambda_sm * eta_magnitude);
}

EffectiveHamiltonian effective_coupling(const TriModeSystem &sys, const DriveSpec &drive)
{
    const DressedSystem d = dress(sys);
    const cplx eta = effective_eta(drive, sys.snail.frequency);

    EffectiveHamiltonian eff;
    eff.g_eff = effective_coupling_rate(sys.g3, d.lambda_qs, d.lambda_sm, std::abs(eta));
    const double signed_product = sys.g3 * d.lambda_qs * d.lambda_sm;
    eff.drive_phase = std::arg(eta) + (signed_product < 0.0 ? std::numbers::pi : 0.0);
    eff.cross_kerr = -2.0 * sys.qubit.anharmonicity * d.lambda_qs * d.lambda_qs;
    eff.qubit_self_kerr = -sys.qubit.anharmonicity;

    if (eff.g_eff > 0.0) {
        const double difference = std::abs(d.f_q - d.f_m);
        if (std::abs(drive.drive_frequency - difference) > 10.0 * eff.g_eff)
            throw Error(Errc::drive_off_difference_frequency,
                        "drive is more than 10 g_eff away from the dressed qubit-mechanics difference frequency");
    }
    if (sys.qubit.anharmonicity > 0.0 && sys.qubit.anharmonicity <= sys.mech.frequency)
        logger().warn("qubit anharmonicity {:g} Hz does not exceed the mechanical frequency {:g} Hz",
                      sys.qubit.anharmonicity, sys.mech.frequency);
    return eff;
}

namespace
{

MatrixXcd lowering(int d)
{
    MatrixXcd a = MatrixXcd::Zero(d, d);
    for (int n = 1; n < d; ++n)
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

struct Operators
{
    MatrixXcd q, m, s;   // s is empty when the SNAIL is eliminated
};

Operators mode_operators(const Dims &dims)
{
    const int ds = dims.snail > 0 ? dims.snail : 1;
    const MatrixXcd iq = MatrixXcd::Identity(dims.qubit, dims.qubit);
    const MatrixXcd im = MatrixXcd::Identity(dims.mech, dims.mech);
    const MatrixXcd is = MatrixXcd::Identity(ds, ds);
    Operators ops;
    ops.q = Eigen::kroneckerProduct(lowering(dims.qubit), Eigen::kroneckerProduct(im, is).eval()).eval();
    ops.m = Eigen::kroneckerProduct(iq, Eigen::kroneckerProduct(lowering(dims.mech), is).eval()).eval();
    if (dims.snail > 0)
        ops.s = Eigen::kroneckerProduct(iq, Eigen::kroneckerProduct(im, lowering(ds)).eval()).eval();
    return ops;
}

struct Lindblad
{
    MatrixXcd K;                      // -i 2pi H - 1/2 sum L^dag L
    std::vector<MatrixXcd> jumps;

    MatrixXcd rhs(const MatrixXcd &rho) const
    {
        MatrixXcd out = K * rho;
        out += rho * K.adjoint();
        for (const auto &L : jumps)
            out += L * rho * L.adjoint();
        return out;
    }
};

Lindblad make_lindblad(const Dims &dims, const MatrixXcd &H, const Dissipation &rates)
{
    const Operators ops = mode_operators(dims);
    Lindblad lb;
    auto add = [&](double rate, const MatrixXcd &L) {
        if (rate > 0.0)
            lb.jumps.push_back(std::sqrt(rate) * L);
    };
    add(rates.qubit_decay, ops.q);
    add(2.0 * rates.qubit_dephasing, ops.q.adjoint() * ops.q);
    add(rates.mech_decay, ops.m);
    add(2.0 * rates.mech_dephasing, ops.m.adjoint() * ops.m);
    if (dims.snail > 0)
        add(rates.snail_decay, ops.s);

    lb.K = cplx(0.0, -two_pi) * H;
    for (const auto &L : lb.jumps)
        lb.K -= 0.5 * L.adjoint() * L;
    return lb;
}

MatrixXcd unitary(const MatrixXcd &H, double t)
{
    const Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (H + H.adjoint()));
    Eigen::VectorXcd phases(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < phases.size(); ++k)
        phases[k] = std::polar(1.0, -two_pi * es.eigenvalues()[k] * t);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// First local maximum of a sampled series, refined by a parabola through
// the neighbouring samples. Returns 0 when the series never turns over.
double first_maximum(const std::vector<double> &t, const std::vector<double> &p)
{
    for (std::size_t k = 1; k + 1 < p.size(); ++k) {
        if (p[k] >= p[k - 1] && p[k] > p[k + 1] && p[k] > 1e-6) {
            const double h = t[k + 1] - t[k];
            const double denom = p[k - 1] - 2.0 * p[k] + p[k + 1];
            const double shift = denom == 0.0 ? 0.0 : 0.5 * (p[k - 1] - p[k + 1]) / denom;
            return t[k] + shift * h;
        }
    }
    return 0.0;
}

} // namespace

MatrixXcd build_rwa_hamiltonian(const EffectiveHamiltonian &eff, const Dims &dims)
{
    dims.validate();
    const Operators ops = mode_operators(dims);
    const int n = dims.total();
    const MatrixXcd nq = ops.q.adjoint() * ops.q;
    MatrixXcd H = MatrixXcd::Zero(n, n);
    if (dims.qubit > 2)
        H += 0.5 * eff.qubit_self_kerr * nq * (nq - MatrixXcd::Identity(n, n));
    if (dims.snail > 0)
        H += eff.cross_kerr * nq * (ops.s.adjoint() * ops.s);
    const cplx phase = std::polar(1.0, eff.drive_phase);
    const MatrixXcd coupling = std::conj(phase) * ops.q * ops.m.adjoint();
    H += eff.g_eff * (coupling + MatrixXcd(coupling.adjoint()));
    return H;
}

double max_step(const MatrixXcd &H, const Dissipation &rates)
{
    const double h_norm =
        Eigen::SelfAdjointEigenSolver<MatrixXcd>(0.5 * (H + H.adjoint()), Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
    const double scale = std::max(h_norm, rates.max_rate());
    return scale > 0.0 ? 0.01 / scale : std::numeric_limits<double>::infinity();
}

DensityMatrix evolve(const DensityMatrix &rho0, const MatrixXcd &H, const Dissipation &rates, double t, double dt,
                     const Observer &observer)
{
    const Dims &dims = rho0.dims();
    require(H.rows() == dims.total() && H.cols() == dims.total(), "Hamiltonian size does not match the state");
    require(t >= 0.0 && dt > 0.0, "need t >= 0 and dt > 0");
    require(std::abs(rho0.trace() - 1.0) <= 1e-9, "initial state must have unit trace");
    const double limit = max_step(H, rates);
    if (dt > limit)
        throw Error(Errc::step_too_large, "dt exceeds 0.01 / max(||H||, rate) = " + std::to_string(limit) + " s");

    const Lindblad lb = make_lindblad(dims, H, rates);
    const long steps = t == 0.0 ? 0 : static_cast<long>(std::ceil(t / dt - 1e-9));
    const double h = steps > 0 ? t / static_cast<double>(steps) : 0.0;

    MatrixXcd rho = rho0.matrix();
    if (observer)
        observer(0.0, rho0);
    for (long k = 0; k < steps; ++k) {
        const MatrixXcd k1 = lb.rhs(rho);
        const MatrixXcd k2 = lb.rhs(rho + 0.5 * h * k1);
        const MatrixXcd k3 = lb.rhs(rho + 0.5 * h * k2);
        const MatrixXcd k4 = lb.rhs(rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (observer)
            observer(h * static_cast<double>(k + 1), DensityMatrix(dims, rho));
    }
    return DensityMatrix(dims, rho);
}

double converged_step(const DensityMatrix &rho0, const MatrixXcd &H, const Dissipation &rates, double t, double tol)
{
    double dt = max_step(H, rates);
    if (!std::isfinite(dt) || dt > t)
        dt = t > 0.0 ? t : 1.0;
    if (t == 0.0)
        return dt;
    MatrixXcd coarse = evolve(rho0, H, rates, t, dt).matrix();
    for (int i = 0; i < 30; ++i) {
        const MatrixXcd fine = evolve(rho0, H, rates, t, 0.5 * dt).matrix();
        if ((fine - coarse).cwiseAbs().maxCoeff() < tol)
            return dt;
        dt *= 0.5;
        coarse = fine;
    }
    throw Error(Errc::step_too_large, "step halving did not converge");
}

double state_fidelity(const MatrixXcd &rho, const MatrixXcd &sigma)
{
    require(rho.rows() == sigma.rows() && rho.cols() == sigma.cols(), "state sizes differ");
    auto psd_sqrt = [](const MatrixXcd &m) {
        const Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (m + m.adjoint()));
        const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return MatrixXcd(es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint());
    };
    const MatrixXcd s = psd_sqrt(sigma);
    const MatrixXcd inner = s * rho * s;
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXcd>(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly)
                                   .eigenvalues()
                                   .cwiseMax(0.0);
    const double root_trace = ev.cwiseSqrt().sum();
    return root_trace * root_trace;
}

IswapResult iswap(const TriModeSystem &sys, const DriveSpec &drive, const DensityMatrix &rho0, const IswapOptions &options)
{
    const Dims &dims = options.dims;
    dims.validate();
    require(rho0.dims().qubit == dims.qubit && rho0.dims().mech == dims.mech && rho0.dims().snail == dims.snail,
            "initial state dims differ from the gate dims");
    rho0.validate();

    // Write starts with empty mechanics, read with the qubit in |g>.
    double wrong = 0.0;
    const int ds = dims.snail > 0 ? dims.snail : 1;
    for (int nq = 0; nq < dims.qubit; ++nq)
        for (int nm = 0; nm < dims.mech; ++nm)
            for (int ns = 0; ns < ds; ++ns)
                if (options.kind == GateKind::write ? nm > 0 : nq > 0)
                    wrong += rho0.population(nq, nm, ns);
    require(wrong < 1e-9, options.kind == GateKind::write ? "write gate needs the mechanics in |0>"
                                                         : "read gate needs the qubit in |g>");

    EffectiveHamiltonian eff = effective_coupling(sys, drive);
    eff.drive_phase = options.kind == GateKind::write ? std::numbers::pi : 0.0;
    if (!options.include_cross_kerr)
        eff.cross_kerr = 0.0;
    const MatrixXcd H = build_rwa_hamiltonian(eff, dims);

    Dissipation rates;
    if (options.dissipation) {
        const DressedSystem d = dress(sys);
        rates.qubit_decay = sys.qubit.decay_rate;
        rates.qubit_dephasing = sys.qubit.dephasing_rate;
        rates.mech_decay = hybridized_decay(sys.mech.decay_rate, d.lambda_sm, sys.snail.decay_rate);
        rates.mech_dephasing = sys.mech.dephasing_rate;
        // An eliminated SNAIL acts only through the hybridized mechanical decay;
        // its own rate would just shrink the step limit.
        if (dims.snail > 0)
            rates.snail_decay = sys.snail.decay_rate;
    }

    IswapResult out;
    out.g_eff = eff.g_eff;
    const double t_transfer = eff.g_eff > 0.0 ? 1.0 / (4.0 * eff.g_eff) : 0.0;
    out.duration = options.duration ? *options.duration : (drive.duration > 0.0 ? drive.duration : t_transfer);
    require(out.duration >= 0.0, "gate duration must be >= 0");

    const Observer record = [&](double t, const DensityMatrix &rho) {
        const MatrixXcd U = unitary(H, t);
        out.t.push_back(t);
        out.pop_e0.push_back(rho.population(1, 0));
        out.pop_g1.push_back(rho.population(0, 1));
        out.fidelity_trace.push_back(state_fidelity(rho.matrix(), U * rho0.matrix() * U.adjoint()));
    };
    if (out.duration == 0.0) {
        out.final_state = rho0;
        record(0.0, rho0);
    } else {
        out.dt = converged_step(rho0, H, rates, out.duration);
        out.final_state = evolve(rho0, H, rates, out.duration, out.dt, record);
    }

    if (t_transfer > 0.0) {
        // Run past the expected transfer so the maximum is bracketed.
        std::vector<double> ts, target;
        const double dt = out.dt > 0.0 ? out.dt : converged_step(rho0, H, rates, t_transfer);
        evolve(rho0, H, rates, 1.5 * t_transfer, std::min(dt, t_transfer / 200.0), [&](double t, const DensityMatrix &rho) {
            ts.push_back(t);
            target.push_back(options.kind == GateKind::write ? rho.population(0, 1) : rho.population(1, 0));
        });
        out.first_transfer_time = first_maximum(ts, target);
    }

    const DensityMatrix &rf = out.final_state;
    out.populations = {rf.population(0, 0), rf.population(0, 1), rf.population(1, 0), rf.population(1, 1)};
    out.fidelity = out.fidelity_trace.back();
    return out;
}

} // namespace qmem::qdyn
