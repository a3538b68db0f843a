#pragma once

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qmem/core.hpp"

namespace qmem::qdyn
{

// All frequencies and couplings are ordinary frequencies (Hz); rates are 1/s.
struct ModeParams
{
    double frequency = 0.0;
    double decay_rate = 0.0;
    double anharmonicity = 0.0;   // E_C/h for the qubit, 0 for linear modes
    double dephasing_rate = 0.0;

    void validate() const;
};

struct TriModeSystem
{
    ModeParams qubit, snail, mech;
    double g_qs = 0.0;
    double g_sm = 0.0;
    double g3 = 0.0;   // SNAIL three-wave mixing strength

    void validate() const;
};

struct DressedSystem
{
    double lambda_qs = 0.0;   // g_qs / (f_q - f_s)
    double lambda_sm = 0.0;   // g_sm / (f_s - f_m)
    double f_q = 0.0, f_s = 0.0, f_m = 0.0;
};

struct DriveSpec
{
    double drive_frequency = 0.0;     // Hz
    std::optional<double> epsilon;    // Hz, drive amplitude
    std::optional<double> n_s;        // target SNAIL photon number
    double phase = 0.0;               // rad
    double duration = 0.0;            // s, 0 = choose automatically where supported

    void validate() const;
};

struct EffectiveHamiltonian
{
    double g_eff = 0.0;             // Hz, >= 0
    double drive_phase = 0.0;       // rad
    double cross_kerr = 0.0;        // Hz, chi_qs
    double qubit_self_kerr = 0.0;   // Hz, anharmonicity alpha = -E_C/h
};

// Tensor order qubit x mech x snail. snail == 0 eliminates the SNAIL.
struct Dims
{
    int qubit = 2;
    int mech = 5;
    int snail = 0;

    void validate() const;
    int total() const { return qubit * mech * (snail > 0 ? snail : 1); }
    int index(int nq, int nm, int ns = 0) const;
};

class DensityMatrix
{
public:
    DensityMatrix() = default;
    DensityMatrix(Dims dims, Eigen::MatrixXcd rho);

    // Pure Fock product state |nq, nm(, ns)>.
    static DensityMatrix basis(Dims dims, int nq, int nm, int ns = 0);

    const Dims &dims() const { return dims_; }
    const Eigen::MatrixXcd &matrix() const { return rho_; }

    double population(int nq, int nm, int ns = 0) const;
    double trace() const;
    double purity() const;
    double hermiticity_error() const;   // max |rho - rho^dagger|
    double min_eigenvalue() const;

    // Throws invalid_argument when Hermiticity (1e-10), trace (1e-9) or
    // positivity (-1e-9) fail.
    void validate() const;

private:
    Dims dims_;
    Eigen::MatrixXcd rho_;
};

// Rates for the Lindblad dissipators. Lowering-operator decay per mode and
// pure dephasing L = sqrt(2 gamma_phi) n.
struct Dissipation
{
    double qubit_decay = 0.0;
    double qubit_dephasing = 0.0;
    double mech_decay = 0.0;
    double mech_dephasing = 0.0;
    double snail_decay = 0.0;

    double max_rate() const;
};

DressedSystem dress(const TriModeSystem &sys);

// Eigenvalues of [[f_q, g_qs, 0], [g_qs, f_s, g_sm], [0, g_sm, f_m]], descending.
std::array<double, 3> exact_normal_modes(const TriModeSystem &sys);

// Gamma'_m = Gamma_m + lambda_sm^2 Gamma_s.
double hybridized_decay(double gamma_m, double lambda_sm, double gamma_s);

// eta = 2 f_d eps / (f_s^2 - f_d^2) e^{i phase}, or sqrt(n_s) e^{i phase}.
std::complex<double> effective_eta(const DriveSpec &drive, double f_s);

// g_eff = |6 g3 lambda_qs lambda_sm eta|; the sign and arg(eta) go into drive_phase.
double effective_coupling_rate(double g3, double lambda_qs, double lambda_sm, double eta_magnitude);

// Requires the drive within 10 g_eff of the dressed difference |f'_q - f'_m|.
EffectiveHamiltonian effective_coupling(const TriModeSystem &sys, const DriveSpec &drive);

// H/h in Hz, rotating frame: (alpha/2) nq(nq-1) + chi nq ns
// + g_eff (q m^dag e^{-i phi} + q^dag m e^{i phi}).
Eigen::MatrixXcd build_rwa_hamiltonian(const EffectiveHamiltonian &eff, const Dims &dims);

// Largest admissible step: 0.01 / max(||H||, max rate).
double max_step(const Eigen::MatrixXcd &H, const Dissipation &rates);

using Observer = std::function<void(double t, const DensityMatrix &rho)>;

// Fixed-step RK4 on the Lindblad equation. The step is shrunk to t / ceil(t / dt).
// Throws Error(step_too_large) when dt > max_step. Observer sees t = 0 and every step.
DensityMatrix evolve(const DensityMatrix &rho0, const Eigen::MatrixXcd &H, const Dissipation &rates, double t, double dt,
                     const Observer &observer = {});

// Halves dt from max_step until the final states at dt and dt/2 differ by < tol.
double converged_step(const DensityMatrix &rho0, const Eigen::MatrixXcd &H, const Dissipation &rates, double t,
                      double tol = 1e-8);

// Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2.
double state_fidelity(const Eigen::MatrixXcd &rho, const Eigen::MatrixXcd &sigma);

enum class GateKind
{
    write,   // qubit -> mechanics, phi_d = pi
    read,    // mechanics -> qubit, phi_d = 0
};

struct IswapOptions
{
    GateKind kind = GateKind::write;
    Dims dims{};
    bool dissipation = true;
    bool include_cross_kerr = false;
    std::optional<double> duration;   // s, overrides the drive; 0 leaves the state unchanged
};

struct IswapResult
{
    DensityMatrix final_state;
    double duration = 0.0;              // s
    double g_eff = 0.0;                 // Hz
    double first_transfer_time = 0.0;   // s, first maximum of the transferred population; 0 if none
    double dt = 0.0;
    std::array<double, 4> populations{};   // |g0>, |g1>, |e0>, |e1>
    double fidelity = 0.0;                 // vs the dissipation-free evolution
    std::vector<double> t, pop_e0, pop_g1, fidelity_trace;
};

// Duration: options.duration if set, else drive.duration when > 0, else the
// ideal transfer time 1/(4 g_eff).
IswapResult iswap(const TriModeSystem &sys, const DriveSpec &drive, const DensityMatrix &rho0,
                  const IswapOptions &options = {});

} // namespace qmem::qdyn
