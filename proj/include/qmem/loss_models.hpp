#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "qmem/core.hpp"

namespace qmem::loss
{

// Debye relaxation with an Arrhenius bath time tau(T) = tau0 * exp(activation_temp / T).
struct ZenerChannel
{
    double delta = 0.0;            // relaxation strength
    double tau0 = 0.0;             // s
    double activation_temp = 0.0;  // K

    double tau(Temperature T) const;
};

// Q^-1 = B * T^n (Landau-Rumer regime for n ~ 4).
struct PowerLawChannel
{
    double coefficient = 0.0;
    double exponent = 4.0;
};

// Temperature-independent floor (gas, anchor, electrode, ...).
struct ConstantChannel
{
    double q_value = 0.0;
};

using Channel = std::variant<ZenerChannel, PowerLawChannel, ConstantChannel>;

struct LossStack
{
    std::vector<Channel> channels;

    void validate() const;
    std::size_t parameter_count() const;
};

struct QvsTPoint
{
    double temperature = 0.0;   // K
    double q = 0.0;
    double sigma_q = 0.0;
};

struct QvsTDataset
{
    std::vector<QvsTPoint> points;

    void validate() const;
};

struct LossFit
{
    LossStack stack;
    // One entry per free parameter, in channel order: Zener (delta, tau0,
    // activation_temp), power law (coefficient, exponent), constant (q_value).
    std::vector<double> uncertainties;
    std::vector<std::string> parameter_names;
    double residual_norm = 0.0;   // weighted, on log Q^-1
};

double zener_q_inverse(const ZenerChannel &ch, Frequency f, Temperature T);
double landau_rumer_q_inverse(const PowerLawChannel &ch, Temperature T);
double channel_q_inverse(const Channel &ch, Frequency f, Temperature T);

// Q = (sum_i Q_i^-1)^-1.
double total_q(const LossStack &stack, Frequency f, Temperature T);

// Weighted nonlinear least squares on log Q^-1 (weights from sigma_Q / Q).
// Parameters are optimised in log space except the activation temperature
// and power-law exponent. Needs at least twice as many points as parameters.
LossFit fit_loss_stack(const QvsTDataset &data, Frequency f, const LossStack &initial_guess);

// CSV with header `T_K,Q,sigma_Q`.
QvsTDataset read_qvt_csv(std::istream &in);

} // namespace qmem::loss
