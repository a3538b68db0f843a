#include "qmem/loss_models.hpp"

#include <cmath>

#include "qmem/csv.hpp"
#include "qmem/least_squares.hpp"

namespace qmem::loss
{

namespace
{

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate_channel(const Channel &ch)
{
    std::visit(overloaded{
                   [](const ZenerChannel &z) {
                       require(z.delta > 0.0 && z.tau0 > 0.0 && z.activation_temp >= 0.0,
                               "Zener channel needs delta > 0, tau0 > 0, activation_temp >= 0");
                   },
                   [](const PowerLawChannel &p) { require(p.coefficient > 0.0, "power-law coefficient must be > 0"); },
                   [](const ConstantChannel &c) { require(c.q_value > 0.0, "constant channel Q must be > 0"); },
               },
               ch);
}

// Free-parameter vector <-> stack.
Eigen::VectorXd pack(const LossStack &stack)
{
    std::vector<double> p;
    for (const auto &ch : stack.channels) {
        std::visit(overloaded{
                       [&](const ZenerChannel &z) {
                           p.push_back(std::log(z.delta));
                           p.push_back(std::log(z.tau0));
                           p.push_back(z.activation_temp);
                       },
                       [&](const PowerLawChannel &pl) {
                           p.push_back(std::log(pl.coefficient));
                           p.push_back(pl.exponent);
                       },
                       [&](const ConstantChannel &c) { p.push_back(std::log(c.q_value)); },
                   },
                   ch);
    }
    return Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

LossStack unpack(const LossStack &shape, const Eigen::VectorXd &p)
{
    LossStack out = shape;
    Eigen::Index k = 0;
    for (auto &ch : out.channels) {
        std::visit(overloaded{
                       [&](ZenerChannel &z) {
                           z.delta = std::exp(p[k++]);
                           z.tau0 = std::exp(p[k++]);
                           z.activation_temp = p[k++];
                       },
                       [&](PowerLawChannel &pl) {
                           pl.coefficient = std::exp(p[k++]);
                           pl.exponent = p[k++];
                       },
                       [&](ConstantChannel &c) { c.q_value = std::exp(p[k++]); },
                   },
                   ch);
    }
    return out;
}

std::vector<std::string> parameter_names(const LossStack &stack)
{
    std::vector<std::string> names;
    for (std::size_t i = 0; i < stack.channels.size(); ++i) {
        const std::string prefix = "channel" + std::to_string(i) + ".";
        std::visit(overloaded{
                       [&](const ZenerChannel &) {
                           names.push_back(prefix + "delta");
                           names.push_back(prefix + "tau0_s");
                           names.push_back(prefix + "activation_temp_K");
                       },
                       [&](const PowerLawChannel &) {
                           names.push_back(prefix + "coefficient");
                           names.push_back(prefix + "exponent");
                       },
                       [&](const ConstantChannel &) { names.push_back(prefix + "Q"); },
                   },
                   stack.channels[i]);
    }
    return names;
}

// Sum of Q^-1 without the validity checks; used inside the optimiser where
// intermediate parameters are always positive by construction.
double q_inverse_unchecked(const LossStack &stack, double omega, double T)
{
    double sum = 0.0;
    for (const auto &ch : stack.channels) {
        sum += std::visit(overloaded{
                              [&](const ZenerChannel &z) {
                                  const double wt = omega * z.tau0 * std::exp(z.activation_temp / T);
                                  return z.delta * wt / (1.0 + wt * wt);
                              },
                              [&](const PowerLawChannel &pl) { return pl.coefficient * std::pow(T, pl.exponent); },
                              [&](const ConstantChannel &c) { return 1.0 / c.q_value; },
                          },
                          ch);
    }
    return sum;
}

} // namespace

double ZenerChannel::tau(Temperature T) const
{
    require(T.kelvin() > 0.0, "Zener channel needs T > 0");
    return tau0 * std::exp(activation_temp / T.kelvin());
}

void LossStack::validate() const
{
    require(!channels.empty(), "loss stack must not be empty");
    for (const auto &ch : channels)
        validate_channel(ch);
}

std::size_t LossStack::parameter_count() const
{
    std::size_t n = 0;
    for (const auto &ch : channels)
        n += std::visit(overloaded{
                            [](const ZenerChannel &) { return std::size_t{3}; },
                            [](const PowerLawChannel &) { return std::size_t{2}; },
                            [](const ConstantChannel &) { return std::size_t{1}; },
                        },
                        ch);
    return n;
}

void QvsTDataset::validate() const
{
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto &p = points[i];
        require(p.temperature > 0.0 && p.q > 0.0 && p.sigma_q > 0.0, "Q-vs-T points need T, Q, sigma_Q > 0");
        if (i > 0)
            require(p.temperature > points[i - 1].temperature, "temperatures must be strictly increasing");
    }
}

double zener_q_inverse(const ZenerChannel &ch, Frequency f, Temperature T)
{
    validate_channel(ch);
    const double wt = f.angular() * ch.tau(T);
    if (std::isinf(wt))
        return 0.0;
    return ch.delta * wt / (1.0 + wt * wt);
}

double landau_rumer_q_inverse(const PowerLawChannel &ch, Temperature T)
{
    validate_channel(ch);
    if (T.kelvin() == 0.0)
        return 0.0;
    return ch.coefficient * std::pow(T.kelvin(), ch.exponent);
}

double channel_q_inverse(const Channel &ch, Frequency f, Temperature T)
{
    return std::visit(overloaded{
                          [&](const ZenerChannel &z) { return zener_q_inverse(z, f, T); },
                          [&](const PowerLawChannel &p) { return landau_rumer_q_inverse(p, T); },
                          [&](const ConstantChannel &c) {
                              validate_channel(c);
                              return 1.0 / c.q_value;
                          },
                      },
                      ch);
}

double total_q(const LossStack &stack, Frequency f, Temperature T)
{
    stack.validate();
    double sum = 0.0;
    for (const auto &ch : stack.channels)
        sum += channel_q_inverse(ch, f, T);
    return 1.0 / sum;
}

LossFit fit_loss_stack(const QvsTDataset &data, Frequency f, const LossStack &initial_guess)
{
    data.validate();
    initial_guess.validate();
    const std::size_t n_params = initial_guess.parameter_count();
    require(data.points.size() >= 2 * n_params, "need at least twice as many data points as free parameters");

    const double omega = f.angular();
    const auto n = static_cast<int>(data.points.size());
    lsq::ResidualFn residuals = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
        const LossStack stack = unpack(initial_guess, p);
        for (int i = 0; i < n; ++i) {
            const auto &pt = data.points[i];
            const double model = q_inverse_unchecked(stack, omega, pt.temperature);
            // d(log Q^-1) = d(log Q); sigma of log Q is sigma_Q / Q.
            r[i] = (std::log(model) + std::log(pt.q)) / (pt.sigma_q / pt.q);
        }
    };

    const lsq::Result result = lsq::minimize(residuals, n, pack(initial_guess));

    LossFit fit;
    fit.stack = unpack(initial_guess, result.params);
    try {
        fit.stack.validate();
    } catch (const Error &) {
        throw Error(Errc::fit_did_not_converge, "loss fit wandered out of the physical parameter range");
    }
    fit.residual_norm = result.residual_norm;
    fit.parameter_names = parameter_names(initial_guess);
    // Map log-space sigmas back to linear parameters where applicable.
    const Eigen::VectorXd sigma = result.covariance.diagonal().cwiseSqrt();
    Eigen::Index k = 0;
    for (const auto &ch : fit.stack.channels) {
        std::visit(overloaded{
                       [&](const ZenerChannel &z) {
                           fit.uncertainties.push_back(z.delta * sigma[k++]);
                           fit.uncertainties.push_back(z.tau0 * sigma[k++]);
                           fit.uncertainties.push_back(sigma[k++]);
                       },
                       [&](const PowerLawChannel &pl) {
                           fit.uncertainties.push_back(pl.coefficient * sigma[k++]);
                           fit.uncertainties.push_back(sigma[k++]);
                       },
                       [&](const ConstantChannel &c) { fit.uncertainties.push_back(c.q_value * sigma[k++]); },
                   },
                   ch);
    }
    return fit;
}

QvsTDataset read_qvt_csv(std::istream &in)
{
    const csv::Table table = csv::read(in, {"T_K", "Q", "sigma_Q"});
    QvsTDataset data;
    for (const auto &row : table.rows)
        data.points.push_back({row[0], row[1], row[2]});
    data.validate();
    return data;
}

} // namespace qmem::loss
