#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "qmem/analysis.hpp"
#include "qmem/csv.hpp"
#include "qmem/duffing.hpp"
#include "qmem/electromech.hpp"
#include "qmem/log.hpp"
#include "qmem/loss_models.hpp"
#include "qmem/phonon_chain.hpp"
#include "qmem/photoelastic.hpp"
#include "qmem/qdyn.hpp"

namespace qmem::cli
{

namespace
{

using cplx = std::complex<double>;

// Tabular output: header plus numeric (or pre-formatted) cells.
struct Table
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(const std::vector<double> &values)
    {
        std::vector<std::string> row;
        row.reserve(values.size());
        for (double v : values)
            row.push_back(csv::format_number(v));
        rows.push_back(std::move(row));
    }

    void write(std::ostream &out) const
    {
        csv::write_header(out, header);
        for (const auto &row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << row[i];
            out << '\n';
        }
    }
};

struct Output
{
    json summary = json::object();
    std::optional<Table> table;
};

struct Globals
{
    std::string config_path;
    std::string out_path;
    std::string format = "json";
    std::uint64_t seed = 0;
};

// IO / usage failures map to exit code 2.
struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

Config load_config(const Globals &g)
{
    return g.config_path.empty() ? Config::empty() : Config::load(g.config_path);
}

std::ifstream open_input(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open input file " + path);
    return in;
}

// Summary rendered as `quantity,value` rows for --format csv on scalar-only commands.
Table scalar_table(const json &summary)
{
    Table t{{"quantity", "value"}, {}};
    for (const auto &[key, value] : summary.items())
        if (value.is_number())
            t.rows.push_back({key, csv::format_number(value.get<double>())});
    return t;
}

// ---- config -> domain objects -------------------------------------------

em::BvdParams read_bvd(const Node &n)
{
    em::BvdParams p{n.number("C0_F"), n.number("Cm_F"), n.number("Lm_H"), n.number_or("Rm_Ohm", 0.0)};
    p.validate();
    return p;
}

em::ShuntCircuit read_shunt(const Node &n)
{
    const double Cr = n.number("Cr_F");
    const auto Lr = n.opt_number("Lr_H");
    const auto fr = n.opt_number("f_r_Hz");
    if (Lr && fr)
        return em::ShuntCircuit::from_both(Cr, *Lr, *fr);
    if (Lr)
        return em::ShuntCircuit::from_inductance(Cr, *Lr);
    if (fr)
        return em::ShuntCircuit::from_frequency(Cr, *fr);
    throw ConfigError(n.pointer(), "one of Lr_H or f_r_Hz is required");
}

qdyn::ModeParams read_mode(const Node &n, std::optional<double> default_frequency = {})
{
    qdyn::ModeParams m;
    if (auto f = n.opt_number("f_Hz"))
        m.frequency = *f;
    else if (default_frequency)
        m.frequency = *default_frequency;
    else
        throw ConfigError(n.pointer() + "/f_Hz", "required value missing");
    m.decay_rate = n.number_or("decay_rate_per_s", 0.0);
    m.dephasing_rate = n.number_or("dephasing_rate_per_s", 0.0);
    m.anharmonicity = n.number_or("anharmonicity_Hz", 0.0);
    return m;
}

struct CouplingChain
{
    em::BvdParams bvd;
    em::ShuntCircuit shunt;
    em::CouplingRate g_sm;
    qdyn::TriModeSystem sys;
    qdyn::DressedSystem dressed;
    qdyn::DriveSpec drive;
    bool drive_frequency_defaulted = false;
};

// bvd + shunt fix the SNAIL frequency and g_sm; system supplies the qubit and g3.
CouplingChain build_chain(const Config &cfg, int defects)
{
    const Node bvd_node = cfg.require_section("bvd");
    const Node shunt_node = cfg.require_section("shunt");
    const Node sys_node = cfg.require_section("system");
    const Node drive_node = cfg.require_section("drive");

    em::BvdParams bvd = read_bvd(bvd_node);
    if (defects != 1)
        bvd = em::scale_defects(bvd, em::DefectArraySpec{defects});
    const em::ShuntCircuit shunt = read_shunt(shunt_node);

    qdyn::TriModeSystem sys;
    sys.qubit = read_mode(sys_node.child("qubit"));
    const auto snail_node = sys_node.opt_child("snail");
    const auto mech_node = sys_node.opt_child("mech");
    sys.snail = snail_node ? read_mode(*snail_node, shunt.f_r()) : qdyn::ModeParams{shunt.f_r(), 0, 0, 0};
    const double f_s_bvd = bvd.series_resonance();
    sys.mech = mech_node ? read_mode(*mech_node, f_s_bvd) : qdyn::ModeParams{f_s_bvd, 0, 0, 0};

    const em::CouplingRate g_sm = em::coupling_rate_gsm(bvd, shunt, Frequency(sys.mech.frequency));
    sys.g_sm = sys_node.number_or("g_sm_Hz", g_sm.g_hz);
    if (auto g = sys_node.opt_number("g_qs_Hz"))
        sys.g_qs = *g;
    else if (auto lam = sys_node.opt_number("lambda_qs"))
        sys.g_qs = *lam * (sys.qubit.frequency - sys.snail.frequency);
    else
        throw ConfigError(sys_node.pointer(), "one of g_qs_Hz or lambda_qs is required");
    sys.g_qs = std::abs(sys.g_qs);
    sys.g3 = sys_node.number("g3_Hz");
    sys.validate();

    const qdyn::DressedSystem dressed = qdyn::dress(sys);

    qdyn::DriveSpec drive;
    const auto fd = drive_node.opt_number("f_d_Hz");
    drive.drive_frequency = fd.value_or(std::abs(dressed.f_q - dressed.f_m));
    drive.n_s = drive_node.opt_number("n_s");
    drive.epsilon = drive_node.opt_number("epsilon_Hz");
    drive.phase = drive_node.number_or("phase_rad", 0.0);
    drive.duration = drive_node.number_or("duration_s", 0.0);
    if (drive.n_s.has_value() == drive.epsilon.has_value())
        throw ConfigError(drive_node.pointer(), "exactly one of n_s or epsilon_Hz is required");
    drive.validate();

    return {bvd, shunt, g_sm, sys, dressed, drive, !fd.has_value()};
}

chain::Segment read_segment(const Node &n)
{
    chain::Segment s{n.number("length_m"), n.number("sound_speed_m_per_s"), n.number("impedance")};
    s.validate();
    return s;
}

chain::UnitCell read_cell(const Node &n) { return {read_segment(n.child("narrow")), read_segment(n.child("wide"))}; }

struct ChainConfig
{
    chain::ChainSpec spec;
    double f_min = 50e6;
    double f_max = 150e6;
};

// Missing pieces fall back to the calibrated reference cell.
ChainConfig read_chain(const Config &cfg)
{
    ChainConfig cc;
    const auto node = cfg.section("chain");
    const int mirrors = node ? node->opt_integer("mirror_cells_per_side").value_or(5) : 5;
    const double extra = node ? node->number_or("defect_extra_m", 0.0) : 0.0;
    cc.spec = chain::calibrated_chain(mirrors, extra);
    if (node) {
        if (auto c = node->opt_child("mirror_cell"))
            cc.spec.mirror_cell = read_cell(*c);
        if (auto c = node->opt_child("defect_cell"))
            cc.spec.defect_cell = read_cell(*c);
        if (auto z = node->opt_number("termination_impedance"))
            cc.spec.termination_impedance = *z;
        cc.f_min = node->number_or("f_min_Hz", cc.f_min);
        cc.f_max = node->number_or("f_max_Hz", cc.f_max);
    }
    require(cc.f_min > 0.0 && cc.f_max > cc.f_min, "chain scan needs 0 < f_min_Hz < f_max_Hz");
    cc.spec.validate();
    return cc;
}

pe::OpticalConfig read_optics(const std::optional<Node> &n)
{
    pe::OpticalConfig c;
    if (!n)
        return c;
    c.wavelength = n->number_or("wavelength_m", c.wavelength);
    c.n_o = n->number_or("n_o", c.n_o);
    c.n_e = n->number_or("n_e", c.n_e);
    c.plate_thickness = n->number_or("thickness_m", c.plate_thickness);
    c.polarization_angle = n->number_or("polarization_rad", c.polarization_angle);
    c.c1 = n->opt_number("c1");
    c.c2 = n->opt_number("c2");
    c.validate();
    return c;
}

struct DuffingConfig
{
    duffing::DuffingParams p;
    double f_lo = 0.0, f_hi = 0.0;
    int points = 2001;
    std::vector<double> drive_levels;
};

DuffingConfig read_duffing(const Config &cfg)
{
    const Node n = cfg.require_section("duffing");
    DuffingConfig d;
    d.p = {n.number("f0_Hz"), n.number("Q"), n.number("beta"), n.number("drive")};
    d.p.validate();
    const double span = 10.0 * d.p.f0 / d.p.Q;
    d.f_lo = n.number_or("f_lo_Hz", d.p.f0 - span);
    d.f_hi = n.number_or("f_hi_Hz", d.p.f0 + span);
    d.points = n.opt_integer("points").value_or(d.points);
    if (n.has("drive_levels")) {
        const json &levels = n.raw("drive_levels");
        if (!levels.is_array())
            throw ConfigError(n.pointer() + "/drive_levels", "expected an array of numbers");
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (!levels[i].is_number())
                throw ConfigError(n.pointer() + "/drive_levels/" + std::to_string(i), "expected a number");
            d.drive_levels.push_back(levels[i].get<double>());
        }
    }
    return d;
}

struct LossConfig
{
    double f_hz = 0.0;
    loss::LossStack stack;
};

LossConfig read_losses(const Config &cfg)
{
    const Node n = cfg.require_section("losses");
    LossConfig lc;
    lc.f_hz = n.number("f_Hz");
    const json &channels = n.raw("channels");
    const std::string ptr = n.pointer() + "/channels";
    if (!channels.is_array() || channels.empty())
        throw ConfigError(ptr, "expected a non-empty array of channels");
    for (std::size_t i = 0; i < channels.size(); ++i) {
        const Node c(channels[i], ptr + "/" + std::to_string(i));
        const std::string type = c.string("type");
        if (type == "zener")
            lc.stack.channels.emplace_back(
                loss::ZenerChannel{c.number("delta"), c.number("tau0_s"), c.number_or("activation_temp_K", 0.0)});
        else if (type == "power_law")
            lc.stack.channels.emplace_back(loss::PowerLawChannel{c.number("coefficient"), c.number_or("exponent", 4.0)});
        else if (type == "constant")
            lc.stack.channels.emplace_back(loss::ConstantChannel{c.number("Q")});
        else
            throw ConfigError(c.pointer() + "/type", "expected zener, power_law or constant");
    }
    lc.stack.validate();
    return lc;
}

json complex_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

// ---- subcommands ---------------------------------------------------------

Output cmd_couple(const Globals &g, int defects)
{
    const CouplingChain c = build_chain(load_config(g), defects);
    const qdyn::EffectiveHamiltonian eff = qdyn::effective_coupling(c.sys, c.drive);
    const cplx eta = qdyn::effective_eta(c.drive, c.sys.snail.frequency);
    const double gamma_m_prime =
        qdyn::hybridized_decay(c.sys.mech.decay_rate, c.dressed.lambda_sm, c.sys.snail.decay_rate);

    Output o;
    json &s = o.summary;
    s["defects"] = defects;
    s["C0_F"] = c.bvd.C0;
    s["Cm_F"] = c.bvd.Cm;
    s["Lm_H"] = c.bvd.Lm;
    s["f_series_Hz"] = c.bvd.series_resonance();
    s["f_parallel_Hz"] = c.bvd.parallel_resonance();
    s["f_r_Hz"] = c.shunt.f_r();
    s["f_q_Hz"] = c.sys.qubit.frequency;
    s["f_s_Hz"] = c.sys.snail.frequency;
    s["f_m_Hz"] = c.sys.mech.frequency;
    s["g_sm_Hz"] = c.sys.g_sm;
    s["g_sm_approximation_valid"] = c.g_sm.approximation_valid;
    s["g_qs_Hz"] = c.sys.g_qs;
    s["g3_Hz"] = c.sys.g3;
    s["lambda_qs"] = c.dressed.lambda_qs;
    s["lambda_sm"] = c.dressed.lambda_sm;
    s["dressed_f_q_Hz"] = c.dressed.f_q;
    s["dressed_f_s_Hz"] = c.dressed.f_s;
    s["dressed_f_m_Hz"] = c.dressed.f_m;
    s["f_d_Hz"] = c.drive.drive_frequency;
    s["f_d_defaulted_to_difference"] = c.drive_frequency_defaulted;
    s["eta"] = complex_json(eta);
    s["eta_abs"] = std::abs(eta);
    s["g_eff_Hz"] = eff.g_eff;
    s["drive_phase_rad"] = eff.drive_phase;
    s["cross_kerr_Hz"] = eff.cross_kerr;
    s["qubit_self_kerr_Hz"] = eff.qubit_self_kerr;
    // Half a Rabi period of the exchange versus the first complete transfer.
    s["T_iswap_s"] = eff.g_eff > 0.0 ? 1.0 / (2.0 * eff.g_eff) : INFINITY;
    s["t_first_transfer_s"] = eff.g_eff > 0.0 ? 1.0 / (4.0 * eff.g_eff) : INFINITY;
    s["Gamma_m_prime"] = gamma_m_prime;
    s["mech_lifetime_s"] = gamma_m_prime > 0.0 ? 1.0 / gamma_m_prime : INFINITY;
    return o;
}

Output cmd_iswap(const Globals &g, bool dissipation, std::optional<double> duration, const std::string &gate)
{
    const CouplingChain c = build_chain(load_config(g), 1);
    qdyn::IswapOptions opts;
    opts.kind = gate == "read" ? qdyn::GateKind::read : qdyn::GateKind::write;
    opts.dissipation = dissipation;
    opts.duration = duration;
    // Write moves |e,0> into the mechanics; read moves |g,1> back.
    const auto rho0 = opts.kind == qdyn::GateKind::write ? qdyn::DensityMatrix::basis(opts.dims, 1, 0)
                                                        : qdyn::DensityMatrix::basis(opts.dims, 0, 1);
    const qdyn::IswapResult r = qdyn::iswap(c.sys, c.drive, rho0, opts);

    Output o;
    json &s = o.summary;
    s["gate"] = gate;
    s["dissipation"] = dissipation;
    s["g_eff_Hz"] = r.g_eff;
    s["duration_s"] = r.duration;
    s["first_transfer_time_s"] = r.first_transfer_time;
    s["dt_s"] = r.dt;
    s["populations"] = {{"g0", r.populations[0]}, {"g1", r.populations[1]}, {"e0", r.populations[2]},
                        {"e1", r.populations[3]}};
    s["final_fidelity"] = r.fidelity;
    std::vector<double> t_us(r.t.size());
    for (std::size_t i = 0; i < r.t.size(); ++i)
        t_us[i] = r.t[i] * 1e6;
    s["t_us"] = t_us;
    s["pop_e0"] = r.pop_e0;
    s["pop_g1"] = r.pop_g1;
    s["fidelity"] = r.fidelity_trace;

    Table t{{"t_us", "pop_e0", "pop_g1", "fidelity"}, {}};
    for (std::size_t i = 0; i < r.t.size(); ++i)
        t.add({t_us[i], r.pop_e0[i], r.pop_g1[i], r.fidelity_trace[i]});
    o.table = std::move(t);
    return o;
}

Output cmd_fit_lorentzian(const std::string &input, const std::string &mode_name)
{
    auto in = open_input(input);
    const analysis::FrequencyTraceFile file = analysis::read_frequency_trace_csv(in);
    analysis::LorentzianMode mode = mode_name == "complex" ? analysis::LorentzianMode::complex
                                                           : analysis::LorentzianMode::magnitude;
    require(mode == analysis::LorentzianMode::magnitude || file.has_phase,
            "complex mode needs an f_Hz,re,im trace");
    const analysis::ResonanceFit fit = analysis::fit_lorentzian(file.trace, mode);

    Output o;
    json &s = o.summary;
    s["mode"] = mode_name;
    s["f0_Hz"] = fit.f0;
    s["Q"] = fit.Q;
    s["linewidth_Hz"] = fit.linewidth;
    s["amplitude"] = fit.amplitude;
    s["phase_rad"] = fit.phase;
    s["background"] = complex_json(fit.background);
    s["sigma_f0_Hz"] = fit.sigma_f0;
    s["sigma_Q"] = fit.sigma_Q;
    s["sigma_amplitude"] = fit.sigma_amplitude;
    s["residual_norm"] = fit.residual_norm;
    s["tau_s"] = fit.Q / (constants::two_pi * fit.f0);

    Table t{{"f_Hz", "mag", "mag_fit"}, {}};
    for (std::size_t i = 0; i < file.trace.size(); ++i) {
        const double f = file.trace.frequencies[i];
        const cplx model =
            fit.background + std::polar(fit.amplitude, fit.phase) / cplx(1.0, 2.0 * (f - fit.f0) / fit.linewidth);
        t.add({f, std::abs(file.trace.response[i]), std::abs(model)});
    }
    o.table = std::move(t);
    return o;
}

Output cmd_ringdown(const std::string &input, std::optional<double> f_hz)
{
    auto in = open_input(input);
    const TimeTrace trace = analysis::read_time_trace_csv(in);
    const analysis::RingdownFit fit = analysis::fit_ringdown(trace);

    Output o;
    json &s = o.summary;
    s["tau_s"] = fit.tau;
    s["sigma_tau_s"] = fit.sigma_tau;
    s["initial_amplitude"] = fit.initial_amplitude;
    s["offset"] = fit.offset;
    s["residual_norm"] = fit.residual_norm;
    if (f_hz) {
        s["f_Hz"] = *f_hz;
        s["Q"] = analysis::quality_from_lifetime(Frequency(*f_hz), fit.tau);
    }

    Table t{{"t_s", "amp", "amp_fit"}, {}};
    for (std::size_t i = 0; i < trace.size(); ++i)
        t.add({trace.times[i], trace.amplitude[i],
               fit.offset + fit.initial_amplitude * std::exp(-trace.times[i] / fit.tau)});
    o.table = std::move(t);
    return o;
}

json channel_json(const loss::Channel &ch)
{
    if (const auto *z = std::get_if<loss::ZenerChannel>(&ch))
        return {{"type", "zener"}, {"delta", z->delta}, {"tau0_s", z->tau0}, {"activation_temp_K", z->activation_temp}};
    if (const auto *p = std::get_if<loss::PowerLawChannel>(&ch))
        return {{"type", "power_law"}, {"coefficient", p->coefficient}, {"exponent", p->exponent}};
    return {{"type", "constant"}, {"Q", std::get<loss::ConstantChannel>(ch).q_value}};
}

Output cmd_qvt(const Globals &g, const std::string &input)
{
    const LossConfig lc = read_losses(load_config(g));
    auto in = open_input(input);
    const loss::QvsTDataset data = loss::read_qvt_csv(in);
    const Frequency f(lc.f_hz);
    const loss::LossFit fit = loss::fit_loss_stack(data, f, lc.stack);

    Output o;
    json &s = o.summary;
    s["f_Hz"] = lc.f_hz;
    json channels = json::array();
    for (const auto &ch : fit.stack.channels)
        channels.push_back(channel_json(ch));
    s["channels"] = channels;
    json params = json::object();
    for (std::size_t i = 0; i < fit.parameter_names.size(); ++i)
        params[fit.parameter_names[i]] = {{"sigma", fit.uncertainties[i]}};
    s["uncertainties"] = params;
    s["residual_norm"] = fit.residual_norm;

    Table t{{"T_K", "Q", "Q_fit"}, {}};
    for (const auto &pt : data.points)
        t.add({pt.temperature, pt.q, loss::total_q(fit.stack, f, Temperature(pt.temperature))});
    o.table = std::move(t);
    return o;
}

Output cmd_bvd_fit(const std::string &input, bool fit_resistance)
{
    auto in = open_input(input);
    const FrequencyTrace trace = em::read_admittance_csv(in);
    const em::BvdFit fit = em::fit_bvd(trace, em::FitBvdOptions{fit_resistance});

    Output o;
    json &s = o.summary;
    s["C0_F"] = fit.params.C0;
    s["Cm_F"] = fit.params.Cm;
    s["Lm_H"] = fit.params.Lm;
    s["Rm_Ohm"] = fit.params.Rm;
    s["f_series_Hz"] = fit.params.series_resonance();
    s["f_parallel_Hz"] = fit.params.parallel_resonance();
    s["residual_norm"] = fit.residual_norm;

    Table t{{"f_Hz", "ReY_S", "ImY_S"}, {}};
    for (double f : trace.frequencies) {
        const cplx y = em::bvd_admittance(fit.params, Frequency(f));
        t.add({f, y.real(), y.imag()});
    }
    o.table = std::move(t);
    return o;
}

Output cmd_duffing_sweep(const Globals &g, const std::string &direction_name)
{
    const DuffingConfig d = read_duffing(load_config(g));
    const auto direction = direction_name == "backward" ? duffing::Direction::backward : duffing::Direction::forward;
    const duffing::SweepResult r = duffing::sweep(d.p, d.f_lo, d.f_hi, d.points, direction);

    Output o;
    json &s = o.summary;
    s["direction"] = direction_name;
    s["points"] = d.points;
    s["critical_drive"] = duffing::critical_drive(d.p);
    s["bistable"] = r.bistable_range.has_value();
    if (r.bistable_range)
        s["bistable_range_Hz"] = {r.bistable_range->first, r.bistable_range->second};
    s["hysteresis_area"] = duffing::hysteresis_area(d.p, d.f_lo, d.f_hi, d.points);
    std::size_t peak = 0;
    for (std::size_t i = 1; i < r.amplitudes.size(); ++i)
        if (r.amplitudes[i] > r.amplitudes[peak])
            peak = i;
    s["peak_amplitude"] = r.amplitudes[peak];
    s["peak_frequency_Hz"] = r.frequencies[peak];

    Table t{{"f_Hz", "amp", "branch"}, {}};
    for (std::size_t i = 0; i < r.frequencies.size(); ++i)
        t.rows.push_back({csv::format_number(r.frequencies[i]), csv::format_number(r.amplitudes[i]),
                          duffing::to_string(r.branches[i])});
    o.table = std::move(t);
    return o;
}

Output cmd_backbone(const Globals &g, const std::string &input)
{
    std::vector<duffing::BackbonePoint> points;
    std::vector<double> drives;
    if (!input.empty()) {
        auto in = open_input(input);
        const csv::Table tab = csv::read(in, std::vector<std::string>{"amp", "f_Hz"});
        for (const auto &row : tab.rows)
            points.push_back({row[0], row[1]});
    } else {
        const DuffingConfig d = read_duffing(load_config(g));
        require(!d.drive_levels.empty(), "backbone needs duffing.drive_levels or an input file");
        points = duffing::backbone(d.p, d.drive_levels);
        drives = d.drive_levels;
    }
    const duffing::BackboneFit fit = duffing::fit_backbone(points);

    Output o;
    json &s = o.summary;
    s["f0_Hz"] = fit.f0;
    s["A"] = fit.A;
    s["n"] = fit.n;
    s["sigma_f0_Hz"] = fit.sigma_f0;
    s["sigma_A"] = fit.sigma_A;
    s["sigma_n"] = fit.sigma_n;
    s["residual_norm_Hz"] = fit.residual_norm;
    json pts = json::array();
    for (const auto &p : points)
        pts.push_back({{"amp", p.amplitude}, {"f_Hz", p.frequency}});
    s["points"] = pts;

    Table t{{"amp", "f_Hz", "f_fit_Hz"}, {}};
    for (const auto &p : points)
        t.add({p.amplitude, p.frequency, fit.f0 + fit.A * std::pow(p.amplitude, fit.n)});
    o.table = std::move(t);
    return o;
}

// Widest gap in the scan window.
std::optional<chain::BandGap> primary_gap(const std::vector<chain::BandGap> &gaps)
{
    if (gaps.empty())
        return std::nullopt;
    auto best = gaps.front();
    for (const auto &gp : gaps)
        if (gp.width() > best.width())
            best = gp;
    return best;
}

Output cmd_bandgap(const Globals &g)
{
    const ChainConfig cc = read_chain(load_config(g));
    const double resolution = (cc.f_max - cc.f_min) / 20000.0;
    const auto gaps = chain::find_band_gaps(cc.spec.mirror_cell, cc.f_min, cc.f_max, resolution);

    Output o;
    json &s = o.summary;
    s["lattice_constant_m"] = cc.spec.mirror_cell.lattice_constant();
    s["mirror_cells_per_side"] = cc.spec.mirror_cells_per_side;
    json arr = json::array();
    Table t{{"f_low_Hz", "f_high_Hz"}, {}};
    for (const auto &gp : gaps) {
        arr.push_back({{"f_low_Hz", gp.f_low},
                       {"f_high_Hz", gp.f_high},
                       {"center_Hz", gp.center()},
                       {"fractional_width", gp.fractional_width()}});
        t.add({gp.f_low, gp.f_high});
    }
    s["gaps"] = arr;
    const auto gap = primary_gap(gaps);
    s["gap"] = nullptr;
    if (gap)
        s["gap"] = {{"f_low_Hz", gap->f_low}, {"f_high_Hz", gap->f_high}, {"center_Hz", gap->center()}};
    if (gap && cc.spec.mirror_cells_per_side > 0) {
        try {
            const chain::DefectMode m = chain::find_defect_mode(cc.spec, *gap);
            s["defect_mode"] = {{"f_Hz", m.frequency},
                                {"localization_length_m", m.localization_length},
                                {"radiative_Q", m.radiative_q}};
        } catch (const Error &e) {
            if (e.code() != Errc::no_defect_mode_in_gap)
                throw;
            s["defect_mode"] = nullptr;
        }
    }
    o.table = std::move(t);
    return o;
}

Output cmd_photoelastic_scan(const Globals &g)
{
    const Config cfg = load_config(g);
    const ChainConfig cc = read_chain(cfg);
    const auto optics_node = cfg.section("optics");
    const pe::OpticalConfig optics = read_optics(optics_node);

    const auto gaps = chain::find_band_gaps(cc.spec.mirror_cell, cc.f_min, cc.f_max, (cc.f_max - cc.f_min) / 20000.0);
    const auto gap = primary_gap(gaps);
    if (!gap)
        throw Error(Errc::no_defect_mode_in_gap, "mirror cell has no band gap in the scan window");
    const chain::DefectMode dm = chain::find_defect_mode(cc.spec, *gap);
    const auto profile = chain::mode_profile(cc.spec, dm);

    pe::StandingWaveMode mode;
    mode.defect_width = optics_node ? optics_node->number_or("defect_width_m", 0.0) : 0.0;
    if (!(mode.defect_width > 0.0))
        mode.defect_width = cc.spec.defect_cell.wide.length;
    mode.amplitude = optics_node ? optics_node->number_or("u0_m", 1e-12) : 1e-12;
    mode.frequency = optics_node ? optics_node->number_or("f_m_Hz", dm.frequency) : dm.frequency;
    mode.validate();

    std::vector<pe::ScanPoint> envelope;
    for (const auto &p : profile)
        envelope.push_back({p.position, p.amplitude});
    const auto scan = pe::mode_profile_scan(envelope, optics, mode);
    const pe::ModulationResult peak = pe::detected_power(optics, mode, 0.0);
    const auto quartz = pe::PhotoelasticTensor::quartz_default();

    Output o;
    json &s = o.summary;
    s["defect_mode_Hz"] = dm.frequency;
    s["peak_strain"] = mode.peak_strain();
    s["effective_coefficient"] = pe::effective_coefficient(quartz, optics.polarization_angle);
    s["polarization_contrast_dB"] = pe::polarization_contrast(quartz);
    s["delta0_rad"] = peak.delta0;
    s["M_rad"] = peak.M;
    s["dc_power"] = peak.dc_power;
    s["beat_amplitude"] = peak.beat_amplitude;
    json pts = json::array();
    Table t{{"y_um", "signal_norm"}, {}};
    for (const auto &p : scan) {
        pts.push_back({{"y_um", p.position * 1e6}, {"signal_norm", p.value}});
        t.add({p.position * 1e6, p.value});
    }
    s["scan"] = pts;
    o.table = std::move(t);
    return o;
}

void emit(const Globals &g, const Output &o, std::ostream &out)
{
    const Table table = o.table ? *o.table : scalar_table(o.summary);
    if (!g.out_path.empty()) {
        std::ofstream f(g.out_path);
        if (!f)
            throw UsageError("cannot open output file " + g.out_path);
        table.write(f);
        if (!f)
            throw UsageError("failed writing " + g.out_path);
    }
    if (g.format == "csv")
        table.write(out);
    else
        out << o.summary.dump(2) << '\n';
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Quantum acoustic memory design and analysis toolkit", "qmem"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "JSON project configuration")->check(CLI::ExistingFile);
    app.add_option("--out", g.out_path, "write the tabular result as CSV to this path");
    app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--seed", g.seed, "random seed (all current routines are deterministic)");

    std::function<Output()> action;

    auto *couple = app.add_subcommand("couple", "coupling chain from circuit parameters to g_eff");
    int defects = 1;
    couple->add_option("--defects", defects, "number of defect cells driven in phase")->check(CLI::PositiveNumber);
    couple->callback([&] { action = [&] { return cmd_couple(g, defects); }; });

    auto *iswap = app.add_subcommand("iswap", "Lindblad simulation of the write/read gate");
    std::string dissipation = "on", gate = "write";
    std::optional<double> duration;
    iswap->add_option("--dissipation", dissipation)->check(CLI::IsMember({"on", "off"}));
    iswap->add_option("--duration", duration, "gate duration in s")->check(CLI::NonNegativeNumber);
    iswap->add_option("--gate", gate)->check(CLI::IsMember({"write", "read"}));
    iswap->callback([&] { action = [&] { return cmd_iswap(g, dissipation == "on", duration, gate); }; });

    std::string input;
    auto *lor = app.add_subcommand("fit-lorentzian", "resonance fit of a frequency trace");
    std::string lor_mode = "magnitude";
    lor->add_option("input", input, "CSV f_Hz,mag or f_Hz,re,im")->required();
    lor->add_option("--mode", lor_mode)->check(CLI::IsMember({"magnitude", "complex"}));
    lor->callback([&] { action = [&] { return cmd_fit_lorentzian(input, lor_mode); }; });

    auto *ring = app.add_subcommand("ringdown", "exponential decay fit of a time trace");
    std::optional<double> ring_f;
    ring->add_option("input", input, "CSV t_s,amp")->required();
    ring->add_option("--f-Hz", ring_f, "mode frequency for Q = 2 pi f tau")->check(CLI::PositiveNumber);
    ring->callback([&] { action = [&] { return cmd_ringdown(input, ring_f); }; });

    auto *qvt = app.add_subcommand("qvt", "fit a loss-channel stack to Q versus temperature");
    qvt->add_option("input", input, "CSV T_K,Q,sigma_Q")->required();
    qvt->callback([&] { action = [&] { return cmd_qvt(g, input); }; });

    auto *bvd = app.add_subcommand("bvd-fit", "fit the equivalent circuit to an admittance trace");
    bool fit_resistance = false;
    bvd->add_option("input", input, "CSV f_Hz,ReY_S,ImY_S")->required();
    bvd->add_flag("--fit-resistance", fit_resistance, "also fit the motional resistance");
    bvd->callback([&] { action = [&] { return cmd_bvd_fit(input, fit_resistance); }; });

    auto *sweep = app.add_subcommand("duffing-sweep", "branch-following frequency sweep");
    std::string direction = "forward";
    sweep->add_option("--direction", direction)->check(CLI::IsMember({"forward", "backward"}));
    sweep->callback([&] { action = [&] { return cmd_duffing_sweep(g, direction); }; });

    auto *bb = app.add_subcommand("backbone", "backbone curve and power-law fit");
    bb->add_option("input", input, "optional CSV amp,f_Hz; otherwise computed from the duffing section");
    bb->callback([&] { action = [&] { return cmd_backbone(g, input); }; });

    auto *gap = app.add_subcommand("bandgap", "band gaps and defect mode of the phononic chain");
    gap->callback([&] { action = [&] { return cmd_bandgap(g); }; });

    auto *scan = app.add_subcommand("photoelastic-scan", "optical mode-profile scan across the chain");
    scan->callback([&] { action = [&] { return cmd_photoelastic_scan(g); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        const Output o = action();
        emit(g, o, out);
        return 0;
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const UsageError &e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::ios_base::failure &e) {
        err << "io error: " << e.what() << '\n';
        return 2;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        const bool usage = e.code() == Errc::format_error || e.code() == Errc::invalid_argument;
        return usage ? 2 : 1;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace qmem::cli
