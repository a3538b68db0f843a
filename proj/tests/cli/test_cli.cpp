#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "cli.hpp"
#include "qmem/analysis.hpp"
#include "qmem/electromech.hpp"
#include "qmem/loss_models.hpp"
#include "../support/synthetic.hpp"

using nlohmann::json;
using doctest::Approx;
namespace fs = std::filesystem;

namespace
{

const std::string kConfig = QMEM_FIXTURES "/device_config.json";

struct Outcome
{
    int code = -1;
    std::string out, err;

    json parsed() const { return json::parse(out); }
};

Outcome run(std::vector<std::string> args)
{
    args.insert(args.begin(), "qmem");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    Outcome o;
    o.code = qmem::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

fs::path scratch(const std::string &name)
{
    const fs::path dir = fs::temp_directory_path() / "qmem_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_text(const std::string &name, const std::string &text)
{
    const fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

fs::path config_with(const std::function<void(json &)> &edit)
{
    json j = json::parse(std::ifstream(kConfig));
    edit(j);
    return write_text("edited_config.json", j.dump());
}

std::set<std::string> keys(const json &j)
{
    std::set<std::string> out;
    for (const auto &[k, v] : j.items())
        out.insert(k);
    return out;
}

} // namespace

TEST_CASE("couple reproduces the coupling chain of the design")
{
    const Outcome o = run({"--config", kConfig, "couple"});
    REQUIRE(o.code == 0);
    const json j = o.parsed();
    CHECK(j["g_sm_Hz"].get<double>() == Approx(120e3).epsilon(0.05));
    CHECK(j["f_r_Hz"].get<double>() > 1.12e9);
    CHECK(j["f_r_Hz"].get<double>() < 1.15e9);
    CHECK(j["g_eff_Hz"].get<double>() > 18e3);
    CHECK(j["g_eff_Hz"].get<double>() < 24e3);
    CHECK(j["T_iswap_s"].get<double>() > 20e-6);
    CHECK(j["T_iswap_s"].get<double>() < 28e-6);
    CHECK(j["t_first_transfer_s"].get<double>() == Approx(0.5 * j["T_iswap_s"].get<double>()));
    CHECK(j["lambda_sm"].get<double>() == Approx(1.16e-4).epsilon(0.05));
    CHECK(j["eta_abs"].get<double>() == Approx(std::sqrt(10.0)));
    CHECK(j["f_d_defaulted_to_difference"].get<bool>());
    const double gm = j["Gamma_m_prime"].get<double>();
    CHECK(gm == Approx(1e7 * std::pow(j["lambda_sm"].get<double>(), 2)).epsilon(1e-9));
    CHECK(j["mech_lifetime_s"].get<double>() == Approx(1.0 / gm));
}

TEST_CASE("couple output keeps a stable schema")
{
    const json j = run({"--config", kConfig, "couple"}).parsed();
    const std::set<std::string> expected{
        "defects", "C0_F", "Cm_F", "Lm_H", "f_series_Hz", "f_parallel_Hz", "f_r_Hz", "f_q_Hz", "f_s_Hz", "f_m_Hz",
        "g_sm_Hz", "g_sm_approximation_valid", "g_qs_Hz", "g3_Hz", "lambda_qs", "lambda_sm", "dressed_f_q_Hz",
        "dressed_f_s_Hz", "dressed_f_m_Hz", "f_d_Hz", "f_d_defaulted_to_difference", "eta", "eta_abs", "g_eff_Hz",
        "drive_phase_rad", "cross_kerr_Hz", "qubit_self_kerr_Hz", "T_iswap_s", "t_first_transfer_s", "Gamma_m_prime",
        "mech_lifetime_s"};
    CHECK(keys(j) == expected);
}

TEST_CASE("ten defects raise the coupling by about sqrt(10)")
{
    const double one = run({"--config", kConfig, "couple"}).parsed()["g_eff_Hz"].get<double>();
    const Outcome ten = run({"--config", kConfig, "couple", "--defects", "10"});
    REQUIRE(ten.code == 0);
    const double ratio = ten.parsed()["g_eff_Hz"].get<double>() / one;
    CHECK(ratio == Approx(std::sqrt(10.0)).epsilon(0.15));
    CHECK(ten.parsed()["defects"].get<int>() == 10);
}

TEST_CASE("configuration problems are usage errors with a pointer")
{
    const fs::path no_drive = config_with([](json &j) { j.erase("drive"); });
    const Outcome a = run({"--config", no_drive.string(), "couple"});
    CHECK(a.code == 2);
    CHECK(a.err.find("/drive") != std::string::npos);

    const fs::path extra = config_with([](json &j) { j["bvd"]["x"] = 1; });
    const Outcome b = run({"--config", extra.string(), "couple"});
    CHECK(b.code == 2);
    CHECK(b.err.find("/bvd/x") != std::string::npos);

    const fs::path both = config_with([](json &j) { j["drive"]["epsilon_Hz"] = 1e6; });
    CHECK(run({"--config", both.string(), "couple"}).code == 2);

    const fs::path broken = write_text("broken.json", "{ \"bvd\": ");
    CHECK(run({"--config", broken.string(), "couple"}).code == 2);

    CHECK(run({"--config", "/nonexistent/config.json", "couple"}).code == 2);
}

TEST_CASE("iswap without dissipation transfers the excitation")
{
    const Outcome o = run({"--config", kConfig, "iswap", "--dissipation", "off"});
    REQUIRE(o.code == 0);
    const json j = o.parsed();
    CHECK(j["populations"]["g1"].get<double>() > 0.999);
    CHECK(j["final_fidelity"].get<double>() == Approx(1.0).epsilon(1e-9));
    CHECK(j["duration_s"].get<double>() == Approx(1.0 / (4 * j["g_eff_Hz"].get<double>())));
    CHECK(j["first_transfer_time_s"].get<double>() == Approx(j["duration_s"].get<double>()).epsilon(1e-3));
    const auto n = j["t_us"].size();
    CHECK(n > 10);
    CHECK(j["pop_e0"].size() == n);
    CHECK(j["pop_g1"].size() == n);
    CHECK(j["fidelity"].size() == n);
}

TEST_CASE("iswap with dissipation matches the half-decay estimate")
{
    const json j = run({"--config", kConfig, "iswap"}).parsed();
    const double T = j["duration_s"].get<double>();
    CHECK(j["final_fidelity"].get<double>() == Approx(std::exp(-1e4 * T / 2)).epsilon(0.05));
    CHECK(j["final_fidelity"].get<double>() < 1.0);
}

TEST_CASE("zero-length gate is the identity and the read gate is accepted")
{
    const json z = run({"--config", kConfig, "iswap", "--duration", "0"}).parsed();
    CHECK(z["populations"]["e0"].get<double>() == 1.0);
    CHECK(z["final_fidelity"].get<double>() == Approx(1.0));
    const Outcome r = run({"--config", kConfig, "iswap", "--gate", "read", "--dissipation", "off"});
    REQUIRE(r.code == 0);
    CHECK(r.parsed()["populations"]["e0"].get<double>() > 0.999);
    CHECK(run({"--config", kConfig, "iswap", "--gate", "sideways"}).code == 2);
}

TEST_CASE("ringdown fixture gives the expected lifetime")
{
    const Outcome o = run({"ringdown", QMEM_FIXTURES "/ringdown_97MHz.csv", "--f-Hz", "97.2e6"});
    REQUIRE(o.code == 0);
    const json j = o.parsed();
    CHECK(j["tau_s"].get<double>() == Approx(1.023e-3).epsilon(0.01));
    CHECK(j["Q"].get<double>() == Approx(2 * M_PI * 97.2e6 * j["tau_s"].get<double>()));
}

TEST_CASE("missing or malformed input files")
{
    CHECK(run({"ringdown", QMEM_FIXTURES "/does_not_exist.csv"}).code == 2);
    const fs::path bad = write_text("bad_ringdown.csv", "time,amp\n0,1\n");
    const Outcome o = run({"ringdown", bad.string()});
    CHECK(o.code == 2);
    CHECK_FALSE(o.err.empty());
}

TEST_CASE("fit-lorentzian on a written trace")
{
    std::ostringstream csv;
    csv << "f_Hz,mag\n";
    const double f0 = 97.2e6, kappa = f0 / 6.8e5;
    for (int i = 0; i < 401; ++i) {
        const double f = f0 - 10 * kappa + 20 * kappa * i / 400.0;
        csv << std::setprecision(17) << f << ',' << 1.0 / std::hypot(1.0, 2 * (f - f0) / kappa) << '\n';
    }
    const fs::path p = write_text("lorentzian.csv", csv.str());
    const Outcome o = run({"fit-lorentzian", p.string()});
    REQUIRE(o.code == 0);
    CHECK(o.parsed()["Q"].get<double>() == Approx(6.8e5).epsilon(1e-6));
    CHECK(o.parsed()["tau_s"].get<double>() == Approx(6.8e5 / (2 * M_PI * f0)).epsilon(1e-6));

    const fs::path flat = write_text("flat.csv", [] {
        std::ostringstream s;
        s << "f_Hz,mag\n" << std::setprecision(17);
        for (int i = 0; i < 50; ++i)
            s << 1e6 + i << ",1\n";
        return s.str();
    }());
    CHECK(run({"fit-lorentzian", flat.string()}).code == 1);
}

TEST_CASE("bvd-fit recovers the written circuit")
{
    const auto trace = qmem::testdata::bvd_trace(qmem::testdata::device_bvd(), 2e-4, 2000);
    const fs::path p = scratch("admittance.csv");
    {
        std::ofstream f(p);
        qmem::em::write_admittance_csv(f, trace);
    }
    const Outcome o = run({"bvd-fit", p.string()});
    REQUIRE(o.code == 0);
    const json j = o.parsed();
    CHECK(j["Cm_F"].get<double>() == Approx(1.38e-19).epsilon(1e-4));
    CHECK(j["C0_F"].get<double>() == Approx(8.96e-16).epsilon(1e-4));
    CHECK(j["Lm_H"].get<double>() == Approx(18.9).epsilon(1e-4));
}

TEST_CASE("qvt fits the configured loss stack")
{
    const auto data = qmem::testdata::fig5_data(0.01);
    std::ostringstream csv;
    csv << "T_K,Q,sigma_Q\n" << std::setprecision(17);
    for (const auto &pt : data.points)
        csv << pt.temperature << ',' << pt.q << ',' << pt.sigma_q << '\n';
    const fs::path p = write_text("qvt.csv", csv.str());
    const Outcome o = run({"--config", kConfig, "qvt", p.string()});
    REQUIRE(o.code == 0);
    const json j = o.parsed();
    REQUIRE(j["channels"].size() == 3);
    CHECK(j["channels"][1]["exponent"].get<double>() == Approx(4.0).epsilon(0.05));
    CHECK(j["channels"][2]["Q"].get<double>() == Approx(7.05e5).epsilon(0.05));

    const fs::path no_losses = config_with([](json &c) { c.erase("losses"); });
    CHECK(run({"--config", no_losses.string(), "qvt", p.string()}).code == 2);
}

TEST_CASE("duffing sweeps and backbone")
{
    const Outcome fwd = run({"--config", kConfig, "duffing-sweep"});
    REQUIRE(fwd.code == 0);
    const json f = fwd.parsed();
    CHECK(f["bistable"].get<bool>());
    CHECK(f["hysteresis_area"].get<double>() > 0.0);
    const Outcome bwd = run({"--config", kConfig, "duffing-sweep", "--direction", "backward", "--format", "csv"});
    REQUIRE(bwd.code == 0);
    CHECK(bwd.out.rfind("f_Hz,amp,branch\n", 0) == 0);
    // Coming down in frequency the stiffening resonator rides the lower branch.
    CHECK(bwd.out.find("lower") != std::string::npos);
    CHECK(bwd.out.find("upper") == std::string::npos);
    const Outcome fwd_csv = run({"--config", kConfig, "duffing-sweep", "--format", "csv"});
    CHECK(fwd_csv.out.find("upper") != std::string::npos);

    const Outcome bb = run({"--config", kConfig, "backbone"});
    REQUIRE(bb.code == 0);
    CHECK(bb.parsed()["n"].get<double>() == Approx(2.0).epsilon(0.05));

    std::ostringstream csv;
    csv << "amp,f_Hz\n" << std::setprecision(17);
    for (double a = 0.002; a <= 0.0201; a += 0.003)
        csv << a << ',' << 97.2e6 + 5.12e8 * std::pow(a, 2.17) << '\n';
    const fs::path p = write_text("backbone.csv", csv.str());
    const Outcome given = run({"backbone", p.string()});
    REQUIRE(given.code == 0);
    CHECK(given.parsed()["n"].get<double>() == Approx(2.17).epsilon(1e-3));
    CHECK(given.parsed()["A"].get<double>() == Approx(5.12e8).epsilon(1e-3));
}

TEST_CASE("bandgap of the default chain")
{
    const Outcome o = run({"bandgap"});
    REQUIRE(o.code == 0);
    const json j = o.parsed();
    CHECK(j["gap"]["f_low_Hz"].get<double>() == Approx(90e6).epsilon(0.03));
    CHECK(j["gap"]["f_high_Hz"].get<double>() == Approx(110e6).epsilon(0.03));
    REQUIRE(j["defect_mode"].is_object());
    CHECK(j["defect_mode"]["f_Hz"].get<double>() == Approx(100e6).epsilon(0.01));
}

TEST_CASE("photoelastic scan writes a CSV table")
{
    const fs::path p = scratch("scan.csv");
    fs::remove(p);
    const Outcome o = run({"--config", kConfig, "--out", p.string(), "photoelastic-scan"});
    REQUIRE(o.code == 0);
    std::ifstream in(p);
    std::string header;
    std::getline(in, header);
    CHECK(header == "y_um,signal_norm");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
        ++rows;
    CHECK(rows > 10);
}

TEST_CASE("help, unknown subcommands and csv scalars")
{
    const Outcome h = run({"--help"});
    CHECK(h.code == 0);
    for (const char *sub : {"couple", "iswap", "fit-lorentzian", "ringdown", "qvt", "bvd-fit", "duffing-sweep", "backbone",
                            "bandgap", "photoelastic-scan"})
        CHECK(h.out.find(sub) != std::string::npos);
    CHECK(run({}).code == 2);
    CHECK(run({"teleport"}).code == 2);
    CHECK(run({"--format", "xml", "bandgap"}).code == 2);

    const Outcome c = run({"--config", kConfig, "couple", "--format", "csv"});
    REQUIRE(c.code == 0);
    CHECK(c.out.rfind("quantity,value\n", 0) == 0);
    CHECK(c.out.find("g_eff_Hz,") != std::string::npos);
}
