#include "config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "qmem/errors.hpp"

namespace qmem::cli
{

namespace
{

// Allowed keys per node kind. Nested object kinds are listed in `children`.
struct Kind
{
    std::set<std::string> keys;
    std::map<std::string, std::string> children;   // key -> kind name
    std::string array_items;                        // kind of objects in any array key
};

const std::map<std::string, Kind> &schema()
{
    static const std::map<std::string, Kind> kinds = {
        {"root",
         {{"bvd", "shunt", "system", "drive", "optics", "duffing", "chain", "losses"},
          {{"bvd", "bvd"},
           {"shunt", "shunt"},
           {"system", "system"},
           {"drive", "drive"},
           {"optics", "optics"},
           {"duffing", "duffing"},
           {"chain", "chain"},
           {"losses", "losses"}},
          ""}},
        {"bvd", {{"C0_F", "Cm_F", "Lm_H", "Rm_Ohm"}, {}, ""}},
        {"shunt", {{"Cr_F", "Lr_H", "f_r_Hz"}, {}, ""}},
        {"system",
         {{"qubit", "snail", "mech", "g_qs_Hz", "lambda_qs", "g_sm_Hz", "g3_Hz"},
          {{"qubit", "mode"}, {"snail", "mode"}, {"mech", "mode"}},
          ""}},
        {"mode", {{"f_Hz", "decay_rate_per_s", "dephasing_rate_per_s", "anharmonicity_Hz"}, {}, ""}},
        {"drive", {{"f_d_Hz", "n_s", "epsilon_Hz", "phase_rad", "duration_s"}, {}, ""}},
        {"optics",
         {{"wavelength_m", "n_o", "n_e", "thickness_m", "polarization_rad", "c1", "c2", "defect_width_m", "u0_m",
           "f_m_Hz"},
          {},
          ""}},
        {"duffing", {{"f0_Hz", "Q", "beta", "drive", "f_lo_Hz", "f_hi_Hz", "points", "drive_levels"}, {}, ""}},
        {"chain",
         {{"mirror_cells_per_side", "defect_extra_m", "mirror_cell", "defect_cell", "termination_impedance",
           "f_min_Hz", "f_max_Hz"},
          {{"mirror_cell", "cell"}, {"defect_cell", "cell"}},
          ""}},
        {"cell", {{"narrow", "wide"}, {{"narrow", "segment"}, {"wide", "segment"}}, ""}},
        {"segment", {{"length_m", "sound_speed_m_per_s", "impedance"}, {}, ""}},
        {"losses", {{"f_Hz", "channels"}, {}, "channel"}},
        {"channel", {{"type", "delta", "tau0_s", "activation_temp_K", "coefficient", "exponent", "Q"}, {}, ""}},
    };
    return kinds;
}

std::string escape(const std::string &key)
{
    std::string out;
    for (char c : key) {
        if (c == '~')
            out += "~0";
        else if (c == '/')
            out += "~1";
        else
            out += c;
    }
    return out;
}

void validate(const json &node, const std::string &pointer, const std::string &kind_name)
{
    if (!node.is_object())
        throw ConfigError(pointer.empty() ? "/" : pointer, "expected an object");
    const Kind &kind = schema().at(kind_name);
    for (const auto &[key, value] : node.items()) {
        const std::string ptr = pointer + "/" + escape(key);
        if (!kind.keys.count(key))
            throw ConfigError(ptr, "unknown key");
        if (auto it = kind.children.find(key); it != kind.children.end()) {
            validate(value, ptr, it->second);
        } else if (value.is_array() && !kind.array_items.empty() && key == "channels") {
            for (std::size_t i = 0; i < value.size(); ++i)
                validate(value[i], ptr + "/" + std::to_string(i), kind.array_items);
        }
    }
}

} // namespace

double Node::number(const std::string &key) const
{
    if (!j_->contains(key))
        throw ConfigError(pointer_ + "/" + escape(key), "required value missing");
    return *opt_number(key);
}

std::optional<double> Node::opt_number(const std::string &key) const
{
    if (!j_->contains(key))
        return std::nullopt;
    const json &v = j_->at(key);
    if (!v.is_number())
        throw ConfigError(pointer_ + "/" + escape(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        throw ConfigError(pointer_ + "/" + escape(key), "expected a finite number");
    return d;
}

int Node::integer(const std::string &key) const
{
    if (!j_->contains(key))
        throw ConfigError(pointer_ + "/" + escape(key), "required value missing");
    return *opt_integer(key);
}

std::optional<int> Node::opt_integer(const std::string &key) const
{
    if (!j_->contains(key))
        return std::nullopt;
    const json &v = j_->at(key);
    if (!v.is_number_integer())
        throw ConfigError(pointer_ + "/" + escape(key), "expected an integer");
    return v.get<int>();
}

std::string Node::string(const std::string &key) const
{
    if (!j_->contains(key))
        throw ConfigError(pointer_ + "/" + escape(key), "required value missing");
    const json &v = j_->at(key);
    if (!v.is_string())
        throw ConfigError(pointer_ + "/" + escape(key), "expected a string");
    return v.get<std::string>();
}

Node Node::child(const std::string &key) const
{
    if (!j_->contains(key))
        throw ConfigError(pointer_ + "/" + escape(key), "required section missing");
    return Node(j_->at(key), pointer_ + "/" + escape(key));
}

std::optional<Node> Node::opt_child(const std::string &key) const
{
    if (!j_->contains(key))
        return std::nullopt;
    return child(key);
}

const json &Node::raw(const std::string &key) const
{
    if (!j_->contains(key))
        throw ConfigError(pointer_ + "/" + escape(key), "required value missing");
    return j_->at(key);
}

Config::Config(json doc) : doc_(std::move(doc)) { validate(doc_, "", "root"); }

Config Config::parse(const std::string &text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw Error(Errc::format_error, std::string("config is not valid JSON: ") + e.what());
    }
    return Config(std::move(doc));
}

Config Config::load(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::ios_base::failure("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

Config Config::empty() { return Config(json::object()); }

std::optional<Node> Config::section(const std::string &name) const { return root().opt_child(name); }

Node Config::require_section(const std::string &name) const { return root().child(name); }

} // namespace qmem::cli
