#include "transducer/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "transducer/version.hpp"

namespace transducer {

using nlohmann::json;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip
    return std::string(buf, res.ptr);
}

void Csv::header(const std::vector<std::string>& columns) {
    if (columns_ != 0) throw ConfigError("Csv: header already written");
    if (columns.empty()) throw ConfigError("Csv: empty header");
    columns_ = columns.size();
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) text_ += ',';
        text_ += columns[i];
    }
    text_ += '\n';
}

void Csv::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw ConfigError("Csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(columns_));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ',';
        text_ += cells[i];
    }
    text_ += '\n';
}

void Csv::write(const std::string& path) const { write_text_file(path, text_); }

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigError("short write: " + path);
}

namespace {

[[noreturn]] void key_error(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) key_error(path, "expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) key_error(path + "." + item.key(), "unknown key");
}

double need_number(const json& j, const std::string& path) {
    if (!j.is_number()) key_error(path, "expected a number");
    return j.get<double>();
}

int need_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) key_error(path, "expected an integer");
    return j.get<int>();
}

bool need_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) key_error(path, "expected a boolean");
    return j.get<bool>();
}

std::string need_string(const json& j, const std::string& path) {
    if (!j.is_string()) key_error(path, "expected a string");
    return j.get<std::string>();
}

Vec2 need_vec2(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) key_error(path, "expected [x, y]");
    return Vec2(need_number(j[0], path + "[0]"), need_number(j[1], path + "[1]"));
}

// logical scenario fields with two accepted spellings: absolute units and
// multiples of the reciprocal unit 2*pi/d
struct RecipPair {
    const char* abs;
    const char* recip;
};
constexpr RecipPair recip_pairs[] = {
    {"delta_omega", "delta_omega_recip"}, {"detuning", "detuning_recip"},
    {"eta", "eta_recip"},                 {"crit_tol", "crit_tol_recip"},
    {"grating", "grating_recip"},
};

const std::set<std::string>& scenario_keys() {
    static const std::set<std::string> keys = {
        "lattice_d",     "delta_omega", "delta_omega_recip",
        "detuning",      "detuning_recip",
        "eta",           "eta_recip",
        "dip_a",         "dip_b",
        "abs_a_sq",      "mix_a",
        "grating",       "grating_recip",
        "rwa",           "g_cutoff",
        "zero_real_part", "markov_decay",
        "crit_tol",      "crit_tol_recip",
        "lattice_r_max", "lattice_tol", "lattice_max_doublings",
    };
    return keys;
}

// (pair-aware) scalar that may be given in absolute units or units of 2*pi/d
bool read_paired(const json& j, const RecipPair& pair, double recip_unit,
                 const std::string& prefix, double* out) {
    const bool has_abs = j.contains(pair.abs);
    const bool has_recip = j.contains(pair.recip);
    if (has_abs && has_recip)
        key_error(prefix + "." + pair.recip, std::string("conflicts with ") + pair.abs);
    if (has_abs) *out = need_number(j[pair.abs], prefix + "." + pair.abs);
    if (has_recip) *out = recip_unit * need_number(j[pair.recip], prefix + "." + pair.recip);
    return has_abs || has_recip;
}

}  // namespace

json scenario_to_json(const ScatterScenario& sc) {
    json j;
    j["lattice_d"] = sc.lattice_d;
    j["delta_omega"] = sc.delta_omega;
    j["detuning"] = sc.detuning;
    j["eta"] = sc.eta;
    j["dip_a"] = sc.dip_a;
    j["dip_b"] = sc.dip_b;
    j["mix_a"] = {sc.mix_a.real(), sc.mix_a.imag()};
    j["grating"] = {sc.grating.x(), sc.grating.y()};
    j["rwa"] = sc.rwa;
    j["g_cutoff"] = sc.g_cutoff;
    j["zero_real_part"] = sc.zero_real_part;
    j["markov_decay"] = sc.markov_decay;
    j["crit_tol"] = sc.crit_tol;
    j["lattice_r_max"] = sc.lattice_r_max;
    j["lattice_tol"] = sc.lattice_tol;
    j["lattice_max_doublings"] = sc.lattice_max_doublings;
    return j;
}

ScatterScenario scenario_from_json(const json& j, const std::string& key_prefix,
                                   std::vector<std::string>* assumed) {
    check_keys(j, scenario_keys(), key_prefix);
    ScatterScenario sc;
    auto note_default = [&](const char* canonical) {
        if (assumed) assumed->push_back(key_prefix + "." + canonical);
    };

    if (j.contains("lattice_d"))
        sc.lattice_d = need_number(j["lattice_d"], key_prefix + ".lattice_d");
    else
        note_default("lattice_d");
    const double recip_unit = two_pi / sc.lattice_d;

    if (!read_paired(j, recip_pairs[0], recip_unit, key_prefix, &sc.delta_omega))
        note_default("delta_omega");
    if (!read_paired(j, recip_pairs[1], recip_unit, key_prefix, &sc.detuning))
        note_default("detuning");
    if (!read_paired(j, recip_pairs[2], recip_unit, key_prefix, &sc.eta)) note_default("eta");
    if (!read_paired(j, recip_pairs[3], recip_unit, key_prefix, &sc.crit_tol))
        note_default("crit_tol");

    if (j.contains("dip_a")) sc.dip_a = need_number(j["dip_a"], key_prefix + ".dip_a");
    else note_default("dip_a");
    if (j.contains("dip_b")) sc.dip_b = need_number(j["dip_b"], key_prefix + ".dip_b");
    else note_default("dip_b");

    const bool has_abs_a = j.contains("abs_a_sq");
    const bool has_mix = j.contains("mix_a");
    if (has_abs_a && has_mix) key_error(key_prefix + ".mix_a", "conflicts with abs_a_sq");
    if (has_abs_a) {
        const double a2 = need_number(j["abs_a_sq"], key_prefix + ".abs_a_sq");
        if (a2 < 0.0 || a2 > 1.0)
            key_error(key_prefix + ".abs_a_sq",
                      "|A|^2 = " + format_double(a2) + " violates |A|^2 + |B|^2 = 1 with |B|^2 >= 0");
        sc.mix_a = cplx(std::sqrt(a2), 0.0);
    } else if (has_mix) {
        const json& m = j["mix_a"];
        if (!m.is_array() || m.size() != 2) key_error(key_prefix + ".mix_a", "expected [re, im]");
        sc.mix_a = cplx(need_number(m[0], key_prefix + ".mix_a[0]"),
                        need_number(m[1], key_prefix + ".mix_a[1]"));
    } else {
        note_default("mix_a");
    }

    {
        const bool has_g = j.contains("grating");
        const bool has_gr = j.contains("grating_recip");
        if (has_g && has_gr) key_error(key_prefix + ".grating_recip", "conflicts with grating");
        if (has_g) sc.grating = need_vec2(j["grating"], key_prefix + ".grating");
        else if (has_gr)
            sc.grating = recip_unit * need_vec2(j["grating_recip"], key_prefix + ".grating_recip");
        else
            note_default("grating");
    }

    if (j.contains("rwa")) sc.rwa = need_bool(j["rwa"], key_prefix + ".rwa");
    else note_default("rwa");
    if (j.contains("g_cutoff")) sc.g_cutoff = need_int(j["g_cutoff"], key_prefix + ".g_cutoff");
    else note_default("g_cutoff");
    if (j.contains("zero_real_part"))
        sc.zero_real_part = need_bool(j["zero_real_part"], key_prefix + ".zero_real_part");
    else note_default("zero_real_part");
    if (j.contains("markov_decay"))
        sc.markov_decay = need_bool(j["markov_decay"], key_prefix + ".markov_decay");
    else note_default("markov_decay");
    if (j.contains("lattice_r_max"))
        sc.lattice_r_max = need_number(j["lattice_r_max"], key_prefix + ".lattice_r_max");
    else note_default("lattice_r_max");
    if (j.contains("lattice_tol"))
        sc.lattice_tol = need_number(j["lattice_tol"], key_prefix + ".lattice_tol");
    else note_default("lattice_tol");
    if (j.contains("lattice_max_doublings"))
        sc.lattice_max_doublings =
            need_int(j["lattice_max_doublings"], key_prefix + ".lattice_max_doublings");
    else note_default("lattice_max_doublings");

    try {
        sc.validate();
    } catch (const ConfigError& e) {
        key_error(key_prefix, e.what());
    }
    return sc;
}

namespace {

const std::set<std::string> commands = {"efficiency-sweep", "modeweights", "criticality",
                                        "fieldmap",         "fwhm",        "spectrum"};

const std::set<std::string>& allowed_option_keys(const std::string& command) {
    static const std::map<std::string, std::set<std::string>> per_command = {
        {"efficiency-sweep",
         {"axis", "min", "max", "min_recip", "max_recip", "points", "values", "omega_recip",
          "direction", "angle_deg", "pol", "optimize_a", "project", "zero_real_part"}},
        {"modeweights", {"omega_recip", "direction", "angle_deg", "pol", "optimize_a"}},
        {"criticality",
         {"omega_min_recip", "omega_max_recip", "direction", "angle_deg", "g_radius"}},
        {"fieldmap",
         {"n", "omega_recip", "direction", "angle_deg", "pol", "amplitude", "planes",
          "half_extent", "points", "z_min", "z_max", "nz", "solver", "max_memory_gib",
          "iterative_tol"}},
        {"fwhm",
         {"sizes", "omega_recip", "direction", "angle_deg", "pol", "x_min", "x_max", "nx",
          "z_max", "nz", "solver", "max_memory_gib", "iterative_tol"}},
        {"spectrum",
         {"n", "omega_recip", "direction", "angle_deg", "pol", "cuts", "solver",
          "max_memory_gib", "iterative_tol"}},
    };
    const auto it = per_command.find(command);
    if (it == per_command.end()) throw ConfigError("unknown command " + command);
    return it->second;
}

void validate_project(const json& j, const std::string& path) {
    check_keys(j, {"orders", "exclude_orders", "g_norm_below"}, path);
    int forms = 0;
    for (const char* k : {"orders", "exclude_orders"}) {
        if (!j.contains(k)) continue;
        ++forms;
        const json& arr = j[k];
        if (!arr.is_array() || arr.empty()) key_error(path + "." + k, "expected [[m, n], ...]");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_array() || arr[i].size() != 2)
                key_error(path + "." + k + "[" + std::to_string(i) + "]", "expected [m, n]");
            need_int(arr[i][0], path + "." + k);
            need_int(arr[i][1], path + "." + k);
        }
    }
    if (j.contains("g_norm_below")) {
        ++forms;
        need_number(j["g_norm_below"], path + ".g_norm_below");
    }
    if (forms != 1) key_error(path, "give exactly one of orders / exclude_orders / g_norm_below");
}

void validate_incidence(const json& j, const std::string& path) {
    if (j.contains("direction")) need_vec2(j["direction"], path + ".direction");
    if (j.contains("angle_deg")) need_number(j["angle_deg"], path + ".angle_deg");
    if (j.contains("pol")) {
        const json& p = j["pol"];
        if (p.is_string()) {
            const std::string s = p.get<std::string>();
            if (s != "s" && s != "p" && s != "x" && s != "y")
                key_error(path + ".pol", "expected \"s\", \"p\", \"x\", \"y\" or [re,im x 3]");
        } else if (p.is_array() && p.size() == 6) {
            for (int i = 0; i < 6; ++i) need_number(p[i], path + ".pol");
        } else {
            key_error(path + ".pol", "expected \"s\", \"p\", \"x\", \"y\" or [re,im x 3]");
        }
    }
}

void validate_solver(const json& j, const std::string& path) {
    if (j.contains("solver")) {
        const std::string s = need_string(j["solver"], path + ".solver");
        if (s != "auto" && s != "dense" && s != "iterative")
            key_error(path + ".solver", "expected auto, dense or iterative");
    }
    if (j.contains("max_memory_gib")) need_number(j["max_memory_gib"], path + ".max_memory_gib");
    if (j.contains("iterative_tol")) need_number(j["iterative_tol"], path + ".iterative_tol");
}

void validate_cut(const json& j, const std::string& path) {
    check_keys(j, {"axis", "min", "max", "points", "x", "y", "z", "component", "part", "window"},
               path);
    const std::string axis = j.contains("axis") ? need_string(j["axis"], path + ".axis") : "x";
    if (axis != "x" && axis != "y" && axis != "z") key_error(path + ".axis", "expected x, y or z");
    for (const char* k : {"min", "max"})
        if (!j.contains(k)) key_error(path, std::string("missing key ") + k);
    need_number(j["min"], path + ".min");
    need_number(j["max"], path + ".max");
    if (j.contains("points")) need_int(j["points"], path + ".points");
    for (const char* k : {"x", "y", "z"}) {
        if (k == axis) {
            if (j.contains(k)) key_error(path + "." + k, "fixed coordinate on the cut axis");
        } else if (j.contains(k)) {
            need_number(j[k], path + "." + k);
        }
    }
    if (j.contains("component")) {
        static const std::set<std::string> comps = {"Ea_x", "Ea_y", "Ea_z",
                                                    "Eb_x", "Eb_y", "Eb_z"};
        if (!comps.count(need_string(j["component"], path + ".component")))
            key_error(path + ".component", "expected Ea_x..Eb_z");
    }
    if (j.contains("part")) {
        const std::string s = need_string(j["part"], path + ".part");
        if (s != "re" && s != "im" && s != "complex")
            key_error(path + ".part", "expected re, im or complex");
    }
    if (j.contains("window")) {
        const std::string s = need_string(j["window"], path + ".window");
        if (s != "hann" && s != "rect") key_error(path + ".window", "expected hann or rect");
    }
}

void validate_options(const std::string& command, const json& j, const std::string& path) {
    if (command == "efficiency-sweep") {
        check_keys(j, allowed_option_keys(command), path);
        if (j.contains("axis")) {
            const std::string a = need_string(j["axis"], path + ".axis");
            if (a != "omega" && a != "abs_a_sq" && a != "angle")
                key_error(path + ".axis", "expected omega, abs_a_sq or angle");
        }
        const bool values = j.contains("values");
        if (values) {
            if (!j["values"].is_array() || j["values"].empty())
                key_error(path + ".values", "expected a nonempty array");
            for (std::size_t i = 0; i < j["values"].size(); ++i)
                need_number(j["values"][i], path + ".values");
            for (const char* k : {"min", "max", "min_recip", "max_recip", "points"})
                if (j.contains(k))
                    key_error(path + "." + k, "conflicts with values");
        }
        for (const char* k : {"min", "max"}) {
            const std::string rk = std::string(k) + "_recip";
            if (j.contains(k) && j.contains(rk))
                key_error(path + "." + rk, std::string("conflicts with ") + k);
            if (j.contains(k)) need_number(j[k], path + "." + k);
            if (j.contains(rk)) need_number(j[rk], path + "." + rk);
        }
        if (j.contains("points")) need_int(j["points"], path + ".points");
        if (j.contains("omega_recip")) need_number(j["omega_recip"], path + ".omega_recip");
        if (j.contains("optimize_a")) need_bool(j["optimize_a"], path + ".optimize_a");
        if (j.contains("zero_real_part")) need_bool(j["zero_real_part"], path + ".zero_real_part");
        if (j.contains("project")) validate_project(j["project"], path + ".project");
        validate_incidence(j, path);
    } else if (command == "modeweights") {
        check_keys(j, allowed_option_keys(command), path);
        if (!j.contains("omega_recip")) key_error(path, "missing key omega_recip");
        need_number(j["omega_recip"], path + ".omega_recip");
        if (j.contains("optimize_a")) need_bool(j["optimize_a"], path + ".optimize_a");
        validate_incidence(j, path);
    } else if (command == "criticality") {
        check_keys(j, allowed_option_keys(command), path);
        if (j.contains("omega_min_recip")) need_number(j["omega_min_recip"], path + ".omega_min_recip");
        if (j.contains("omega_max_recip")) need_number(j["omega_max_recip"], path + ".omega_max_recip");
        if (j.contains("g_radius")) need_int(j["g_radius"], path + ".g_radius");
        validate_incidence(j, path);
    } else if (command == "fieldmap") {
        check_keys(j, allowed_option_keys(command), path);
        for (const char* k : {"n", "omega_recip"})
            if (!j.contains(k)) key_error(path, std::string("missing key ") + k);
        need_int(j["n"], path + ".n");
        need_number(j["omega_recip"], path + ".omega_recip");
        if (j.contains("amplitude")) {
            if (!j["amplitude"].is_array() || j["amplitude"].size() != 2)
                key_error(path + ".amplitude", "expected [re, im]");
            need_number(j["amplitude"][0], path + ".amplitude[0]");
            need_number(j["amplitude"][1], path + ".amplitude[1]");
        }
        if (j.contains("planes")) {
            if (!j["planes"].is_array() || j["planes"].empty())
                key_error(path + ".planes", "expected a nonempty array");
            for (const auto& p : j["planes"]) {
                const std::string s = need_string(p, path + ".planes");
                if (s != "z0" && s != "y0") key_error(path + ".planes", "expected \"z0\" or \"y0\"");
            }
        }
        for (const char* k : {"half_extent", "z_min", "z_max"})
            if (j.contains(k)) need_number(j[k], path + "." + k);
        for (const char* k : {"points", "nz"})
            if (j.contains(k)) need_int(j[k], path + "." + k);
        validate_incidence(j, path);
        validate_solver(j, path);
    } else if (command == "fwhm") {
        check_keys(j, allowed_option_keys(command), path);
        if (!j.contains("omega_recip")) key_error(path, "missing key omega_recip");
        need_number(j["omega_recip"], path + ".omega_recip");
        if (j.contains("sizes")) {
            if (!j["sizes"].is_array() || j["sizes"].empty())
                key_error(path + ".sizes", "expected a nonempty array of side lengths");
            for (std::size_t i = 0; i < j["sizes"].size(); ++i)
                need_int(j["sizes"][i], path + ".sizes");
        }
        if (j.contains("x_min") && !j["x_min"].is_number() &&
            !(j["x_min"].is_string() && j["x_min"] == "auto"))
            key_error(path + ".x_min", "expected a number or \"auto\"");
        for (const char* k : {"x_max", "z_max"})
            if (j.contains(k)) need_number(j[k], path + "." + k);
        for (const char* k : {"nx", "nz"})
            if (j.contains(k)) need_int(j[k], path + "." + k);
        validate_incidence(j, path);
        validate_solver(j, path);
    } else if (command == "spectrum") {
        check_keys(j, allowed_option_keys(command), path);
        for (const char* k : {"n", "omega_recip"})
            if (!j.contains(k)) key_error(path, std::string("missing key ") + k);
        need_int(j["n"], path + ".n");
        need_number(j["omega_recip"], path + ".omega_recip");
        if (j.contains("cuts")) {
            if (!j["cuts"].is_array() || j["cuts"].empty())
                key_error(path + ".cuts", "expected a nonempty array");
            for (std::size_t i = 0; i < j["cuts"].size(); ++i)
                validate_cut(j["cuts"][i], path + ".cuts[" + std::to_string(i) + "]");
        }
        validate_incidence(j, path);
        validate_solver(j, path);
    } else {
        key_error(path, "unknown command " + command);
    }
}

}  // namespace

json filter_options_for(const std::string& command, const json& options) {
    const std::set<std::string>& keep = allowed_option_keys(command);
    json out = json::object();
    if (options.is_object())
        for (const auto& item : options.items())
            if (keep.count(item.key())) out[item.key()] = item.value();
    return out;
}

ParsedConfig parse_config_json(const json& j, const std::string& source) {
    check_keys(j, {"scenario", "command", "options", "variants", "note"}, source);
    ParsedConfig cfg;
    if (!j.contains("command")) key_error(source, "missing key command");
    cfg.command = need_string(j["command"], source + ".command");
    if (!commands.count(cfg.command))
        key_error(source + ".command", "unknown command " + cfg.command);

    const json scenario_in = j.contains("scenario") ? j["scenario"] : json::object();
    cfg.scenario = scenario_from_json(scenario_in, source + ".scenario", &cfg.assumed);
    cfg.options = j.contains("options") ? j["options"] : json::object();
    validate_options(cfg.command, cfg.options, source + ".options");

    std::set<std::string> names;
    if (j.contains("variants")) {
        if (!j["variants"].is_array()) key_error(source + ".variants", "expected an array");
        for (std::size_t i = 0; i < j["variants"].size(); ++i) {
            const std::string path = source + ".variants[" + std::to_string(i) + "]";
            const json& v = j["variants"][i];
            check_keys(v, {"name", "scenario", "options"}, path);
            if (!v.contains("name")) key_error(path, "missing key name");
            const std::string name = need_string(v["name"], path + ".name");
            if (name.empty()) key_error(path + ".name", "empty variant name");
            if (!names.insert(name).second) key_error(path + ".name", "duplicate variant " + name);
            if (v.contains("scenario")) {
                // must parse standalone-merged for early error reporting
                scenario_from_json(merge_scenario_json(scenario_in, v["scenario"]),
                                   path + ".scenario", nullptr);
            }
            if (v.contains("options"))
                validate_options(cfg.command, merge_options_json(cfg.options, v["options"]),
                                 path + ".options");
            cfg.variants.push_back(v);
        }
    }

    cfg.resolved = json::object();
    cfg.resolved["scenario"] = scenario_in;
    cfg.resolved["command"] = cfg.command;
    cfg.resolved["options"] = cfg.options;
    cfg.resolved["variants"] = j.contains("variants") ? j["variants"] : json::array();
    if (j.contains("note")) cfg.resolved["note"] = j["note"];
    return cfg;
}

ParsedConfig parse_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config_json(j, path);
}

json merge_scenario_json(const json& base, const json& over) {
    if (!over.is_object()) throw ConfigError("variant scenario: expected an object");
    json out = base.is_object() ? base : json::object();
    auto erase_pairs = [&](const std::string& key) {
        for (const RecipPair& p : recip_pairs) {
            if (key == p.abs || key == p.recip) {
                out.erase(p.abs);
                out.erase(p.recip);
            }
        }
        if (key == "abs_a_sq" || key == "mix_a") {
            out.erase("abs_a_sq");
            out.erase("mix_a");
        }
        if (key == "grating" || key == "grating_recip") {
            out.erase("grating");
            out.erase("grating_recip");
        }
    };
    for (const auto& item : over.items()) {
        erase_pairs(item.key());
        out[item.key()] = item.value();
    }
    return out;
}

json merge_options_json(const json& base, const json& over) {
    if (!over.is_object()) throw ConfigError("variant options: expected an object");
    json out = base.is_object() ? base : json::object();
    auto erase_pairs = [&](const std::string& key) {
        if (key == "values" || key == "min" || key == "max" || key == "min_recip" ||
            key == "max_recip") {
            if (key == "values") {
                for (const char* k : {"min", "max", "min_recip", "max_recip", "points"})
                    out.erase(k);
            } else {
                out.erase("values");
                if (key == "min" || key == "min_recip") {
                    out.erase("min");
                    out.erase("min_recip");
                }
                if (key == "max" || key == "max_recip") {
                    out.erase("max");
                    out.erase("max_recip");
                }
            }
        }
    };
    for (const auto& item : over.items()) {
        erase_pairs(item.key());
        out[item.key()] = item.value();
    }
    return out;
}

std::vector<ResolvedVariant> resolve_variants(const ParsedConfig& cfg) {
    std::vector<ResolvedVariant> out;
    if (cfg.variants.empty()) {
        out.push_back({"", cfg.scenario, cfg.options});
        return out;
    }
    const json& base_scenario = cfg.resolved["scenario"];
    for (const json& v : cfg.variants) {
        ResolvedVariant rv;
        rv.name = v["name"].get<std::string>();
        rv.scenario = v.contains("scenario")
                          ? scenario_from_json(merge_scenario_json(base_scenario, v["scenario"]),
                                               "variants." + rv.name + ".scenario", nullptr)
                          : cfg.scenario;
        rv.options = v.contains("options") ? merge_options_json(cfg.options, v["options"])
                                           : cfg.options;
        out.push_back(std::move(rv));
    }
    return out;
}

namespace {

json sweep_preset(double dw_recip, json options, std::vector<json> variants,
                  const std::string& note) {
    json j;
    j["scenario"] = {{"delta_omega_recip", dw_recip}};
    j["command"] = "efficiency-sweep";
    j["options"] = std::move(options);
    j["variants"] = std::move(variants);
    if (!note.empty()) j["note"] = note;
    return j;
}

json orders_json(std::initializer_list<std::pair<int, int>> gs) {
    json arr = json::array();
    for (const auto& g : gs) arr.push_back({g.first, g.second});
    return arr;
}

// total / lower / new-mode variant triple around one criticality
void push_mode_split(std::vector<json>& vars, const std::string& prefix, const json& new_orders,
                     const json& extra_opts = json::object()) {
    auto with = [&](json opts) {
        for (const auto& item : extra_opts.items()) opts[item.key()] = item.value();
        return opts;
    };
    vars.push_back({{"name", prefix + "total"}, {"options", with(json::object())}});
    vars.push_back(
        {{"name", prefix + "lower"},
         {"options", with(json{{"project", {{"exclude_orders", new_orders}}}})}});
    vars.push_back({{"name", prefix + "new"},
                    {"options", with(json{{"project", {{"orders", new_orders}}}})}});
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"fig2",  "fig3",  "fig4a", "fig4b", "fig4c", "fig4d", "fig5a", "fig5b",
            "fig5c", "fig6a", "fig6d", "fig7a", "fig7b", "fig8",  "fig10"};
}

json preset_config(const std::string& name) {
    const json normal = {{"direction", {1.0, 0.0}}, {"angle_deg", 0.0}, {"pol", "y"}};

    if (name == "fig2") {
        json options = {{"axis", "abs_a_sq"}, {"min", 0.0},   {"max", 1.0},
                        {"points", 201},      {"omega_recip", 0.2}};
        for (const auto& item : normal.items()) options[item.key()] = item.value();
        std::vector<json> vars;
        for (double w : {0.2, 0.495})
            for (double dw : {0.0, 2.5, 5.0}) {
                json v;
                v["name"] = "w" + format_double(w) + "-dw" + format_double(dw);
                v["scenario"] = {{"delta_omega_recip", dw}};
                v["options"] = {{"omega_recip", w}};
                vars.push_back(v);
            }
        return sweep_preset(0.0, options, vars,
                            "grid density not stated by the source figure; 201 points assumed");
    }
    if (name == "fig3") {
        json options = {{"axis", "omega"}, {"min_recip", 0.005}, {"max_recip", 0.995},
                        {"points", 199},   {"optimize_a", true}};
        for (const auto& item : normal.items()) options[item.key()] = item.value();
        std::vector<json> vars;
        for (double dw : {0.0, 0.5, 1.0, 1.5, 2.0}) {
            json v;
            v["name"] = "dw" + format_double(dw);
            v["scenario"] = {{"delta_omega_recip", dw}};
            vars.push_back(v);
        }
        vars.push_back({{"name", "bound"},
                        {"scenario", {{"delta_omega_recip", 1.5}, {"zero_real_part", true}}}});
        return sweep_preset(0.0, options, vars,
                            "grid density not stated by the source figure; 199 points assumed; "
                            "the bound curve is independent of the transduction energy");
    }

    auto fig4 = [&](double dw, double w_lo, double w_hi, const json& new_orders,
                    bool extra_0pm3) {
        json options = {{"axis", "omega"},  {"min_recip", w_lo},  {"max_recip", w_hi},
                        {"points", 201},    {"optimize_a", true}};
        for (const auto& item : normal.items()) options[item.key()] = item.value();
        std::vector<json> vars;
        push_mode_split(vars, "", new_orders);
        if (extra_0pm3)
            vars.push_back({{"name", "mode-0pm3"},
                            {"options",
                             {{"project", {{"orders", orders_json({{0, 3}, {0, -3}})}}}}}});
        return sweep_preset(dw, options, vars,
                            "window and grid density not stated by the source figure");
    };
    if (name == "fig4a") return fig4(1.5, 0.40, 0.60, orders_json({{2, 0}, {-2, 0}, {0, 2}, {0, -2}}), false);
    if (name == "fig4b") return fig4(2.5, 0.40, 0.60, orders_json({{3, 0}, {-3, 0}, {0, 3}, {0, -3}}), false);
    if (name == "fig4c") return fig4(1.8, 0.10, 0.30, orders_json({{2, 0}, {-2, 0}, {0, 2}, {0, -2}}), false);
    if (name == "fig4d") return fig4(2.8, 0.10, 0.30, orders_json({{3, 0}, {-3, 0}, {0, 3}, {0, -3}}), true);

    if (name == "fig5a" || name == "fig5b") {
        json options = {{"axis", "omega"}, {"min_recip", 0.005}, {"max_recip", 0.995},
                        {"points", 199},   {"angle_deg", 30.0},  {"optimize_a", true}};
        const double inv_sqrt2 = 0.70710678118654752;
        std::vector<json> vars;
        for (const char* polname : {"s", "p"}) {
            vars.push_back({{"name", std::string("lattice-") + polname},
                            {"options", {{"direction", {1.0, 0.0}}, {"pol", polname}}}});
            vars.push_back({{"name", std::string("diag-") + polname},
                            {"options", {{"direction", {inv_sqrt2, inv_sqrt2}}, {"pol", polname}}}});
        }
        json j = sweep_preset(3.0, options, vars,
                              "grid density not stated by the source figure; 199 points assumed");
        if (name == "fig5b") j["scenario"]["zero_real_part"] = true;
        return j;
    }
    if (name == "fig5c") {
        json options = {{"axis", "omega"},    {"min_recip", 0.28}, {"max_recip", 0.34},
                        {"points", 241},      {"angle_deg", 30.0}, {"direction", {1.0, 0.0}},
                        {"optimize_a", true}};
        const json new_orders = orders_json({{3, 1}, {3, -1}});
        std::vector<json> vars;
        push_mode_split(vars, "s-", new_orders, {{"pol", "s"}});
        push_mode_split(vars, "p-", new_orders, {{"pol", "p"}});
        return sweep_preset(3.0, options, vars,
                            "window and grid density not stated by the source figure");
    }

    auto fieldmap = [&](double dw, int n, double w, double angle_deg) {
        json j;
        j["scenario"] = {{"delta_omega_recip", dw}};
        j["command"] = "fieldmap";
        j["options"] = {{"n", n},
                        {"omega_recip", w},
                        {"direction", {1.0, 0.0}},
                        {"angle_deg", angle_deg},
                        {"pol", "y"},
                        {"planes", {"z0", "y0"}},
                        {"half_extent", 50.0},
                        {"points", 200},
                        {"z_min", -50.0},
                        {"z_max", 50.0},
                        {"nz", 200}};
        j["note"] = "map extents not stated by the source figure; 100d x 100d windows assumed";
        return j;
    };
    if (name == "fig6a") return fieldmap(2.8, 30, 0.2, 0.0);
    if (name == "fig6d") return fieldmap(7.8, 60, 0.2, 0.0);
    if (name == "fig7a") return fieldmap(1.7, 60, 0.2, 30.0);
    if (name == "fig7b") return fieldmap(1.9, 60, 0.2, 30.0);

    if (name == "fig8") {
        json j;
        j["scenario"] = {{"delta_omega_recip", 2.8}};
        j["command"] = "fwhm";
        j["options"] = {{"sizes", {5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60}},
                        {"omega_recip", 0.2},
                        {"direction", {1.0, 0.0}},
                        {"angle_deg", 0.0},
                        {"pol", "y"},
                        {"x_min", "auto"},
                        {"x_max", 50.0},
                        {"nx", 240},
                        {"z_max", 30.0},
                        {"nz", 301}};
        j["note"] = "fit window not stated by the source figure; footprint + 2d .. 50d assumed";
        return j;
    }
    if (name == "fig10") {
        json j;
        j["scenario"] = {{"delta_omega_recip", 1.9}};
        j["command"] = "spectrum";
        j["options"] = {{"n", 60},
                        {"omega_recip", 0.2},
                        {"direction", {1.0, 0.0}},
                        {"angle_deg", 30.0},
                        {"pol", "y"}};
        auto cut = [](double y, double z) {
            return json{{"axis", "x"},     {"min", -51.1},      {"max", 51.1},
                        {"points", 512},   {"y", y},            {"z", z},
                        {"component", "Eb_y"}, {"part", "re"},  {"window", "hann"}};
        };
        j["variants"] = json::array(
            {json{{"name", "in-plane"}, {"options", {{"cuts", {cut(0.0, 0.0)}}}}},
             json{{"name", "side"}, {"options", {{"cuts", {cut(50.0, 0.0)}}}}},
             json{{"name", "behind"}, {"options", {{"cuts", {cut(0.0, 30.0)}}}}}});
        j["note"] = "cut length and sampling not stated by the source figure; 512 points at 0.2d";
        return j;
    }
    throw ConfigError("unknown preset " + name + " (see `transduce list-presets`)");
}

RunManifest make_manifest(const ParsedConfig& cfg, const std::vector<std::string>& argv,
                          const std::vector<std::string>& outputs, double wall_seconds) {
    RunManifest m;
    m.doc["format"] = "transducer-run/1";
    m.doc["tool_version"] = version_string;
    m.doc["command"] = cfg.command;
    m.doc["argv"] = argv;
    m.doc["config"] = cfg.resolved;
    m.doc["scenario_resolved"] = scenario_to_json(cfg.scenario);
    m.doc["assumed"] = cfg.assumed;
    m.doc["outputs"] = outputs;
    m.doc["wall_seconds"] = wall_seconds;
    return m;
}

void RunManifest::write(const std::string& path) const {
    write_text_file(path, doc.dump(2) + "\n");
}

namespace {

const char* const field_record[12] = {"re_Ea_x", "im_Ea_x", "re_Ea_y", "im_Ea_y",
                                      "re_Ea_z", "im_Ea_z", "re_Eb_x", "im_Eb_x",
                                      "re_Eb_y", "im_Eb_y", "re_Eb_z", "im_Eb_z"};

}  // namespace

void write_field_map_csv(const std::string& path, const FieldMap& map) {
    Csv csv;
    std::vector<std::string> head = {"x [d]", "y [d]", "z [d]"};
    for (const char* f : field_record) head.push_back(std::string(f) + " [|E0|]");
    csv.header(head);
    const GridSpec& g = map.grid;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t flat =
                    static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(g.nx) *
                        (static_cast<std::size_t>(j) + static_cast<std::size_t>(g.ny) * k);
                const Vec3 p = g.point(i, j, k);
                const CVec3& ea = map.field_a[flat];
                const CVec3& eb = map.field_b[flat];
                std::vector<std::string> row = {format_double(p.x()), format_double(p.y()),
                                                format_double(p.z())};
                for (const CVec3* f : {&ea, &eb})
                    for (int c = 0; c < 3; ++c) {
                        row.push_back(format_double((*f)(c).real()));
                        row.push_back(format_double((*f)(c).imag()));
                    }
                csv.row(row);
            }
    csv.write(path);
}

void write_field_map_binary(const std::string& base_path, const FieldMap& map) {
    const std::size_t n = map.field_a.size();
    std::string raw(n * 12 * sizeof(double), '\0');
    auto put = [&](std::size_t slot, double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        if constexpr (std::endian::native == std::endian::big) {
            std::uint64_t sw = 0;
            for (int b = 0; b < 8; ++b) sw |= ((bits >> (8 * b)) & 0xffu) << (8 * (7 - b));
            bits = sw;
        }
        std::memcpy(raw.data() + slot * sizeof(double), &bits, sizeof(bits));
    };
    for (std::size_t i = 0; i < n; ++i) {
        const CVec3& ea = map.field_a[i];
        const CVec3& eb = map.field_b[i];
        std::size_t slot = i * 12;
        for (const CVec3* f : {&ea, &eb})
            for (int c = 0; c < 3; ++c) {
                put(slot++, (*f)(c).real());
                put(slot++, (*f)(c).imag());
            }
    }
    write_text_file(base_path + ".f64", raw);

    json side;
    side["format"] = "transducer-fieldmap/1";
    side["dtype"] = "float64";
    side["byte_order"] = "little-endian";
    side["record"] = json::array();
    for (const char* f : field_record) side["record"].push_back(f);
    side["index_order"] = "x fastest, then y, then z (flat = i + nx*(j + ny*k))";
    side["units"] = {{"lengths", "d"}, {"fields", "|E0|"}};
    side["grid"] = {{"origin", {map.grid.origin.x(), map.grid.origin.y(), map.grid.origin.z()}},
                    {"step", {map.grid.step.x(), map.grid.step.y(), map.grid.step.z()}},
                    {"nx", map.grid.nx},
                    {"ny", map.grid.ny},
                    {"nz", map.grid.nz}};
    side["points"] = n;
    side["data"] = base_path.substr(base_path.find_last_of("/\\") + 1) + ".f64";
    json sites = json::array();
    for (const Vec3& r : map.sites) sites.push_back({r.x(), r.y(), r.z()});
    side["sites"] = sites;
    write_text_file(base_path + ".json", side.dump(2) + "\n");
}

}  // namespace transducer
