// Command-line front end: runs scattering sweeps, criticality scans and
// finite-array field solves from JSON configs or built-in presets, writing
// CSV/binary outputs plus a run manifest that `replay` can verify byte for
// byte.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "transducer/dipoles.hpp"
#include "transducer/geometry.hpp"
#include "transducer/io.hpp"
#include "transducer/parallel.hpp"
#include "transducer/smatrix.hpp"
#include "transducer/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace transducer;

namespace {

// ---- option access with defaults (types were validated by parse_config) ---

double opt_num(const json& o, const char* key, double dflt) {
    return o.contains(key) ? o[key].get<double>() : dflt;
}

int opt_int(const json& o, const char* key, int dflt) {
    return o.contains(key) ? o[key].get<int>() : dflt;
}

bool opt_bool(const json& o, const char* key, bool dflt) {
    return o.contains(key) ? o[key].get<bool>() : dflt;
}

std::string opt_str(const json& o, const char* key, const std::string& dflt) {
    return o.contains(key) ? o[key].get<std::string>() : dflt;
}

Vec2 opt_dir(const json& o) {
    if (!o.contains("direction")) return Vec2(1.0, 0.0);
    return Vec2(o["direction"][0].get<double>(), o["direction"][1].get<double>());
}

double required_omega(const ScatterScenario& sc, const json& o) {
    if (!o.contains("omega_recip")) throw ConfigError("options.omega_recip: required");
    return o["omega_recip"].get<double>() * sc.recip();
}

CVec3 polarization_vector(const json& o, const Vec2& dir, double omega, double angle) {
    const json p = o.contains("pol") ? o["pol"] : json("y");
    if (p.is_array()) {
        CVec3 v;
        for (int c = 0; c < 3; ++c) v(c) = cplx(p[2 * c].get<double>(), p[2 * c + 1].get<double>());
        return v;
    }
    const std::string s = p.get<std::string>();
    if (s == "x") return CVec3(1.0, 0.0, 0.0);
    if (s == "y") return CVec3(0.0, 1.0, 0.0);
    const Vec2 k_par = omega * std::sin(angle) * dir.normalized();
    const double k_perp = omega * std::cos(angle);
    const Vec2 u = dir.normalized();
    const Vec2 s_axis(-u.y(), u.x());  // angle -> 0 limit of z x k_par_hat
    const Vec3 v =
        s == "s" ? s_polarization(k_par, k_perp, s_axis) : p_polarization(k_par, k_perp, s_axis);
    return v.cast<cplx>();
}

PlaneWave incident_from(const ScatterScenario& sc, const json& o) {
    const double omega = required_omega(sc, o);
    const Vec2 dir = opt_dir(o);
    const double angle = opt_num(o, "angle_deg", 0.0) * pi / 180.0;
    return incident_wave(omega, dir, angle, polarization_vector(o, dir, omega, angle));
}

SolveOptions solve_options_from(const json& o) {
    SolveOptions opt;
    const std::string s = opt_str(o, "solver", "auto");
    if (s == "dense") opt.method = SolveOptions::Method::dense;
    else if (s == "iterative") opt.method = SolveOptions::Method::iterative;
    opt.max_memory_gib = opt_num(o, "max_memory_gib", opt.max_memory_gib);
    opt.iterative_tol = opt_num(o, "iterative_tol", opt.iterative_tol);
    return opt;
}

GFilter filter_from(const json& o) {
    if (!o.contains("project")) return {};
    const json& p = o["project"];
    if (p.contains("g_norm_below")) {
        const double bound = p["g_norm_below"].get<double>();
        return [bound](const GIndex& g) { return Vec2(g.x(), g.y()).norm() < bound; };
    }
    const bool exclude = p.contains("exclude_orders");
    std::set<std::pair<int, int>> orders;
    for (const auto& g : p[exclude ? "exclude_orders" : "orders"])
        orders.insert({g[0].get<int>(), g[1].get<int>()});
    return [orders, exclude](const GIndex& g) {
        return orders.count({g.x(), g.y()}) != static_cast<std::size_t>(exclude);
    };
}

std::string sanitize_cell(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

// ---- command executors ----------------------------------------------------

struct ExecResult {
    std::vector<std::string> outputs;  // file names relative to the output dir
    int failed_rows = 0;
};

void run_efficiency_sweep(const ScatterScenario& sc, const json& o, const std::string& csv_path,
                          ExecResult& res) {
    const std::string axis_name = opt_str(o, "axis", "omega");
    SweepAxis axis = SweepAxis::omega_in;
    if (axis_name == "abs_a_sq") axis = SweepAxis::abs_a_sq;
    if (axis_name == "angle") axis = SweepAxis::angle;

    // grid in the axis's display unit, then scaled to internal units
    std::vector<double> grid;
    if (o.contains("values")) {
        for (const auto& v : o["values"]) grid.push_back(v.get<double>());
    } else {
        double lo = 0.0, hi = 0.0;
        if (axis == SweepAxis::omega_in) {
            lo = o.contains("min_recip") ? o["min_recip"].get<double>() : opt_num(o, "min", 0.0);
            hi = o.contains("max_recip") ? o["max_recip"].get<double>() : opt_num(o, "max", 0.0);
        } else {
            lo = opt_num(o, "min", axis == SweepAxis::abs_a_sq ? 0.0 : 0.0);
            hi = opt_num(o, "max", axis == SweepAxis::abs_a_sq ? 1.0 : 60.0);
        }
        const int points = opt_int(o, "points", 101);
        if (points < 1) throw ConfigError("options.points: empty grid");
        if (points == 1 && hi != lo) throw ConfigError("options.points: 1 point needs min == max");
        for (int i = 0; i < points; ++i)
            grid.push_back(points == 1 ? lo : lo + (hi - lo) * i / (points - 1));
    }
    if (grid.empty()) throw ConfigError("options: empty grid");
    double unit = 1.0;  // display -> internal
    if (axis == SweepAxis::omega_in) unit = sc.recip();
    if (axis == SweepAxis::angle) unit = pi / 180.0;
    for (double& v : grid) v *= unit;

    SweepOptions so;
    so.direction = opt_dir(o);
    so.angle = opt_num(o, "angle_deg", 0.0) * pi / 180.0;
    if (axis != SweepAxis::omega_in) so.omega_in = required_omega(sc, o);
    if (axis == SweepAxis::angle && o.contains("angle_deg"))
        throw ConfigError("options.angle_deg: fixed angle conflicts with the angle axis");
    const std::string polname = o.contains("pol") && o["pol"].is_string()
                                    ? o["pol"].get<std::string>()
                                    : (o.contains("pol") ? "custom" : "y");
    if (polname == "s") so.polarization = SweepPol::s;
    else if (polname == "p") so.polarization = SweepPol::p;
    else {
        so.polarization = SweepPol::custom;
        const double w0 = axis == SweepAxis::omega_in ? grid.front() : so.omega_in;
        so.custom_pol = polarization_vector(o, so.direction, w0, so.angle);
    }
    so.optimize_a = opt_bool(o, "optimize_a", false);
    so.zero_real_part = opt_bool(o, "zero_real_part", sc.zero_real_part);
    so.g_filter = filter_from(o);

    const std::vector<SweepRow> rows = sweep(sc, axis, grid, so);

    Csv csv;
    const char* xcol = axis == SweepAxis::omega_in
                           ? "omega_in [2pi/d]"
                           : (axis == SweepAxis::abs_a_sq ? "abs_a_sq [1]" : "angle [deg]");
    csv.header({xcol, "efficiency [1]", "survival [1]", "abs_a [1]", "projected [1]", "error"});
    for (const SweepRow& r : rows) {
        if (!r.error.empty()) ++res.failed_rows;
        csv.row({format_double(r.x / unit), format_double(r.efficiency),
                 format_double(r.survival), format_double(r.abs_a),
                 r.projected < 0.0 ? "" : format_double(r.projected), sanitize_cell(r.error)});
    }
    csv.write(csv_path);
}

void run_modeweights(ScatterScenario sc, const json& o, const std::string& csv_path) {
    const PlaneWave inc = incident_from(sc, o);
    if (opt_bool(o, "optimize_a", false)) {
        const MixingOptimum m = optimize_mixing(sc, inc);
        sc.mix_a = cplx(m.abs_a, 0.0);
    }
    const ScatteringResult r = scatter(sc, inc);
    Csv csv;
    csv.header({"g_m", "g_n", "side", "branch", "polarization", "class", "probability [1]",
                "re_amplitude", "im_amplitude"});
    for (const ModeAmplitude& m : r.per_mode)
        csv.row({format_double(m.mode.g.x()), format_double(m.mode.g.y()),
                 m.mode.sign > 0 ? "+" : "-", to_string(m.mode.branch),
                 std::string(1, m.polarization), to_string(m.mode.cls),
                 format_double(m.probability), format_double(m.amplitude.real()),
                 format_double(m.amplitude.imag())});
    csv.write(csv_path);
}

void run_criticality(const ScatterScenario& sc, const json& o, const std::string& csv_path) {
    const double lo = opt_num(o, "omega_min_recip", 0.005) * sc.recip();
    const double hi = opt_num(o, "omega_max_recip", 0.995) * sc.recip();
    const std::vector<CriticalPoint> pts = find_critical_frequencies(
        sc, opt_dir(o), opt_num(o, "angle_deg", 0.0) * pi / 180.0, lo, hi,
        opt_int(o, "g_radius", -1));
    Csv csv;
    csv.header({"omega [2pi/d]", "g_m", "g_n"});
    for (const CriticalPoint& p : pts)
        csv.row({format_double(p.omega / sc.recip()), format_double(p.g.x()),
                 format_double(p.g.y())});
    csv.write(csv_path);
}

void run_fieldmap(const ScatterScenario& sc, const json& o, const std::string& base,
                  ExecResult& res) {
    const int n = o["n"].get<int>();
    const PlaneWave inc = incident_from(sc, o);
    cplx amp(1.0, 0.0);
    if (o.contains("amplitude"))
        amp = cplx(o["amplitude"][0].get<double>(), o["amplitude"][1].get<double>());
    const EmitterSet em = EmitterSet::square(n, sc.lattice_d);
    const SiteSolution sol = solve_sites(sc, em, inc, amp, solve_options_from(o));

    std::vector<std::string> planes = {"z0", "y0"};
    if (o.contains("planes")) {
        planes.clear();
        for (const auto& p : o["planes"]) planes.push_back(p.get<std::string>());
    }
    const double he = opt_num(o, "half_extent", 50.0);
    const int points = opt_int(o, "points", 200);
    for (const std::string& plane : planes) {
        GridSpec grid = plane == "z0"
                            ? GridSpec::plane_z(he, points, 0.0)
                            : GridSpec::plane_y(he, points, 0.0, opt_num(o, "z_min", -50.0),
                                                opt_num(o, "z_max", 50.0), opt_int(o, "nz", 200));
        const FieldMap map = evaluate_field(sc, em, sol, grid);
        write_field_map_csv(base + "-" + plane + ".csv", map);
        write_field_map_binary(base + "-" + plane, map);
        const std::string stem = fs::path(base).filename().string() + "-" + plane;
        res.outputs.push_back(stem + ".csv");
        res.outputs.push_back(stem + ".f64");
        res.outputs.push_back(stem + ".json");
    }
}

void run_fwhm(const ScatterScenario& sc, const json& o, const std::string& base,
              ExecResult& res) {
    std::vector<int> sizes = {5, 10, 15, 20, 25, 30};
    if (o.contains("sizes")) {
        sizes.clear();
        for (const auto& s : o["sizes"]) sizes.push_back(s.get<int>());
    }
    const double x_max = opt_num(o, "x_max", 50.0);
    const int nx = opt_int(o, "nx", 240);
    const double z_max = opt_num(o, "z_max", 30.0);
    const int nz = opt_int(o, "nz", 301);
    const SolveOptions sopt = solve_options_from(o);
    const json omega_opts = o;

    Csv summary;
    summary.header({"N", "x_min [d]", "x_max [d]", "spread_rate_raw [1]", "spread_rate [1]",
                    "fit_residual [d]", "found", "samples"});
    for (int n : sizes) {
        const EmitterSet em = EmitterSet::square(n, sc.lattice_d);
        const PlaneWave inc = incident_from(sc, omega_opts);
        const SiteSolution sol = solve_sites(sc, em, inc, cplx(1.0, 0.0), sopt);
        const GridSpec grid = GridSpec::plane_y(x_max, nx, 0.0, 0.0, z_max, nz);
        const FieldMap map = evaluate_field(sc, em, sol, grid);
        double x_min = em.footprint() + 2.0 * sc.lattice_d;
        if (o.contains("x_min") && o["x_min"].is_number()) x_min = o["x_min"].get<double>();
        const FwhmResult f = fwhm_lobe(sc, em, map, x_min, x_max);

        int found = 0;
        for (std::uint8_t u : f.found) found += u;
        summary.row({format_double(n), format_double(x_min), format_double(x_max),
                     format_double(f.spread_rate_raw), format_double(f.spread_rate),
                     format_double(f.fit_residual), format_double(found),
                     format_double(static_cast<double>(f.x.size()))});

        Csv profile;
        profile.header({"x [d]", "z_half [d]", "z_half_smooth [d]", "found"});
        for (std::size_t i = 0; i < f.x.size(); ++i)
            profile.row({format_double(f.x[i]), format_double(f.z_half[i]),
                         format_double(f.z_half_smooth[i]), format_double(f.found[i])});
        const std::string name = fs::path(base).filename().string() + "-N" + std::to_string(n);
        profile.write(base + "-N" + std::to_string(n) + ".csv");
        res.outputs.push_back(name + ".csv");
    }
    summary.write(base + ".csv");
    res.outputs.push_back(fs::path(base).filename().string() + ".csv");
}

void run_spectrum(const ScatterScenario& sc, const json& o, const std::string& base,
                  ExecResult& res) {
    if (!o.contains("cuts")) throw ConfigError("options.cuts: required for spectrum");
    const int n = o["n"].get<int>();
    const PlaneWave inc = incident_from(sc, o);
    const EmitterSet em = EmitterSet::square(n, sc.lattice_d);
    const SiteSolution sol = solve_sites(sc, em, inc, cplx(1.0, 0.0), solve_options_from(o));

    const json& cuts = o["cuts"];
    for (std::size_t ci = 0; ci < cuts.size(); ++ci) {
        const json& c = cuts[ci];
        const std::string axis_name = opt_str(c, "axis", "x");
        const int axis = axis_name == "x" ? 0 : (axis_name == "y" ? 1 : 2);
        const int points = opt_int(c, "points", 512);
        const double lo = c["min"].get<double>();
        const double hi = c["max"].get<double>();
        const double h = points > 1 ? (hi - lo) / (points - 1) : 0.0;

        GridSpec grid;
        grid.nx = grid.ny = grid.nz = 1;
        Vec3 origin(opt_num(c, "x", 0.0), opt_num(c, "y", 0.0), opt_num(c, "z", 0.0));
        Vec3 step = Vec3::Zero();
        origin(axis) = lo;
        step(axis) = h;
        grid.origin = origin;
        grid.step = step;
        (axis == 0 ? grid.nx : axis == 1 ? grid.ny : grid.nz) = points;

        const FieldMap map = evaluate_field(sc, em, sol, grid);
        static const std::map<std::string, int> comps = {{"Ea_x", 0}, {"Ea_y", 1}, {"Ea_z", 2},
                                                         {"Eb_x", 3}, {"Eb_y", 4}, {"Eb_z", 5}};
        const int comp = comps.at(opt_str(c, "component", "Eb_y"));
        const std::string part_name = opt_str(c, "part", "re");
        const FieldPart part = part_name == "re"
                                   ? FieldPart::real_part
                                   : (part_name == "im" ? FieldPart::imag_part
                                                        : FieldPart::complex_full);
        const SpectralWindow window = opt_str(c, "window", "hann") == "rect"
                                          ? SpectralWindow::rectangular
                                          : SpectralWindow::hann;
        const SpectrumResult sp = spectrum_linecut(map, axis, 0, 0, comp, part, window);

        std::vector<std::uint8_t> is_peak(sp.q.size(), 0);
        for (int b : sp.peaks) is_peak[static_cast<std::size_t>(b)] = 1;
        Csv csv;
        csv.header({"q_" + axis_name + " [2pi/d]", "magnitude [|E0|]", "is_peak"});
        for (std::size_t i = 0; i < sp.q.size(); ++i)
            csv.row({format_double(sp.q[i]), format_double(sp.magnitude[i]),
                     format_double(is_peak[i])});
        const std::string suffix = cuts.size() == 1 ? "" : "-cut" + std::to_string(ci);
        csv.write(base + suffix + ".csv");
        res.outputs.push_back(fs::path(base).filename().string() + suffix + ".csv");
    }
}

ExecResult execute(const ParsedConfig& cfg, const std::string& stem, const fs::path& outdir) {
    fs::create_directories(outdir);
    ExecResult res;
    for (const ResolvedVariant& v : resolve_variants(cfg)) {
        const std::string name = v.name.empty() ? stem : stem + "-" + v.name;
        const std::string base = (outdir / name).string();
        if (cfg.command == "efficiency-sweep") {
            run_efficiency_sweep(v.scenario, v.options, base + ".csv", res);
            res.outputs.push_back(name + ".csv");
        } else if (cfg.command == "modeweights") {
            run_modeweights(v.scenario, v.options, base + ".csv");
            res.outputs.push_back(name + ".csv");
        } else if (cfg.command == "criticality") {
            run_criticality(v.scenario, v.options, base + ".csv");
            res.outputs.push_back(name + ".csv");
        } else if (cfg.command == "fieldmap") {
            run_fieldmap(v.scenario, v.options, base, res);
        } else if (cfg.command == "fwhm") {
            run_fwhm(v.scenario, v.options, base, res);
        } else {
            run_spectrum(v.scenario, v.options, base, res);
        }
    }
    return res;
}

// ---- config loading with CLI overrides ------------------------------------

struct CommonFlags {
    std::string config;
    std::string preset;
    std::string output = ".";
    int threads = 0;
    bool rwa = false, no_rwa = false;
    bool zero_real_part = false;
    std::optional<double> eta_recip;
    std::optional<long long> seed;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--preset", f.preset, "built-in figure preset (see list-presets)");
    sub->add_option("--output", f.output, "output directory")->capture_default_str();
    sub->add_option("--threads", f.threads, "worker threads (0 = hardware)");
    sub->add_flag("--rwa", f.rwa, "positive-frequency kernel only");
    sub->add_flag("--no-rwa", f.no_rwa, "full kernel (default)");
    sub->add_flag("--zero-real-part", f.zero_real_part,
                  "drop the Hermitian part of the collective coupling");
    sub->add_option("--eta", f.eta_recip, "resonance width in units of 2pi/d");
    sub->add_option("--seed", f.seed, "recorded in the manifest for reproduction");
}

// Loads config/preset, reconciles it with the invoked subcommand and applies
// scenario-level flag overrides; returns the parsed config plus a file stem.
ParsedConfig load_config(const std::string& subcommand, const CommonFlags& f,
                         std::string* stem_out) {
    if (!f.config.empty() && !f.preset.empty())
        throw ConfigError("give either --config or --preset, not both");
    json doc;
    std::string stem = subcommand;
    if (!f.preset.empty()) {
        doc = preset_config(f.preset);
        stem = f.preset;
    } else if (!f.config.empty()) {
        doc = json::parse(read_text_file(f.config));
        if (!doc.is_object()) throw ConfigError(f.config + ": expected a JSON object");
        stem = fs::path(f.config).stem().string();
    } else {
        doc = json{{"command", subcommand}};
    }

    if (doc.value("command", subcommand) != subcommand) {
        // subcommand overrides the config: keep only options it understands,
        // and only variants that change the scenario
        doc["command"] = subcommand;
        if (doc.contains("options"))
            doc["options"] = filter_options_for(subcommand, doc["options"]);
        if (doc.contains("variants")) {
            json kept = json::array();
            for (const auto& v : doc["variants"]) {
                if (!v.contains("scenario")) continue;
                json w = v;
                if (w.contains("options"))
                    w["options"] = filter_options_for(subcommand, w["options"]);
                kept.push_back(w);
            }
            doc["variants"] = kept;
        }
    }

    if (!doc.contains("scenario")) doc["scenario"] = json::object();
    json& scen = doc["scenario"];
    if (f.rwa && f.no_rwa) throw ConfigError("--rwa conflicts with --no-rwa");
    if (f.rwa) scen["rwa"] = true;
    if (f.no_rwa) scen["rwa"] = false;
    if (f.zero_real_part) scen["zero_real_part"] = true;
    if (f.eta_recip) {
        scen.erase("eta");
        scen["eta_recip"] = *f.eta_recip;
    }

    *stem_out = stem;
    const std::string source = f.config.empty() ? (f.preset.empty() ? "config" : f.preset)
                                                : f.config;
    return parse_config_json(doc, source);
}

int run_subcommand(const std::string& name, const CommonFlags& f,
                   const std::vector<std::string>& argv) {
    if (f.threads > 0) set_worker_count(f.threads);
    std::string stem;
    ParsedConfig cfg = load_config(name, f, &stem);
    const auto t0 = std::chrono::steady_clock::now();
    const ExecResult res = execute(cfg, stem, f.output);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunManifest manifest = make_manifest(cfg, argv, res.outputs, wall);
    manifest.doc["stem"] = stem;
    if (f.seed) manifest.doc["seed"] = *f.seed;
    const std::string mpath = (fs::path(f.output) / (stem + "-manifest.json")).string();
    manifest.write(mpath);

    for (const std::string& out : res.outputs)
        std::printf("wrote %s\n", (fs::path(f.output) / out).string().c_str());
    std::printf("wrote %s\n", mpath.c_str());
    if (res.failed_rows > 0) {
        std::fprintf(stderr, "%d grid point(s) failed; see the error column\n", res.failed_rows);
        return 2;
    }
    return 0;
}

int run_replay(const std::string& manifest_path, const std::string& output, int threads) {
    if (threads > 0) set_worker_count(threads);
    const json doc = json::parse(read_text_file(manifest_path));
    if (doc.value("format", "") != std::string("transducer-run/1"))
        throw ConfigError(manifest_path + ": not a transducer run manifest");
    ParsedConfig cfg = parse_config_json(doc["config"], manifest_path + ":config");
    const std::string stem = doc.value("stem", std::string("replay"));
    const fs::path refdir = output.empty() ? fs::path(manifest_path).parent_path()
                                           : fs::path(output);
    const fs::path tmpdir = refdir / (stem + "-replay");

    execute(cfg, stem, tmpdir);

    int mismatches = 0;
    for (const auto& out : doc["outputs"]) {
        const std::string name = out.get<std::string>();
        const fs::path fresh = tmpdir / name;
        const fs::path ref = refdir / name;
        if (!fs::exists(ref)) {
            fs::create_directories(ref.parent_path().empty() ? refdir : ref.parent_path());
            fs::copy_file(fresh, ref);
            std::printf("%-10s %s\n", "written", ref.string().c_str());
            continue;
        }
        const bool same = read_text_file(fresh.string()) == read_text_file(ref.string());
        std::printf("%-10s %s\n", same ? "identical" : "DIFFERS", ref.string().c_str());
        if (!same) ++mismatches;
    }
    if (mismatches == 0) fs::remove_all(tmpdir);
    else std::fprintf(stderr, "replay outputs kept in %s\n", tmpdir.string().c_str());
    return mismatches == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photon-frequency transduction by a driven two-dimensional emitter array"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    const std::vector<std::string> argv_echo(argv, argv + argc);
    static const char* physics[] = {"efficiency-sweep", "modeweights", "criticality",
                                    "fieldmap",         "fwhm",        "spectrum"};
    static const char* summaries[] = {
        "transduction efficiency over a frequency / mixing / angle grid",
        "per-diffraction-order scattering probabilities at one frequency",
        "incoming frequencies at which idler orders cross the light cone",
        "finite-array field maps on the z=0 and y=0 planes",
        "scattering-lobe half-width growth for a range of array sizes",
        "windowed Fourier transform of a field line cut"};

    CommonFlags flags[6];
    for (int i = 0; i < 6; ++i) add_common(app.add_subcommand(physics[i], summaries[i]), flags[i]);

    std::string manifest_path, replay_output;
    int replay_threads = 0;
    CLI::App* replay = app.add_subcommand("replay", "re-run a manifest and verify outputs");
    replay->add_option("manifest", manifest_path, "run manifest to reproduce")->required();
    replay->add_option("--output", replay_output, "directory holding the reference outputs");
    replay->add_option("--threads", replay_threads, "worker threads (0 = hardware)");

    CLI::App* list = app.add_subcommand("list-presets", "show built-in figure presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const std::string& name : preset_names()) {
                const json p = preset_config(name);
                std::printf("%-6s %-16s %s\n", name.c_str(),
                            p["command"].get<std::string>().c_str(),
                            p.value("note", std::string()).c_str());
            }
            return 0;
        }
        if (replay->parsed()) return run_replay(manifest_path, replay_output, replay_threads);
        for (int i = 0; i < 6; ++i)
            if (app.get_subcommand(physics[i])->parsed())
                return run_subcommand(physics[i], flags[i], argv_echo);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
