#include "capimg/config.hpp"

#include "capimg/error.hpp"
#include "capimg/io.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

namespace capimg {

using nlohmann::json;

namespace {

/// Object view that records which keys were read so leftovers can be
/// reported as unknown.
class Obj {
  public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
    }
    ~Obj() = default;

    std::string at_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) {
        used_.insert(key);
        return j_.contains(key);
    }
    const json& get(const std::string& key) {
        if (!has(key)) throw ConfigError(at_path(key), "missing required key");
        return j_.at(key);
    }
    double number(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) throw ConfigError(at_path(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(at_path(key), "must be finite");
        return d;
    }
    double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
    double positive(const std::string& key) {
        const double d = number(key);
        if (!(d > 0.0)) throw ConfigError(at_path(key), "must be > 0");
        return d;
    }
    double positive_or(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }
    std::size_t count(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw ConfigError(at_path(key), "expected a non-negative integer");
        }
        return v.get<std::size_t>();
    }
    std::size_t count_or(const std::string& key, std::size_t fallback) { return has(key) ? count(key) : fallback; }
    bool boolean_or(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(at_path(key), "expected true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& key) {
        const json& v = get(key);
        if (!v.is_string()) throw ConfigError(at_path(key), "expected a string");
        return v.get<std::string>();
    }
    std::string string_or(const std::string& key, const std::string& fallback) {
        return has(key) ? string(key) : fallback;
    }
    Complex complex(const std::string& key) {
        const json& v = get(key);
        if (v.is_number()) return {v.get<double>(), 0.0};
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw ConfigError(at_path(key), "expected [re, im]");
        }
        return {v[0].get<double>(), v[1].get<double>()};
    }
    void finish() const {
        for (const auto& [k, _] : j_.items()) {
            if (!used_.count(k)) throw ConfigError(at_path(k), "unknown key");
        }
    }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

DefectKind parse_defect_kind(const std::string& s, const std::string& path) {
    if (s == "flat_bottomed_hole") return DefectKind::flat_bottomed_hole;
    if (s == "rect_void") return DefectKind::rect_void;
    if (s == "ellipsoid_blob") return DefectKind::ellipsoid_blob;
    throw ConfigError(path, "unknown defect kind '" + s + "'");
}

std::string defect_kind_name(DefectKind k) {
    switch (k) {
        case DefectKind::flat_bottomed_hole: return "flat_bottomed_hole";
        case DefectKind::rect_void: return "rect_void";
        case DefectKind::ellipsoid_blob: return "ellipsoid_blob";
    }
    return "?";
}

SampleSpec parse_sample(const json& j) {
    Obj o(j, "sample");
    SampleSpec s;
    s.width = o.positive("width");
    s.length = o.positive("length");
    s.thickness = o.positive("thickness");
    s.eps_r = o.complex("eps_r");
    if (s.eps_r.real() < 1.0 || s.eps_r.imag() > 0.0) {
        throw ConfigError("sample.eps_r", "requires Re >= 1 and Im <= 0");
    }
    if (o.has("defects")) {
        const json& arr = o.get("defects");
        if (!arr.is_array()) throw ConfigError("sample.defects", "expected an array");
        for (std::size_t n = 0; n < arr.size(); ++n) {
            const std::string path = "sample.defects[" + std::to_string(n) + "]";
            Obj d(arr[n], path);
            DefectSpec spec;
            spec.kind = parse_defect_kind(d.string("kind"), d.at_path("kind"));
            const json& c = d.get("center");
            if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
                throw ConfigError(d.at_path("center"), "expected [x, y]");
            }
            spec.center_x = c[0].get<double>();
            spec.center_y = c[1].get<double>();
            const json& ls = d.get("lateral_size");
            if (ls.is_number()) {
                spec.size_x = spec.size_y = ls.get<double>();
            } else if (ls.is_array() && ls.size() == 2 && ls[0].is_number() && ls[1].is_number()) {
                spec.size_x = ls[0].get<double>();
                spec.size_y = ls[1].get<double>();
            } else {
                throw ConfigError(d.at_path("lateral_size"), "expected a number or [x, y]");
            }
            if (!(spec.size_x > 0.0) || !(spec.size_y > 0.0)) {
                throw ConfigError(d.at_path("lateral_size"), "must be > 0");
            }
            spec.depth = d.positive("depth");
            if (spec.depth > s.thickness) throw ConfigError(d.at_path("depth"), "exceeds sample thickness");
            spec.center_z = d.number_or("center_z", -1.0);
            spec.fill_eps = d.has("fill_eps") ? d.complex("fill_eps") : Complex{1.0, 0.0};
            if (!(spec.fill_eps.real() > 0.0)) throw ConfigError(d.at_path("fill_eps"), "real part must be > 0");
            d.finish();
            s.defects.push_back(spec);
        }
    }
    o.finish();
    try {
        validate(s);
    } catch (const Error& e) {
        throw ConfigError("sample", e.what());
    }
    return s;
}

Probe parse_probe(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string kind = o.string("kind");
    Obj p(o.get("params"), path + ".params");
    Probe probe;
    if (kind == "back_to_back") {
        const double s = p.positive("s"), b = p.positive("b"), h = p.positive("h");
        probe = make_back_to_back(s, b, h);
    } else if (kind == "concentric") {
        const double r1 = p.positive("R1"), r2 = p.positive("R2"), r3 = p.positive("R3");
        if (!(r1 < r2)) throw ConfigError(p.at_path("R2"), "requires R1 < R2");
        if (!(r2 < r3)) throw ConfigError(p.at_path("R3"), "requires R2 < R3");
        probe = make_concentric(r1, r2, r3);
    } else {
        throw ConfigError(o.at_path("kind"), "unknown probe kind '" + kind + "'");
    }
    p.finish();
    probe.swapped = o.boolean_or("swap_roles", false);
    o.finish();
    return probe;
}

NoiseModel parse_noise(const json& j) {
    Obj o(j, "plan.noise");
    NoiseModel n;
    const std::string kind = o.string_or("kind", "none");
    if (kind == "none") {
        n.kind = NoiseKind::none;
    } else if (kind == "white_gaussian") {
        n.kind = NoiseKind::white_gaussian;
    } else {
        throw ConfigError("plan.noise.kind", "unknown noise kind '" + kind + "'");
    }
    n.sigma = o.number_or("sigma", 0.0);
    if (n.sigma < 0.0) throw ConfigError("plan.noise.sigma", "must be >= 0");
    n.seed = o.count_or("seed", 0);
    o.finish();
    return n;
}

ScanPlan parse_plan(const json& j) {
    Obj o(j, "plan");
    ScanPlan p;
    p.x0 = o.number("x0");
    p.y0 = o.number("y0");
    p.dx = o.positive("dx");
    p.dy = o.positive("dy");
    p.nx_points = o.count("nx_points");
    p.ny_points = o.count("ny_points");
    if (p.nx_points < 1) throw ConfigError("plan.nx_points", "must be >= 1");
    if (p.ny_points < 1) throw ConfigError("plan.ny_points", "must be >= 1");
    p.lift_off = o.number("lift_off");
    if (p.lift_off < 0.0) throw ConfigError("plan.lift_off", "must be >= 0");
    p.orientation = o.number_or("orientation", 0.0);
    p.f_in = o.positive_or("f_in", p.f_in);
    p.v_drive = o.positive_or("v_drive", p.v_drive);
    p.gain = o.positive_or("gain", p.gain);
    p.extra_phase = o.number_or("extra_phase", p.extra_phase);
    p.v_ref = o.positive_or("v_ref", p.v_ref);
    p.theta_ref = o.number_or("theta_ref", p.theta_ref);
    p.n_periods = o.count_or("n_periods", p.n_periods);
    if (p.n_periods < 1) throw ConfigError("plan.n_periods", "must be >= 1");
    p.fs = o.positive_or("fs", p.fs);
    if (!(p.fs > 2.0 * p.f_in)) throw ConfigError("plan.fs", "must exceed 2 f_in");
    if (o.has("noise")) p.noise = parse_noise(o.get("noise"));
    o.finish();
    return p;
}

ScanSettings parse_solver(const json& j) {
    Obj o(j, "solver");
    ScanSettings s;
    s.solver.tol = o.positive_or("tol", s.solver.tol);
    s.solver.max_iter = o.count_or("max_iter", s.solver.max_iter);
    s.grid.resolution = o.positive_or("resolution", s.grid.resolution);
    s.grid.padding = o.has("padding") ? o.positive("padding") : -1.0;
    s.grid.shield = o.boolean_or("shield", true);
    const std::string outer = o.string_or("outer", "neumann");
    if (outer == "neumann") {
        s.grid.outer = OuterBoundary::neumann;
    } else if (outer == "dirichlet") {
        s.grid.outer = OuterBoundary::dirichlet_zero;
    } else {
        throw ConfigError("solver.outer", "expected 'neumann' or 'dirichlet'");
    }
    s.threads = static_cast<unsigned>(o.count_or("threads", 1));
    if (s.threads < 1) throw ConfigError("solver.threads", "must be >= 1");
    o.finish();
    return s;
}

FusionConfig parse_fusion(const json& j) {
    Obj o(j, "fusion");
    FusionConfig f;
    if (o.has("mode")) {
        try {
            f.mode = parse_mode(o.string("mode"));
        } catch (const Error& e) {
            throw ConfigError("fusion.mode", e.what());
        }
    }
    f.xi_guard = o.number_or("xi_guard", f.xi_guard);
    if (!(f.xi_guard > 0.0)) throw ConfigError("fusion.xi_guard", "must be > 0");
    f.renormalize_output = o.boolean_or("renormalize_output", f.renormalize_output);
    f.unwrap_phase = o.boolean_or("unwrap_phase", f.unwrap_phase);
    o.finish();
    return f;
}

AnalysisConfig parse_analysis(const json& j) {
    Obj o(j, "analysis");
    AnalysisConfig a;
    if (o.has("footprints")) {
        const json& f = o.get("footprints");
        if (f.is_string()) {
            if (f.get<std::string>() != "auto") throw ConfigError("analysis.footprints", "expected \"auto\" or pixel lists");
        } else if (f.is_array()) {
            for (std::size_t n = 0; n < f.size(); ++n) {
                Footprint fp;
                const std::string path = "analysis.footprints[" + std::to_string(n) + "]";
                if (!f[n].is_array() || f[n].empty()) throw ConfigError(path, "expected a non-empty list of [row, col]");
                for (const auto& px : f[n]) {
                    if (!px.is_array() || px.size() != 2 || !px[0].is_number_unsigned() || !px[1].is_number_unsigned()) {
                        throw ConfigError(path, "expected [row, col] pairs");
                    }
                    fp.push_back({px[0].get<std::size_t>(), px[1].get<std::size_t>()});
                }
                a.footprints.push_back(std::move(fp));
            }
        } else {
            throw ConfigError("analysis.footprints", "expected \"auto\" or pixel lists");
        }
    }
    if (o.has("depths")) {
        const json& d = o.get("depths");
        if (d.is_array()) {
            for (const auto& v : d) {
                if (!v.is_number()) throw ConfigError("analysis.depths", "expected numbers");
                a.depths.push_back(v.get<double>());
            }
        } else if (!(d.is_string() && d.get<std::string>() == "auto")) {
            throw ConfigError("analysis.depths", "expected \"auto\" or a number list");
        }
    }
    if (o.has("line_row")) {
        const json& r = o.get("line_row");
        if (r.is_number_unsigned()) {
            a.line_row = r.get<std::size_t>();
        } else if (!(r.is_string() && r.get<std::string>() == "auto")) {
            throw ConfigError("analysis.line_row", "expected \"auto\" or a row index");
        }
    }
    a.crop_margin = o.count_or("margin", 0);
    if (o.has("dilation")) {
        const json& d = o.get("dilation");
        if (d.is_number_unsigned()) {
            a.dilation = d.get<std::size_t>();
        } else if (!(d.is_string() && d.get<std::string>() == "auto")) {
            throw ConfigError("analysis.dilation", "expected \"auto\" or a pixel count");
        }
    }
    o.finish();
    return a;
}

OutputConfig parse_output(const json& j) {
    Obj o(j, "output");
    OutputConfig out;
    out.directory = o.string_or("directory", out.directory);
    if (o.has("formats")) {
        const json& f = o.get("formats");
        if (!f.is_array()) throw ConfigError("output.formats", "expected a list");
        out.csv = out.pgm = false;
        for (const auto& v : f) {
            const std::string s = v.is_string() ? v.get<std::string>() : "";
            if (s == "csv") {
                out.csv = true;
            } else if (s == "pgm") {
                out.pgm = true;
            } else {
                throw ConfigError("output.formats", "unknown format '" + s + "'");
            }
        }
    }
    out.pgm_bit_depth = static_cast<int>(o.count_or("pgm_bit_depth", 8));
    if (out.pgm_bit_depth != 8 && out.pgm_bit_depth != 16) throw ConfigError("output.pgm_bit_depth", "must be 8 or 16");
    o.finish();
    return out;
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

json probe_json(const Probe& p) {
    json j;
    j["kind"] = probe_name(p);
    if (const auto* b = std::get_if<BackToBackParams>(&p.params)) {
        j["params"] = {{"s", b->gap}, {"b", b->width}, {"h", b->length}};
    } else {
        const auto& c = std::get<ConcentricParams>(p.params);
        j["params"] = {{"R1", c.r1}, {"R2", c.r2}, {"R3", c.r3}};
    }
    if (p.swapped) j["swap_roles"] = true;
    return j;
}

}  // namespace

std::string probe_name(const Probe& p) { return p.kind == ProbeKind::back_to_back ? "back_to_back" : "concentric"; }

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    Obj root(j, "");
    RunConfig cfg;
    cfg.sample = parse_sample(root.get("sample"));
    const json& pj = root.get("probe");
    if (pj.is_array()) {
        if (pj.empty()) throw ConfigError("probe", "needs at least one probe");
        for (std::size_t n = 0; n < pj.size(); ++n) cfg.probes.push_back(parse_probe(pj[n], "probe[" + std::to_string(n) + "]"));
    } else {
        cfg.probes.push_back(parse_probe(pj, "probe"));
    }
    cfg.plan = parse_plan(root.get("plan"));
    if (root.has("solver")) cfg.settings = parse_solver(root.get("solver"));
    if (root.has("fusion")) cfg.fusion = parse_fusion(root.get("fusion"));
    if (root.has("analysis")) cfg.analysis = parse_analysis(root.get("analysis"));
    if (root.has("output")) cfg.output = parse_output(root.get("output"));
    root.finish();
    if (!cfg.analysis.depths.empty() && !cfg.analysis.footprints.empty() &&
        cfg.analysis.depths.size() != cfg.analysis.footprints.size()) {
        throw ConfigError("analysis.depths", "length differs from analysis.footprints");
    }
    return cfg;
}

RunConfig parse_config(const std::string& path) { return parse_config_text(io::read_text(path)); }

std::string serialize_config(const RunConfig& cfg) {
    json j;
    auto& s = j["sample"];
    s["width"] = cfg.sample.width;
    s["length"] = cfg.sample.length;
    s["thickness"] = cfg.sample.thickness;
    s["eps_r"] = complex_json(cfg.sample.eps_r);
    s["defects"] = json::array();
    for (const auto& d : cfg.sample.defects) {
        json dj;
        dj["kind"] = defect_kind_name(d.kind);
        dj["center"] = json::array({d.center_x, d.center_y});
        dj["lateral_size"] = json::array({d.size_x, d.size_y});
        dj["depth"] = d.depth;
        if (d.center_z >= 0.0) dj["center_z"] = d.center_z;
        dj["fill_eps"] = complex_json(d.fill_eps);
        s["defects"].push_back(dj);
    }
    if (cfg.probes.size() == 1) {
        j["probe"] = probe_json(cfg.probes.front());
    } else {
        j["probe"] = json::array();
        for (const auto& p : cfg.probes) j["probe"].push_back(probe_json(p));
    }
    const auto& p = cfg.plan;
    j["plan"] = {{"x0", p.x0},
                 {"y0", p.y0},
                 {"dx", p.dx},
                 {"dy", p.dy},
                 {"nx_points", p.nx_points},
                 {"ny_points", p.ny_points},
                 {"lift_off", p.lift_off},
                 {"orientation", p.orientation},
                 {"f_in", p.f_in},
                 {"v_drive", p.v_drive},
                 {"gain", p.gain},
                 {"extra_phase", p.extra_phase},
                 {"v_ref", p.v_ref},
                 {"theta_ref", p.theta_ref},
                 {"n_periods", p.n_periods},
                 {"fs", p.fs},
                 {"noise",
                  {{"kind", p.noise.kind == NoiseKind::none ? "none" : "white_gaussian"},
                   {"sigma", p.noise.sigma},
                   {"seed", p.noise.seed}}}};
    const auto& st = cfg.settings;
    j["solver"] = {{"tol", st.solver.tol},
                   {"max_iter", st.solver.max_iter},
                   {"resolution", st.grid.resolution},
                   {"shield", st.grid.shield},
                   {"outer", st.grid.outer == OuterBoundary::neumann ? "neumann" : "dirichlet"},
                   {"threads", st.threads}};
    if (st.grid.padding >= 0.0) j["solver"]["padding"] = st.grid.padding;
    j["fusion"] = {{"mode", std::string(mode_name(cfg.fusion.mode))},
                   {"xi_guard", cfg.fusion.xi_guard},
                   {"renormalize_output", cfg.fusion.renormalize_output},
                   {"unwrap_phase", cfg.fusion.unwrap_phase}};
    auto& a = j["analysis"];
    if (cfg.analysis.footprints.empty()) {
        a["footprints"] = "auto";
    } else {
        a["footprints"] = json::array();
        for (const auto& fp : cfg.analysis.footprints) {
            json arr = json::array();
            for (const auto& px : fp) arr.push_back(json::array({px.row, px.col}));
            a["footprints"].push_back(arr);
        }
    }
    if (cfg.analysis.depths.empty()) {
        a["depths"] = "auto";
    } else {
        a["depths"] = cfg.analysis.depths;
    }
    if (cfg.analysis.line_row) {
        a["line_row"] = *cfg.analysis.line_row;
    } else {
        a["line_row"] = "auto";
    }
    a["margin"] = cfg.analysis.crop_margin;
    if (cfg.analysis.dilation) {
        a["dilation"] = *cfg.analysis.dilation;
    } else {
        a["dilation"] = "auto";
    }
    json formats = json::array();
    if (cfg.output.csv) formats.push_back("csv");
    if (cfg.output.pgm) formats.push_back("pgm");
    j["output"] = {{"directory", cfg.output.directory}, {"formats", formats}, {"pgm_bit_depth", cfg.output.pgm_bit_depth}};
    return j.dump(2) + "\n";
}

std::size_t effective_dilation(const RunConfig& cfg, const Probe& probe) {
    if (cfg.analysis.dilation) return *cfg.analysis.dilation;
    double width = 0.0;
    if (const auto* b = std::get_if<BackToBackParams>(&probe.params)) {
        width = b->width;
    } else {
        width = 2.0 * std::get<ConcentricParams>(probe.params).r1;
    }
    return static_cast<std::size_t>(std::lround(width / std::min(cfg.plan.dx, cfg.plan.dy)));
}

}  // namespace capimg
