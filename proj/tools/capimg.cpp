// capimg: command-line front end.

#include "capimg/config.hpp"
#include "capimg/error.hpp"
#include "capimg/fusion.hpp"
#include "capimg/io.hpp"
#include "capimg/kernels.hpp"
#include "capimg/lockin.hpp"
#include "capimg/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace capimg;

namespace {

std::string one_line(std::string s) {
    for (char& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
        if (c == '"') c = '\'';
    }
    return s;
}

void report_error(const std::string& code, const std::string& msg) {
    std::cerr << "error code=" << code << " msg=\"" << one_line(msg) << "\"\n";
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

// Output directory for probe k when the config lists several probes.
std::string probe_dir(const std::string& root, const RunConfig& cfg, std::size_t k) {
    if (cfg.probes.size() == 1) return root;
    return (fs::path(root) / (std::to_string(k) + "_" + probe_name(cfg.probes[k]))).string();
}

int cmd_simulate(const std::string& config, const std::string& out, bool quiet) {
    const RunConfig cfg = parse_config(config);
    const std::string root = out.empty() ? cfg.output.directory : out;
    for (std::size_t k = 0; k < cfg.probes.size(); ++k) {
        ScanProgress progress;
        if (!quiet) {
            progress = [k](std::size_t done, std::size_t total) {
                if (done == total || done % 50 == 0) {
                    std::cerr << "probe " << k << ": " << done << "/" << total << "\r" << std::flush;
                }
            };
        }
        const ScanResult scan = run_scan(cfg.sample, cfg.probes[k], cfg.plan, cfg.settings, progress);
        if (!quiet) std::cerr << "\n";
        const std::string dir = probe_dir(root, cfg, k);
        for (const auto& f : write_scan(scan, dir, cfg.output)) std::cout << (fs::path(dir) / f).string() << "\n";
    }
    return 0;
}

int cmd_fuse(const std::string& r_path, const std::string& phi_path, const std::string& mode,
             std::optional<double> guard, bool no_unwrap, const std::string& out, int bits) {
    const IngestResult in = ingest_csv(r_path, phi_path);
    for (const auto& w : in.warnings) warn(w);
    FusionConfig fc;
    fc.mode = parse_mode(mode);
    if (guard) fc.xi_guard = *guard;
    fc.unwrap_phase = !no_unwrap;
    const ScanImage img = fuse(in.r, in.phi, fc);
    const fs::path p(out);
    if (p.extension() == ".pgm") {
        const std::string w = io::export_pgm(img, out, bits);
        if (!w.empty()) warn(w);
    } else {
        io::write_image_csv(img, out);
    }
    std::cout << out << "\n";
    return 0;
}

int cmd_analyze(const std::string& config, const std::string& images, const std::string& out,
                const std::string& profile_out) {
    const RunConfig cfg = parse_config(config);
    nlohmann::json all = nlohmann::json::array();
    std::string profiles;
    for (std::size_t k = 0; k < cfg.probes.size(); ++k) {
        const std::string dir = probe_dir(images, cfg, k);
        const IngestResult in =
            ingest_csv((fs::path(dir) / "R.csv").string(), (fs::path(dir) / "PHI.csv").string());
        for (const auto& w : in.warnings) warn(w);
        ScanImage r = in.r, phi = in.phi;
        if (cfg.analysis.crop_margin > 0) {
            r = crop_margin(r, cfg.analysis.crop_margin);
            phi = crop_margin(phi, cfg.analysis.crop_margin);
        }
        const AnalysisReport rep = analyze(cfg, cfg.probes[k], r, phi);
        auto j = nlohmann::json::parse(report_json(rep));
        j["probe"] = probe_name(cfg.probes[k]);
        all.push_back(j);
        if (k == 0) profiles = profiles_csv(rep);
    }
    io::write_text(out, (cfg.probes.size() == 1 ? all[0] : all).dump(2) + "\n");
    if (!profile_out.empty()) io::write_text(profile_out, profiles);
    std::cout << out << "\n";
    return 0;
}

int cmd_demod(const std::string& input, double f_in, double v_ref, double theta_ref, const std::string& out) {
    const TimeSeries ts = io::read_timeseries_csv(input);
    const Demodulation d = demodulate(ts, {f_in, v_ref, theta_ref});
    nlohmann::json j = {{"X", d.x}, {"Y", d.y}, {"R", d.r}, {"PHI", d.phi}, {"samples", ts.samples.size()}};
    io::write_text(out, j.dump(2) + "\n");
    std::cout << out << "\n";
    return 0;
}

int cmd_sensitivity(const std::string& config, const std::string& out, double rel_delta, bool all_voxels,
                    std::size_t probe_index) {
    const RunConfig cfg = parse_config(config);
    if (probe_index >= cfg.probes.size()) throw Error("invalid-argument", "probe index out of range");
    // Probe at the middle of the scan plan.
    Probe probe = cfg.probes[probe_index];
    probe.x = cfg.plan.x0 + 0.5 * static_cast<double>(cfg.plan.nx_points - 1) * cfg.plan.dx;
    probe.y = cfg.plan.y0 + 0.5 * static_cast<double>(cfg.plan.ny_points - 1) * cfg.plan.dy;
    probe.lift_off = cfg.plan.lift_off;
    probe.orientation = cfg.plan.orientation;
    const GridBuild gb = build_grid(cfg.sample, probe, cfg.settings.grid);
    std::vector<std::uint8_t> mask = gb.sample_mask;
    if (all_voxels) mask.assign(mask.size(), 1);
    const double delta = rel_delta * cfg.sample.eps_r.real();
    const SensitivityMap m = sensitivity_map(gb.grid, gb.bc, cfg.plan.v_drive, delta, cfg.settings.solver, mask);
    io::write_volume_csv(out, "sensitivity", m.nx, m.ny, m.nz, gb.grid.h, m.values);
    std::cout << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Capacitive imaging simulator: scan synthesis, lock-in demodulation, amplitude/phase fusion"};
    app.require_subcommand(1);
    std::string kernels;
    app.add_option("--kernels", kernels, "Kernel backend (scalar, avx2); default picks the best available");

    std::string config, out, images, r_path, phi_path, mode = "delta", input, profile_out;
    std::optional<double> guard;
    bool no_unwrap = false, quiet = false, all_voxels = false;
    int bits = 8;
    double f_in = 15e3, v_ref = 1.0, theta_ref = 0.0, rel_delta = 0.01;
    std::size_t probe_index = 0;

    auto* sim = app.add_subcommand("simulate", "Run a virtual scan and write R, PHI, X, Y images");
    sim->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out, "Output directory (default: output.directory from the config)");
    sim->add_flag("--quiet", quiet, "No progress output");

    auto* fu = app.add_subcommand("fuse", "Fuse R and PHI images");
    fu->add_option("--r", r_path, "R image CSV")->required()->check(CLI::ExistingFile);
    fu->add_option("--phi", phi_path, "PHI image CSV")->required()->check(CLI::ExistingFile);
    fu->add_option("--mode", mode, "delta | xi | delta_prime | xi_prime");
    fu->add_option("--guard", guard, "Xi denominator guard");
    fu->add_flag("--no-unwrap", no_unwrap, "Skip phase centering before normalization");
    fu->add_option("--bits", bits, "PGM bit depth when --out ends in .pgm")->check(CLI::IsMember({8, 16}));
    fu->add_option("--out", out, "Output file (.csv or .pgm)")->required();

    auto* an = app.add_subcommand("analyze", "Per-defect peaks, depth fits and localization");
    an->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    an->add_option("--images", images, "Directory holding R.csv and PHI.csv")->required()->check(CLI::ExistingDirectory);
    an->add_option("--out", out, "Report JSON")->required();
    an->add_option("--profile", profile_out, "Optional line-profile CSV");

    auto* de = app.add_subcommand("demod", "Lock-in demodulation of a time-series CSV");
    de->add_option("--input", input, "Time-series CSV (t,v)")->required()->check(CLI::ExistingFile);
    de->add_option("--fin", f_in, "Reference frequency, Hz");
    de->add_option("--vref", v_ref, "Reference amplitude, V");
    de->add_option("--thetaref", theta_ref, "Reference phase, rad");
    de->add_option("--out", out, "Result JSON")->required();

    auto* se = app.add_subcommand("sensitivity", "Brute-force sensitivity volume at the scan centre");
    se->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    se->add_option("--out", out, "Volume CSV")->required();
    se->add_option("--delta", rel_delta, "Perturbation relative to the sample eps'")->check(CLI::PositiveNumber);
    se->add_flag("--all-voxels", all_voxels, "Perturb air voxels as well as the sample");
    se->add_option("--probe", probe_index, "Probe index when the config lists several");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        report_error("usage", e.what());
        return 2;
    }

    try {
        if (!kernels.empty() && !kernels::select(kernels)) {
            throw Error("invalid-argument", "kernel backend not available: " + kernels);
        }
        if (*sim) return cmd_simulate(config, out, quiet);
        if (*fu) return cmd_fuse(r_path, phi_path, mode, guard, no_unwrap, out, bits);
        if (*an) return cmd_analyze(config, images, out, profile_out);
        if (*de) return cmd_demod(input, f_in, v_ref, theta_ref, out);
        if (*se) return cmd_sensitivity(config, out, rel_delta, all_voxels, probe_index);
    } catch (const Error& e) {
        report_error(e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error("internal", e.what());
        return 1;
    }
    return 0;
}
