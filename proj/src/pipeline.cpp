#include "capimg/pipeline.hpp"

#include "capimg/error.hpp"
#include "capimg/fusion.hpp"
#include "capimg/io.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <limits>

namespace capimg {

namespace fs = std::filesystem;

std::vector<std::string> write_channel(const ScanImage& img, const std::string& dir, const OutputConfig& out) {
    fs::create_directories(dir);
    std::vector<std::string> files;
    const std::string base = std::string(channel_name(img.channel));
    if (out.csv) {
        io::write_image_csv(img, (fs::path(dir) / (base + ".csv")).string());
        files.push_back(base + ".csv");
    }
    if (out.pgm) {
        io::export_pgm(img, (fs::path(dir) / (base + ".pgm")).string(), out.pgm_bit_depth);
        files.push_back(base + ".pgm");
    }
    return files;
}

std::vector<std::string> write_scan(const ScanResult& scan, const std::string& dir, const OutputConfig& out) {
    std::vector<std::string> files;
    for (const ScanImage* img : {&scan.r, &scan.phi, &scan.x, &scan.y}) {
        auto f = write_channel(*img, dir, out);
        files.insert(files.end(), f.begin(), f.end());
    }
    return files;
}

FusedSet fuse_all(const ScanImage& r, const ScanImage& phi, const FusionConfig& cfg) {
    validate(cfg);
    FusedSet s;
    s.r_norm = minmax_normalize(r);
    s.phi_norm = minmax_normalize(cfg.unwrap_phase ? center_phase(phi) : phi);
    s.delta = fuse_delta(s.r_norm, s.phi_norm);
    s.xi = fuse_xi(s.r_norm, s.phi_norm, cfg.xi_guard, cfg.renormalize_output);
    s.delta_p = fuse_delta_prime(s.r_norm, s.phi_norm);
    s.xi_p = fuse_xi_prime(s.r_norm, s.phi_norm, cfg.xi_guard, cfg.renormalize_output);
    return s;
}

Footprint search_window(const std::vector<Footprint>& footprints, std::size_t n, std::size_t nx, std::size_t ny) {
    std::vector<std::pair<double, double>> centers;
    for (const auto& fp : footprints) {
        double r = 0, c = 0;
        for (const auto& p : fp) {
            r += static_cast<double>(p.row);
            c += static_cast<double>(p.col);
        }
        const double k = static_cast<double>(std::max<std::size_t>(fp.size(), 1));
        centers.emplace_back(r / k, c / k);
    }
    Footprint out;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            std::size_t best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < centers.size(); ++m) {
                const double d = std::hypot(static_cast<double>(j) - centers[m].first,
                                            static_cast<double>(i) - centers[m].second);
                if (d < bd) {
                    bd = d;
                    best = m;
                }
            }
            if (best == n) out.push_back({j, i});
        }
    }
    return out;
}

namespace {

bool contains(const Footprint& fp, Pixel p) {
    for (const auto& q : fp) {
        if (q == p) return true;
    }
    return false;
}

}  // namespace

AnalysisReport analyze(const RunConfig& cfg, const Probe& probe, const ScanImage& r, const ScanImage& phi) {
    require_same_shape(r, phi);
    AnalysisReport rep;
    const FusedSet f = fuse_all(r, phi, cfg.fusion);

    rep.footprints = cfg.analysis.footprints.empty()
                         ? footprints_from_defects(cfg.sample, r.meta, r.nx, r.ny)
                         : cfg.analysis.footprints;
    for (std::size_t n = 0; n < rep.footprints.size(); ++n) {
        if (rep.footprints[n].empty()) {
            throw Error("analysis", "defect " + std::to_string(n) + " has no scan pixel inside its outline");
        }
    }
    if (!cfg.analysis.depths.empty()) {
        rep.depths = cfg.analysis.depths;
    } else {
        for (const auto& d : cfg.sample.defects) rep.depths.push_back(d.depth);
    }
    rep.dilation = effective_dilation(cfg, probe);

    // Air-filled defects lower the sensed amplitude; their contrast in R is
    // 1 - R_norm.
    ScanImage r_contrast = f.r_norm;
    for (auto& v : r_contrast.values) v = 1.0 - v;

    if (rep.footprints.size() >= 2 && rep.depths.size() == rep.footprints.size()) {
        rep.r_vs_delta = compare_channels(r_contrast, f.delta, rep.footprints, rep.depths, rep.dilation);
    }

    if (!rep.footprints.empty()) {
        std::vector<std::pair<double, double>> truth;
        if (cfg.analysis.footprints.empty()) {
            for (const auto& d : cfg.sample.defects) truth.emplace_back(d.center_x, d.center_y);
        }
        rep.xi_peaks = peaks_per_defect(f.xi, rep.footprints, rep.dilation, truth);
        rep.xi_global_argmax = argmax(f.xi);
        rep.xi_global_in_footprint = false;
        for (const auto& pk : rep.xi_peaks.defects) {
            if (contains(pk.region, rep.xi_global_argmax)) rep.xi_global_in_footprint = true;
        }
        for (std::size_t n = 0; n < rep.footprints.size(); ++n) {
            const Footprint window = search_window(rep.footprints, n, r.nx, r.ny);
            rep.xi_local_in_footprint.push_back(contains(rep.xi_peaks.defects[n].region, argmax(f.xi, window)));
        }

        Footprint signal, background;
        std::vector<std::uint8_t> near(r.size(), 0);
        for (const auto& pk : rep.xi_peaks.defects) {
            for (const auto& p : pk.region) near[p.row * r.nx + p.col] = 1;
        }
        for (const auto& fp : rep.footprints) signal.insert(signal.end(), fp.begin(), fp.end());
        for (std::size_t j = 0; j < r.ny; ++j) {
            for (std::size_t i = 0; i < r.nx; ++i) {
                if (!near[j * r.nx + i]) background.push_back({j, i});
            }
        }
        if (!background.empty()) {
            rep.snr_r = snr_db(r, signal, background);
            rep.snr_phi = snr_db(phi, signal, background);
            rep.snr_delta = snr_db(f.delta, signal, background);
            rep.snr_xi = snr_db(f.xi, signal, background);
        }
    }

    if (cfg.analysis.line_row) {
        rep.line_row = *cfg.analysis.line_row;
    } else if (!cfg.sample.defects.empty()) {
        double my = 0;
        for (const auto& d : cfg.sample.defects) my += d.center_y;
        my /= static_cast<double>(cfg.sample.defects.size());
        const double row = std::round((my - r.meta.y0) / r.meta.dy);
        rep.line_row = static_cast<std::size_t>(std::clamp(row, 0.0, static_cast<double>(r.ny - 1)));
    } else {
        rep.line_row = r.ny / 2;
    }
    if (r.nx >= 2) {
        rep.profile_r = line_profile(f.r_norm, rep.line_row);
        rep.profile_delta = line_profile(f.delta, rep.line_row);
    }
    return rep;
}

namespace {

nlohmann::json fit_json(const FitResult& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"rmse", f.rmse}, {"n_points", f.n_points}};
}

nlohmann::json snr_json(const Snr& s) {
    nlohmann::json j;
    if (std::isfinite(s.db)) {
        j["db"] = s.db;
    } else {
        j["db"] = s.db > 0 ? "inf" : "-inf";
    }
    j["infinite"] = s.infinite;
    return j;
}

}  // namespace

std::string report_json(const AnalysisReport& rep) {
    using nlohmann::json;
    json j;
    j["dilation_px"] = rep.dilation;
    j["depths"] = rep.depths;
    j["fits"] = {{"r_contrast", fit_json(rep.r_vs_delta.a)}, {"delta", fit_json(rep.r_vs_delta.b)}};
    j["normalized_peaks"] = {{"r_contrast", rep.r_vs_delta.peaks_a}, {"delta", rep.r_vs_delta.peaks_b}};
    json peaks = json::array();
    for (std::size_t n = 0; n < rep.xi_peaks.defects.size(); ++n) {
        const auto& p = rep.xi_peaks.defects[n];
        json pj = {{"value", p.value},
                   {"row", p.location.row},
                   {"col", p.location.col},
                   {"x", p.x},
                   {"y", p.y},
                   {"argmax_in_window_inside_footprint",
                    n < rep.xi_local_in_footprint.size() ? static_cast<bool>(rep.xi_local_in_footprint[n]) : false}};
        if (p.localization_error) pj["localization_error"] = *p.localization_error;
        peaks.push_back(pj);
    }
    j["xi"] = {{"peaks", peaks},
               {"global_argmax", {rep.xi_global_argmax.row, rep.xi_global_argmax.col}},
               {"global_argmax_in_footprint", rep.xi_global_in_footprint}};
    j["snr_db"] = {{"R", snr_json(rep.snr_r)},
                   {"PHI", snr_json(rep.snr_phi)},
                   {"DELTA", snr_json(rep.snr_delta)},
                   {"XI", snr_json(rep.snr_xi)}};
    j["line_row"] = rep.line_row;
    return j.dump(2) + "\n";
}

std::string profiles_csv(const AnalysisReport& rep) {
    std::string s = "position,R_NORM,DELTA\n";
    for (std::size_t k = 0; k < rep.profile_r.positions.size(); ++k) {
        s += io::format_double(rep.profile_r.positions[k]) + "," + io::format_double(rep.profile_r.values[k]) + "," +
             io::format_double(rep.profile_delta.values[k]) + "\n";
    }
    return s;
}

}  // namespace capimg
