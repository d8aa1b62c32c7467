#pragma once

// Compositions used by the command-line tool and the acceptance suite.

#include "capimg/analysis.hpp"
#include "capimg/config.hpp"
#include "capimg/scanner.hpp"

#include <string>
#include <vector>

namespace capimg {

/// Writes R, PHI, X, Y (CSV and/or PGM per `out`) into `dir`; returns the
/// written file names.
std::vector<std::string> write_scan(const ScanResult& scan, const std::string& dir, const OutputConfig& out);

/// Writes one image as <CHANNEL>.csv / <CHANNEL>.pgm into `dir`.
std::vector<std::string> write_channel(const ScanImage& img, const std::string& dir, const OutputConfig& out);

struct FusedSet {
    ScanImage r_norm, phi_norm, delta, xi, delta_p, xi_p;
};
FusedSet fuse_all(const ScanImage& r, const ScanImage& phi, const FusionConfig& cfg);

struct AnalysisReport {
    std::vector<Footprint> footprints;
    std::vector<double> depths;
    std::size_t dilation = 0;
    ChannelComparison r_vs_delta;  ///< a = R defect contrast (1 - R_norm), b = DELTA
    DefectReport xi_peaks;
    Pixel xi_global_argmax;
    bool xi_global_in_footprint = false;
    std::vector<bool> xi_local_in_footprint;  ///< per defect, argmax over its search window
    Snr snr_r, snr_phi, snr_delta, snr_xi;
    std::size_t line_row = 0;
    LineProfile profile_r, profile_delta;
};

/// Depth-series evaluation of one scan: fused channels, per-defect peaks,
/// linear fits against depth, Xi localization and SNRs.
AnalysisReport analyze(const RunConfig& cfg, const Probe& probe, const ScanImage& r, const ScanImage& phi);

std::string report_json(const AnalysisReport& rep);
std::string profiles_csv(const AnalysisReport& rep);

/// Pixels of the image nearer to defect `n` than to any other defect.
Footprint search_window(const std::vector<Footprint>& footprints, std::size_t n, std::size_t nx, std::size_t ny);

}  // namespace capimg
