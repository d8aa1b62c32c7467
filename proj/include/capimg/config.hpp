#pragma once

#include "capimg/analysis.hpp"
#include "capimg/fusion.hpp"
#include "capimg/geometry.hpp"
#include "capimg/scanner.hpp"

#include <optional>
#include <string>
#include <vector>

namespace capimg {

struct AnalysisConfig {
    /// Explicit per-defect pixel sets; empty derives them from the defects.
    std::vector<Footprint> footprints;
    /// Fit abscissae; empty uses the defect depths.
    std::vector<double> depths;
    /// Row for the line profile; unset picks the row nearest the defects' mean y.
    std::optional<std::size_t> line_row;
    std::size_t crop_margin = 0;
    /// Footprint dilation in pixels; unset uses one probe width.
    std::optional<std::size_t> dilation;
};

struct OutputConfig {
    std::string directory = "out";
    bool csv = true;
    bool pgm = true;
    int pgm_bit_depth = 8;
};

struct RunConfig {
    SampleSpec sample;
    std::vector<Probe> probes;  ///< at least one
    ScanPlan plan;
    ScanSettings settings;
    FusionConfig fusion;
    AnalysisConfig analysis;
    OutputConfig output;
};

/// Strict parse: unknown keys and invalid values throw ConfigError carrying
/// the JSON path of the offending key.
RunConfig parse_config_text(const std::string& json_text);
RunConfig parse_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

/// Short name of a probe kind ("back_to_back" / "concentric").
std::string probe_name(const Probe& p);

/// Dilation used for peak extraction: the configured value, else the probe
/// width (b, or the drive disc diameter) in scan pixels.
std::size_t effective_dilation(const RunConfig& cfg, const Probe& probe);

}  // namespace capimg
