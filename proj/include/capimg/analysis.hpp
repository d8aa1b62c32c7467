#pragma once

#include "capimg/geometry.hpp"
#include "capimg/image.hpp"

#include <optional>
#include <span>
#include <vector>

namespace capimg {

struct Pixel {
    std::size_t row = 0;
    std::size_t col = 0;
    bool operator==(const Pixel&) const = default;
};

using Footprint = std::vector<Pixel>;

struct LineProfile {
    std::vector<double> positions;  ///< m along the line, strictly increasing
    std::vector<double> values;
    Channel channel = Channel::R;
};

/// Full image row `row`; positions are x coordinates of the columns.
LineProfile line_profile(const ScanImage& img, std::size_t row);
/// Nearest-pixel samples along the segment a -> b, one per pixel step of
/// the longer axis. Positions are distances from a.
LineProfile line_profile(const ScanImage& img, Pixel a, Pixel b);

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double rmse = 0.0;  ///< sqrt(mean squared residual), 1/n convention
    std::size_t n_points = 0;
};

/// Ordinary least squares y = slope x + intercept. Throws Error("fit") for
/// fewer than two points, unequal lengths or constant x.
FitResult linear_fit(std::span<const double> x, std::span<const double> y);

struct DefectPeak {
    double value = 0.0;
    Pixel location;
    double x = 0.0, y = 0.0;  ///< m
    std::optional<double> localization_error;  ///< m, when the true center is known
    Footprint region;  ///< dilated footprint searched
};

struct DefectReport {
    std::vector<DefectPeak> defects;
};

/// Grows a footprint by `margin_px` pixels (Chebyshev distance), clipped to
/// the image.
Footprint dilate(const Footprint& fp, std::size_t margin_px, std::size_t nx, std::size_t ny);

/// Scan pixels whose probe position lies inside the lateral outline of each
/// defect. Defects smaller than a pixel get the nearest pixel.
std::vector<Footprint> footprints_from_defects(const SampleSpec& sample, const ImageMeta& meta, std::size_t nx,
                                               std::size_t ny);

/// Max over each footprint dilated by `margin_px`. `truth` (x, y centers in
/// m), when non-empty, fills the localization error.
DefectReport peaks_per_defect(const ScanImage& img, const std::vector<Footprint>& footprints,
                              std::size_t margin_px,
                              std::span<const std::pair<double, double>> truth = {});

struct ChannelComparison {
    FitResult a, b;
    std::vector<double> peaks_a, peaks_b;  ///< min-max normalized across defects
};

/// Per-defect peaks of both channels, normalized across the defect set,
/// each fitted linearly against `depths`.
ChannelComparison compare_channels(const ScanImage& img_a, const ScanImage& img_b,
                                   const std::vector<Footprint>& footprints, std::span<const double> depths,
                                   std::size_t margin_px);

struct Snr {
    double db = 0.0;
    bool infinite = false;  ///< background std is zero; db is +inf (or -inf for zero contrast)
};

/// 20 log10(|mean(signal) - mean(background)| / std(background)), population std.
Snr snr_db(const ScanImage& img, const Footprint& signal, const Footprint& background);

/// Position of the largest value inside `region` (whole image when empty).
Pixel argmax(const ScanImage& img, const Footprint& region = {});

}  // namespace capimg
