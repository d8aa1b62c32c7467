#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace capimg {

enum class Channel { X, Y, R, PHI, R_NORM, PHI_NORM, DELTA, XI, DELTA_P, XI_P, MASK };

std::string_view channel_name(Channel c);
std::optional<Channel> parse_channel(std::string_view name);
/// Units tag written to CSV headers.
std::string_view default_units(Channel c);

/// Scan geometry carried along with every image.
struct ImageMeta {
    double x0 = 0.0;  ///< position of column 0, m
    double y0 = 0.0;  ///< position of row 0, m
    double dx = 1.0;
    double dy = 1.0;
    std::string units = "arb";
};

/// ny rows by nx columns, row-major; row j is scan line y = y0 + j dy.
struct ScanImage {
    Channel channel = Channel::R;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> values;
    ImageMeta meta;

    ScanImage() = default;
    ScanImage(Channel c, std::size_t cols, std::size_t rows, ImageMeta m = {})
        : channel(c), nx(cols), ny(rows), values(cols * rows, 0.0), meta(std::move(m)) {}

    double& at(std::size_t row, std::size_t col) { return values[row * nx + col]; }
    double at(std::size_t row, std::size_t col) const { return values[row * nx + col]; }
    std::size_t size() const { return values.size(); }
    bool same_shape(const ScanImage& o) const { return nx == o.nx && ny == o.ny; }
    double x_of(std::size_t col) const { return meta.x0 + static_cast<double>(col) * meta.dx; }
    double y_of(std::size_t row) const { return meta.y0 + static_cast<double>(row) * meta.dy; }
};

/// Throws DimensionError naming both shapes when they differ.
void require_same_shape(const ScanImage& a, const ScanImage& b);

}  // namespace capimg
