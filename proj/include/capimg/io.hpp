#pragma once

#include "capimg/fieldsolver.hpp"
#include "capimg/image.hpp"
#include "capimg/lockin.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace capimg::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Scan image CSV:
//   # channel=R
//   # nx=41,ny=21,dx=0.004,dy=0.004,units=V2,x0=0.01,y0=0.01
//   ny rows of nx comma-separated values, row j = y index j.
void write_image_csv(const ScanImage& img, const std::string& path);
std::string image_csv_text(const ScanImage& img);

struct ImageCsv {
    ScanImage image;
    std::vector<std::string> warnings;
};
/// Parses the scan CSV. Missing header lines fall back to dx = dy = 1 and
/// arbitrary units with a warning. Throws ParseError with 1-based row/col.
ImageCsv read_image_csv(const std::string& path);
ImageCsv parse_image_csv(const std::string& text, const std::string& source = "<text>");

/// Two-column CSV with a "t,v" header.
void write_timeseries_csv(const TimeSeries& ts, const std::string& path);
TimeSeries read_timeseries_csv(const std::string& path);

/// Real volume dump: z-major slabs of row-major x-y planes, one "# k=..."
/// comment line before each slab.
void write_volume_csv(const std::string& path, const std::string& name, std::size_t nx, std::size_t ny,
                      std::size_t nz, double h, std::span<const double> values);

/// Binary P5 PGM, row 0 on top, values min-max mapped to [0, maxval].
/// Returns a warning string when the image is constant (all pixels 0).
std::string export_pgm(const ScanImage& img, const std::string& path, int bit_depth);
std::vector<std::uint8_t> pgm_bytes(const ScanImage& img, int bit_depth, std::string* warning = nullptr);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace capimg::io
