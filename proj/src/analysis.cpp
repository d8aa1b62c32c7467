#include "capimg/analysis.hpp"

#include "capimg/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace capimg {

LineProfile line_profile(const ScanImage& img, std::size_t row) {
    if (row >= img.ny) throw BoundsError("row " + std::to_string(row) + " outside image");
    if (img.nx < 2) throw BoundsError("line profile needs at least two columns");
    LineProfile p;
    p.channel = img.channel;
    for (std::size_t i = 0; i < img.nx; ++i) {
        p.positions.push_back(img.x_of(i));
        p.values.push_back(img.at(row, i));
    }
    return p;
}

LineProfile line_profile(const ScanImage& img, Pixel a, Pixel b) {
    if (a.row >= img.ny || b.row >= img.ny || a.col >= img.nx || b.col >= img.nx) {
        throw BoundsError("line endpoints outside image");
    }
    const double dr = static_cast<double>(b.row) - static_cast<double>(a.row);
    const double dc = static_cast<double>(b.col) - static_cast<double>(a.col);
    const auto steps = static_cast<std::size_t>(std::max(std::abs(dr), std::abs(dc)));
    if (steps == 0) throw BoundsError("line endpoints coincide");
    LineProfile p;
    p.channel = img.channel;
    const double len = std::hypot(dr * img.meta.dy, dc * img.meta.dx);
    for (std::size_t s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(steps);
        const auto r = static_cast<std::size_t>(std::lround(static_cast<double>(a.row) + t * dr));
        const auto c = static_cast<std::size_t>(std::lround(static_cast<double>(a.col) + t * dc));
        p.positions.push_back(t * len);
        p.values.push_back(img.at(r, c));
    }
    return p;
}

FitResult linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("fit", "x and y lengths differ");
    if (x.size() < 2) throw Error("fit", "need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if (!(sxx > 0.0)) throw Error("fit", "x values are all equal");
    FitResult f;
    f.n_points = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double e = y[k] - (f.slope * x[k] + f.intercept);
        ss += e * e;
    }
    f.rmse = std::sqrt(ss / n);
    return f;
}

Footprint dilate(const Footprint& fp, std::size_t margin_px, std::size_t nx, std::size_t ny) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    const auto m = static_cast<std::ptrdiff_t>(margin_px);
    for (const auto& p : fp) {
        for (std::ptrdiff_t dr = -m; dr <= m; ++dr) {
            for (std::ptrdiff_t dc = -m; dc <= m; ++dc) {
                const auto r = static_cast<std::ptrdiff_t>(p.row) + dr;
                const auto c = static_cast<std::ptrdiff_t>(p.col) + dc;
                if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(ny) || c >= static_cast<std::ptrdiff_t>(nx)) {
                    continue;
                }
                seen.emplace(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            }
        }
    }
    Footprint out;
    out.reserve(seen.size());
    for (const auto& [r, c] : seen) out.push_back({r, c});
    return out;
}

std::vector<Footprint> footprints_from_defects(const SampleSpec& sample, const ImageMeta& meta, std::size_t nx,
                                               std::size_t ny) {
    std::vector<Footprint> out;
    for (const auto& d : sample.defects) {
        Footprint fp;
        for (std::size_t j = 0; j < ny; ++j) {
            const double y = meta.y0 + static_cast<double>(j) * meta.dy - d.center_y;
            for (std::size_t i = 0; i < nx; ++i) {
                const double x = meta.x0 + static_cast<double>(i) * meta.dx - d.center_x;
                bool inside = false;
                if (d.kind == DefectKind::flat_bottomed_hole) {
                    inside = std::hypot(x, y) <= 0.5 * d.size_x;
                } else if (d.kind == DefectKind::rect_void) {
                    inside = std::abs(x) <= 0.5 * d.size_x && std::abs(y) <= 0.5 * d.size_y;
                } else {
                    const double u = x / (0.5 * d.size_x), v = y / (0.5 * d.size_y);
                    inside = u * u + v * v <= 1.0;
                }
                if (inside) fp.push_back({j, i});
            }
        }
        if (fp.empty()) {
            const double ci = std::round((d.center_x - meta.x0) / meta.dx);
            const double cj = std::round((d.center_y - meta.y0) / meta.dy);
            if (ci >= 0 && cj >= 0 && ci < static_cast<double>(nx) && cj < static_cast<double>(ny)) {
                fp.push_back({static_cast<std::size_t>(cj), static_cast<std::size_t>(ci)});
            }
        }
        out.push_back(std::move(fp));
    }
    return out;
}

Pixel argmax(const ScanImage& img, const Footprint& region) {
    if (img.values.empty()) throw DimensionError("empty image");
    Pixel best{0, 0};
    double bv = -std::numeric_limits<double>::infinity();
    auto consider = [&](Pixel p) {
        const double v = img.at(p.row, p.col);
        if (v > bv) {
            bv = v;
            best = p;
        }
    };
    if (region.empty()) {
        for (std::size_t j = 0; j < img.ny; ++j) {
            for (std::size_t i = 0; i < img.nx; ++i) consider({j, i});
        }
    } else {
        for (const auto& p : region) {
            if (p.row >= img.ny || p.col >= img.nx) throw BoundsError("region pixel outside image");
            consider(p);
        }
    }
    return best;
}

DefectReport peaks_per_defect(const ScanImage& img, const std::vector<Footprint>& footprints,
                              std::size_t margin_px, std::span<const std::pair<double, double>> truth) {
    if (!truth.empty() && truth.size() != footprints.size()) {
        throw DimensionError("ground-truth centers do not match the footprint count");
    }
    DefectReport rep;
    for (std::size_t n = 0; n < footprints.size(); ++n) {
        if (footprints[n].empty()) throw Error("analysis", "footprint " + std::to_string(n) + " is empty");
        for (const auto& p : footprints[n]) {
            if (p.row >= img.ny || p.col >= img.nx) throw BoundsError("footprint pixel outside image");
        }
        DefectPeak peak;
        peak.region = dilate(footprints[n], margin_px, img.nx, img.ny);
        peak.location = argmax(img, peak.region);
        peak.value = img.at(peak.location.row, peak.location.col);
        peak.x = img.x_of(peak.location.col);
        peak.y = img.y_of(peak.location.row);
        if (!truth.empty()) peak.localization_error = std::hypot(peak.x - truth[n].first, peak.y - truth[n].second);
        rep.defects.push_back(std::move(peak));
    }
    return rep;
}

namespace {

std::vector<double> normalized_peaks(const ScanImage& img, const std::vector<Footprint>& fps, std::size_t margin) {
    const auto rep = peaks_per_defect(img, fps, margin);
    std::vector<double> v;
    for (const auto& p : rep.defects) v.push_back(p.value);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double l = *lo, range = *hi - *lo;
    if (!(range > 0.0)) throw DegenerateRangeError("defect peaks are all equal");
    for (auto& x : v) x = (x - l) / range;
    return v;
}

}  // namespace

ChannelComparison compare_channels(const ScanImage& img_a, const ScanImage& img_b,
                                   const std::vector<Footprint>& footprints, std::span<const double> depths,
                                   std::size_t margin_px) {
    require_same_shape(img_a, img_b);
    if (depths.size() != footprints.size()) throw DimensionError("depth count does not match footprint count");
    ChannelComparison c;
    c.peaks_a = normalized_peaks(img_a, footprints, margin_px);
    c.peaks_b = normalized_peaks(img_b, footprints, margin_px);
    c.a = linear_fit(depths, c.peaks_a);
    c.b = linear_fit(depths, c.peaks_b);
    return c;
}

Snr snr_db(const ScanImage& img, const Footprint& signal, const Footprint& background) {
    if (signal.empty() || background.empty()) throw Error("snr", "regions must be non-empty");
    auto mean_of = [&](const Footprint& fp) {
        double s = 0;
        for (const auto& p : fp) {
            if (p.row >= img.ny || p.col >= img.nx) throw BoundsError("region pixel outside image");
            s += img.at(p.row, p.col);
        }
        return s / static_cast<double>(fp.size());
    };
    const double ms = mean_of(signal), mb = mean_of(background);
    double var = 0;
    for (const auto& p : background) {
        const double e = img.at(p.row, p.col) - mb;
        var += e * e;
    }
    const double sd = std::sqrt(var / static_cast<double>(background.size()));
    const double contrast = std::abs(ms - mb);
    Snr out;
    if (!(sd > 0.0)) {
        out.infinite = true;
        out.db = contrast > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        return out;
    }
    out.db = contrast > 0.0 ? 20.0 * std::log10(contrast / sd) : -std::numeric_limits<double>::infinity();
    out.infinite = !std::isfinite(out.db);
    return out;
}

}  // namespace capimg
