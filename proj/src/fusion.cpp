#include "capimg/fusion.hpp"

#include "capimg/error.hpp"
#include "capimg/kernels.hpp"
#include "capimg/lockin.hpp"

#include <cmath>
#include <string>

namespace capimg {

std::string_view mode_name(FusionMode m) {
    switch (m) {
        case FusionMode::delta: return "delta";
        case FusionMode::xi: return "xi";
        case FusionMode::delta_prime: return "delta_prime";
        case FusionMode::xi_prime: return "xi_prime";
    }
    return "?";
}

FusionMode parse_mode(std::string_view name) {
    for (auto m : {FusionMode::delta, FusionMode::xi, FusionMode::delta_prime, FusionMode::xi_prime}) {
        if (mode_name(m) == name) return m;
    }
    throw Error("fusion", "unknown fusion mode '" + std::string(name) + "'");
}

Channel output_channel(FusionMode m) {
    switch (m) {
        case FusionMode::delta: return Channel::DELTA;
        case FusionMode::xi: return Channel::XI;
        case FusionMode::delta_prime: return Channel::DELTA_P;
        case FusionMode::xi_prime: return Channel::XI_P;
    }
    return Channel::DELTA;
}

void validate(const FusionConfig& cfg) {
    const bool xi = cfg.mode == FusionMode::xi || cfg.mode == FusionMode::xi_prime;
    if (!(cfg.xi_guard >= 0.0) || (xi && !(cfg.xi_guard > 0.0))) {
        throw Error("fusion", "xi_guard must be > 0 for xi modes");
    }
}

ScanImage minmax_normalize(const ScanImage& img) {
    if (img.values.empty()) throw DegenerateRangeError("cannot normalize an empty image");
    for (double v : img.values) {
        if (!std::isfinite(v)) throw DegenerateRangeError("image contains non-finite values");
    }
    const auto& K = kernels::active();
    double lo = 0, hi = 0;
    K.minmax(img.size(), img.values.data(), &lo, &hi);
    if (!(hi > lo)) throw DegenerateRangeError("image is constant; min-max range is zero");
    ScanImage out = img;
    if (img.channel == Channel::R) out.channel = Channel::R_NORM;
    if (img.channel == Channel::PHI) out.channel = Channel::PHI_NORM;
    out.meta.units = "1";
    K.normalize(img.size(), img.values.data(), lo, hi - lo, out.values.data());
    return out;
}

ScanImage center_phase(const ScanImage& phi) {
    double s = 0.0, c = 0.0;
    for (double a : phi.values) {
        s += std::sin(a);
        c += std::cos(a);
    }
    const double mean = std::atan2(s, c);
    ScanImage out = phi;
    for (auto& a : out.values) a = wrap_phase(a - mean);
    return out;
}

namespace {

void check_pair(const ScanImage& r, const ScanImage& phi) { require_same_shape(r, phi); }

ScanImage like(const ScanImage& src, Channel c) {
    ScanImage out(c, src.nx, src.ny, src.meta);
    out.meta.units = "1";
    return out;
}

ScanImage xi_core(const ScanImage& r_norm, const ScanImage& phi_like, double guard, bool renormalize,
                  Channel c) {
    if (!(guard >= 0.0)) throw Error("fusion", "xi guard must be >= 0");
    const auto& K = kernels::active();
    if (guard == 0.0) {
        double lo = 0, hi = 0;
        K.minmax(r_norm.size(), r_norm.values.data(), &lo, &hi);
        if (!(lo > 0.0)) throw Error("fusion", "xi guard 0 requires min(r_norm) > 0");
    }
    ScanImage out = like(r_norm, c);
    K.fuse_xi(out.size(), r_norm.values.data(), phi_like.values.data(), guard, out.values.data());
    if (renormalize) {
        out = minmax_normalize(out);
        out.channel = c;
    }
    return out;
}

ScanImage complement(const ScanImage& img) {
    ScanImage out = img;
    kernels::active().complement(img.size(), img.values.data(), out.values.data());
    return out;
}

}  // namespace

ScanImage fuse_delta(const ScanImage& r_norm, const ScanImage& phi_norm) {
    check_pair(r_norm, phi_norm);
    ScanImage out = like(r_norm, Channel::DELTA);
    kernels::active().fuse_delta(out.size(), r_norm.values.data(), phi_norm.values.data(), out.values.data());
    return out;
}

ScanImage fuse_xi(const ScanImage& r_norm, const ScanImage& phi_norm, double guard, bool renormalize) {
    check_pair(r_norm, phi_norm);
    return xi_core(r_norm, phi_norm, guard, renormalize, Channel::XI);
}

ScanImage fuse_delta_prime(const ScanImage& r_norm, const ScanImage& phi_norm) {
    check_pair(r_norm, phi_norm);
    ScanImage out = fuse_delta(r_norm, complement(phi_norm));
    out.channel = Channel::DELTA_P;
    return out;
}

ScanImage fuse_xi_prime(const ScanImage& r_norm, const ScanImage& phi_norm, double guard, bool renormalize) {
    check_pair(r_norm, phi_norm);
    return xi_core(r_norm, complement(phi_norm), guard, renormalize, Channel::XI_P);
}

ScanImage fuse(const ScanImage& r_raw, const ScanImage& phi_raw, const FusionConfig& cfg) {
    validate(cfg);
    check_pair(r_raw, phi_raw);
    const ScanImage r_norm = minmax_normalize(r_raw);
    const ScanImage phi_norm = minmax_normalize(cfg.unwrap_phase ? center_phase(phi_raw) : phi_raw);
    switch (cfg.mode) {
        case FusionMode::delta: return fuse_delta(r_norm, phi_norm);
        case FusionMode::xi: return fuse_xi(r_norm, phi_norm, cfg.xi_guard, cfg.renormalize_output);
        case FusionMode::delta_prime: return fuse_delta_prime(r_norm, phi_norm);
        case FusionMode::xi_prime: return fuse_xi_prime(r_norm, phi_norm, cfg.xi_guard, cfg.renormalize_output);
    }
    throw Error("fusion", "unreachable fusion mode");
}

ScanImage crop_margin(const ScanImage& img, std::size_t margin_px) {
    if (2 * margin_px >= img.nx || 2 * margin_px >= img.ny) {
        throw DimensionError("margin " + std::to_string(margin_px) + " too large for " + std::to_string(img.ny) +
                             "x" + std::to_string(img.nx) + " image");
    }
    ScanImage out(img.channel, img.nx - 2 * margin_px, img.ny - 2 * margin_px, img.meta);
    out.meta.x0 = img.x_of(margin_px);
    out.meta.y0 = img.y_of(margin_px);
    for (std::size_t j = 0; j < out.ny; ++j) {
        for (std::size_t i = 0; i < out.nx; ++i) out.at(j, i) = img.at(j + margin_px, i + margin_px);
    }
    return out;
}

ScanImage threshold(const ScanImage& img, double t) {
    if (!std::isfinite(t)) throw Error("threshold", "threshold must be finite");
    ScanImage out(Channel::MASK, img.nx, img.ny, img.meta);
    out.meta.units = "1";
    for (std::size_t k = 0; k < img.size(); ++k) out.values[k] = img.values[k] >= t ? 1.0 : 0.0;
    return out;
}

}  // namespace capimg
