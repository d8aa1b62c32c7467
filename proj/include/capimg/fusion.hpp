#pragma once

#include "capimg/image.hpp"

#include <string_view>

namespace capimg {

// Amplitude/phase fusion. With R_norm and phi_norm the min-max normalized
// amplitude and phase images:
//   delta  = phi_norm (1 - R_norm)
//   xi     = phi_norm / (R_norm + guard)
//   delta' = (1 - phi_norm)(1 - R_norm)
//   xi'    = (1 - phi_norm) / (R_norm + guard)
// The primed forms cover amplifier chains that invert the phase.

enum class FusionMode { delta, xi, delta_prime, xi_prime };

std::string_view mode_name(FusionMode m);
FusionMode parse_mode(std::string_view name);  ///< throws Error("fusion") when unknown
Channel output_channel(FusionMode m);

struct FusionConfig {
    FusionMode mode = FusionMode::delta;
    double xi_guard = 1e-3;
    bool renormalize_output = true;  ///< xi modes only
    /// Rotate raw phases so their circular mean is zero before normalizing.
    bool unwrap_phase = true;
};

void validate(const FusionConfig& cfg);

/// (img - min) / (max - min). R and PHI map to R_NORM and PHI_NORM; other
/// channels keep their tag. Throws DegenerateRangeError for constant input.
ScanImage minmax_normalize(const ScanImage& img);

/// Rotates every phase by minus the circular mean and wraps to (-pi, pi].
/// Valid while the phase spread stays well inside one turn.
ScanImage center_phase(const ScanImage& phi);

ScanImage fuse_delta(const ScanImage& r_norm, const ScanImage& phi_norm);
/// guard may be 0 only when min(r_norm) > 0.
ScanImage fuse_xi(const ScanImage& r_norm, const ScanImage& phi_norm, double guard, bool renormalize);
ScanImage fuse_delta_prime(const ScanImage& r_norm, const ScanImage& phi_norm);
ScanImage fuse_xi_prime(const ScanImage& r_norm, const ScanImage& phi_norm, double guard, bool renormalize);

/// Full chain from raw R and phi: optional phase centering, normalization
/// and the configured operator.
ScanImage fuse(const ScanImage& r_raw, const ScanImage& phi_raw, const FusionConfig& cfg);

/// Interior block without `margin_px` pixels on each side; origin metadata
/// shifts accordingly. Throws DimensionError when 2 margin >= either side.
ScanImage crop_margin(const ScanImage& img, std::size_t margin_px);

/// MASK image: 1 where img >= t, else 0.
ScanImage threshold(const ScanImage& img, double t);

}  // namespace capimg
