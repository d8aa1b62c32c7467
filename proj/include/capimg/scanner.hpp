#pragma once

#include "capimg/fieldsolver.hpp"
#include "capimg/geometry.hpp"
#include "capimg/image.hpp"
#include "capimg/lockin.hpp"

#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace capimg {

/// Virtual raster scan. Probe position (i, j) is (x0 + i dx, y0 + j dy);
/// image row j holds scan line j.
struct ScanPlan {
    double x0 = 0.0, y0 = 0.0;
    double dx = 1e-3, dy = 1e-3;
    std::size_t nx_points = 1, ny_points = 1;
    double lift_off = 3e-3;
    double orientation = 0.0;
    double f_in = 15e3;
    double v_drive = 10.0;  ///< amplitude; 20 V peak-to-peak
    double gain = 1e12;     ///< charge amplifier, V/C
    /// Phase added by the amplifier chain. The Gauss-surface charge on the
    /// sense electrode is opposite in sign to the drive, so the default
    /// inverting stage brings theta_out near zero.
    double extra_phase = std::numbers::pi;
    double v_ref = 1.0;
    double theta_ref = 0.0;
    std::size_t n_periods = 30;
    double fs = 1e6;
    NoiseModel noise;  ///< per-position seed = noise.seed + (j nx_points + i)

    ReferenceSignal reference() const { return {f_in, v_ref, theta_ref}; }
    ImageMeta meta(Channel c) const;
};

void validate(const ScanPlan& plan);

struct ScanSettings {
    SolverConfig solver;
    GridOptions grid;
    unsigned threads = 1;
};

struct PositionMeasurement {
    InducedCharge charge;
    AmplifierOutput amplifier;
    Demodulation demod;
    std::size_t iterations = 0;
};

/// Probe placed at scan position (i, j) of the plan.
Probe probe_at(const Probe& probe, const ScanPlan& plan, std::size_t i, std::size_t j);

/// Field of the probe over a laterally unbounded, defect-free copy of the
/// sample. Every scan position starts its solve from it, which keeps the
/// result independent of evaluation order.
PotentialField reference_field(const SampleSpec& sample, const Probe& probe, const ScanPlan& plan,
                               const ScanSettings& settings);

/// One measurement: rasterize, solve, induced charge, amplifier, synthesize,
/// demodulate. `probe` must already sit at the measurement position.
PositionMeasurement measure_at(const SampleSpec& sample, const Probe& probe, const ScanPlan& plan,
                               const ScanSettings& settings, std::uint64_t seed,
                               const PotentialField* warm_start);

struct ScanResult {
    ScanImage r, phi, x, y;
    std::size_t total_iterations = 0;
};

using ScanProgress = std::function<void(std::size_t done, std::size_t total)>;

/// Throws ScanPositionError wrapping the first failing position.
ScanResult run_scan(const SampleSpec& sample, const Probe& probe, const ScanPlan& plan,
                    const ScanSettings& settings, const ScanProgress& progress = {});

struct IngestResult {
    ScanImage r, phi;
    std::vector<std::string> warnings;
};

/// Loads externally measured R and phi grids (scan CSV format).
IngestResult ingest_csv(const std::string& r_path, const std::string& phi_path);

}  // namespace capimg
