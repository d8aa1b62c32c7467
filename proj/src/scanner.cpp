#include "capimg/scanner.hpp"

#include "capimg/error.hpp"
#include "capimg/io.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

namespace capimg {

ImageMeta ScanPlan::meta(Channel c) const {
    ImageMeta m;
    m.x0 = x0;
    m.y0 = y0;
    m.dx = dx;
    m.dy = dy;
    m.units = std::string(default_units(c));
    return m;
}

void validate(const ScanPlan& plan) {
    if (!(plan.dx > 0.0) || !(plan.dy > 0.0)) throw Error("scan-plan", "dx and dy must be positive");
    if (plan.nx_points < 1 || plan.ny_points < 1) throw Error("scan-plan", "scan needs at least one point per axis");
    if (!(plan.lift_off >= 0.0)) throw Error("scan-plan", "lift_off must be >= 0");
    if (!(plan.v_drive > 0.0)) throw Error("scan-plan", "v_drive must be positive");
    if (!(plan.gain > 0.0)) throw Error("scan-plan", "gain must be positive");
    if (!(plan.fs > 2.0 * plan.f_in)) throw SamplingError("scan fs must exceed 2 f_in");
    if (plan.n_periods < 1) throw SamplingError("n_periods must be >= 1");
}

Probe probe_at(const Probe& probe, const ScanPlan& plan, std::size_t i, std::size_t j) {
    Probe p = probe;
    p.x = plan.x0 + static_cast<double>(i) * plan.dx;
    p.y = plan.y0 + static_cast<double>(j) * plan.dy;
    p.lift_off = plan.lift_off;
    p.orientation = plan.orientation;
    return p;
}

PotentialField reference_field(const SampleSpec& sample, const Probe& probe, const ScanPlan& plan,
                               const ScanSettings& settings) {
    Probe p = probe_at(probe, plan, 0, 0);
    SampleSpec open = sample;
    open.defects.clear();
    const GridShape shape = grid_shape(open, p, settings.grid);
    const double h = 1.0 / settings.grid.resolution;
    // Slab wider than the local grid on every side.
    open.width = (static_cast<double>(shape.nx) + 4.0) * h;
    open.length = (static_cast<double>(shape.ny) + 4.0) * h;
    p.x = 0.5 * open.width;
    p.y = 0.5 * open.length;
    const GridBuild g = build_grid(open, p, settings.grid);
    return solve_potential(g.grid, g.bc, plan.v_drive, settings.solver);
}

PositionMeasurement measure_at(const SampleSpec& sample, const Probe& probe, const ScanPlan& plan,
                               const ScanSettings& settings, std::uint64_t seed,
                               const PotentialField* warm_start) {
    const GridBuild g = build_grid(sample, probe, settings.grid);
    const PotentialField field = solve_potential(g.grid, g.bc, plan.v_drive, settings.solver, warm_start);
    PositionMeasurement m;
    m.iterations = field.iterations;
    m.charge = induced_charge(field, g.grid, g.bc, plan.v_drive);
    m.amplifier = charge_to_voltage(m.charge, plan.gain, plan.extra_phase);
    NoiseModel noise = plan.noise;
    noise.seed = seed;
    const ReferenceSignal ref = plan.reference();
    const TimeSeries ts = synthesize(m.amplifier.v_out, m.amplifier.theta_out, ref, plan.fs, plan.n_periods, noise);
    m.demod = demodulate(ts, ref);
    return m;
}

ScanResult run_scan(const SampleSpec& sample, const Probe& probe, const ScanPlan& plan,
                    const ScanSettings& settings, const ScanProgress& progress) {
    validate(sample);
    validate(plan);
    const double pad = settings.grid.padding < 0.0 ? default_padding(probe_at(probe, plan, 0, 0))
                                                   : settings.grid.padding;
    const double x_last = plan.x0 + static_cast<double>(plan.nx_points - 1) * plan.dx;
    const double y_last = plan.y0 + static_cast<double>(plan.ny_points - 1) * plan.dy;
    if (plan.x0 < -pad || x_last > sample.width + pad || plan.y0 < -pad || y_last > sample.length + pad) {
        throw BoundsError("scan window leaves the sample footprint extended by the padding");
    }

    const PotentialField warm = reference_field(sample, probe, plan, settings);

    ScanResult out;
    out.r = ScanImage(Channel::R, plan.nx_points, plan.ny_points, plan.meta(Channel::R));
    out.phi = ScanImage(Channel::PHI, plan.nx_points, plan.ny_points, plan.meta(Channel::PHI));
    out.x = ScanImage(Channel::X, plan.nx_points, plan.ny_points, plan.meta(Channel::X));
    out.y = ScanImage(Channel::Y, plan.nx_points, plan.ny_points, plan.meta(Channel::Y));

    const std::size_t total = plan.nx_points * plan.ny_points;
    std::vector<std::size_t> iterations(total, 0);
    std::atomic<std::size_t> next{0}, done{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::exception_ptr error;
    std::size_t error_index = total;

    auto worker = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= total || failed.load()) return;
            const std::size_t i = idx % plan.nx_points, j = idx / plan.nx_points;
            try {
                const auto m = measure_at(sample, probe_at(probe, plan, i, j), plan, settings,
                                          plan.noise.seed + idx, &warm);
                out.r.at(j, i) = m.demod.r;
                out.phi.at(j, i) = m.demod.phi;
                out.x.at(j, i) = m.demod.x;
                out.y.at(j, i) = m.demod.y;
                iterations[idx] = m.iterations;
            } catch (...) {
                std::lock_guard lock(mu);
                if (idx < error_index) {
                    error_index = idx;
                    error = std::current_exception();
                }
                failed.store(true);
                return;
            }
            const std::size_t d = done.fetch_add(1) + 1;
            if (progress) {
                std::lock_guard lock(mu);
                progress(d, total);
            }
        }
    };

    const unsigned n_threads = std::max(1u, std::min<unsigned>(settings.threads, static_cast<unsigned>(total)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    if (error) {
        const std::size_t i = error_index % plan.nx_points, j = error_index / plan.nx_points;
        try {
            std::rethrow_exception(error);
        } catch (const Error& e) {
            throw ScanPositionError(i, j, e.code(), e.what());
        } catch (const std::exception& e) {
            throw ScanPositionError(i, j, "internal", e.what());
        }
    }
    for (auto n : iterations) out.total_iterations += n;
    return out;
}

IngestResult ingest_csv(const std::string& r_path, const std::string& phi_path) {
    auto r = io::read_image_csv(r_path);
    auto phi = io::read_image_csv(phi_path);
    require_same_shape(r.image, phi.image);
    IngestResult out;
    out.r = std::move(r.image);
    out.phi = std::move(phi.image);
    out.r.channel = Channel::R;
    out.phi.channel = Channel::PHI;
    out.warnings = std::move(r.warnings);
    out.warnings.insert(out.warnings.end(), phi.warnings.begin(), phi.warnings.end());
    return out;
}

}  // namespace capimg
