#include "capimg/geometry.hpp"

#include "capimg/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace capimg {

namespace {

// Closed-interval membership slack, relative to the voxel size. Boundaries
// that fall exactly on a voxel center include that voxel on both sides.
constexpr double kTieSlack = 1e-9;

bool finite(Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double hole_radius(const DefectSpec& d) { return 0.5 * d.size_x; }

double defect_half_x(const DefectSpec& d) {
    return d.kind == DefectKind::flat_bottomed_hole ? hole_radius(d) : 0.5 * d.size_x;
}

double defect_half_y(const DefectSpec& d) {
    return d.kind == DefectKind::flat_bottomed_hole ? hole_radius(d) : 0.5 * d.size_y;
}

double defect_center_z(const DefectSpec& d, double thickness) {
    return d.center_z < 0.0 ? 0.5 * thickness : d.center_z;
}

bool inside_defect(const DefectSpec& d, double thickness, double x, double y, double z,
                   double slack) {
    const double dx = x - d.center_x;
    const double dy = y - d.center_y;
    switch (d.kind) {
        case DefectKind::flat_bottomed_hole: {
            const double r = hole_radius(d) + slack;
            return dx * dx + dy * dy <= r * r && z >= -slack && z <= d.depth + slack;
        }
        case DefectKind::rect_void: {
            const double zc = defect_center_z(d, thickness);
            return std::abs(dx) <= 0.5 * d.size_x + slack && std::abs(dy) <= 0.5 * d.size_y + slack &&
                   std::abs(z - zc) <= 0.5 * d.depth + slack;
        }
        case DefectKind::ellipsoid_blob: {
            const double zc = defect_center_z(d, thickness);
            const double ax = 0.5 * d.size_x + slack;
            const double ay = 0.5 * d.size_y + slack;
            const double az = 0.5 * d.depth + slack;
            const double u = dx / ax, v = dy / ay, w = (z - zc) / az;
            return u * u + v * v + w * w <= 1.0;
        }
    }
    return false;
}

}  // namespace

void validate(const SampleSpec& sample) {
    if (!(sample.width > 0.0) || !(sample.length > 0.0) || !(sample.thickness > 0.0)) {
        throw GeometryError("sample dimensions must be positive");
    }
    if (!finite(sample.eps_r) || sample.eps_r.real() < 1.0 || sample.eps_r.imag() > 0.0) {
        throw GeometryError("sample eps_r must satisfy Re >= 1 and Im <= 0");
    }
    for (std::size_t n = 0; n < sample.defects.size(); ++n) {
        const auto& d = sample.defects[n];
        const std::string tag = "defects[" + std::to_string(n) + "]";
        if (!(d.size_x > 0.0) || (d.kind != DefectKind::flat_bottomed_hole && !(d.size_y > 0.0))) {
            throw GeometryError(tag + ": lateral size must be positive");
        }
        if (!(d.depth > 0.0) || d.depth > sample.thickness) {
            throw GeometryError(tag + ": depth must lie in (0, thickness]");
        }
        if (!finite(d.fill_eps) || !(d.fill_eps.real() > 0.0)) {
            throw GeometryError(tag + ": fill_eps must have a positive real part");
        }
        const double hx = defect_half_x(d), hy = defect_half_y(d);
        if (d.center_x - hx < 0.0 || d.center_x + hx > sample.width || d.center_y - hy < 0.0 ||
            d.center_y + hy > sample.length) {
            throw BoundsError(tag + ": defect extends outside the sample footprint");
        }
        if (d.kind != DefectKind::flat_bottomed_hole) {
            const double zc = defect_center_z(d, sample.thickness);
            if (zc - 0.5 * d.depth < 0.0 || zc + 0.5 * d.depth > sample.thickness) {
                throw BoundsError(tag + ": defect extends outside the sample thickness");
            }
        }
    }
}

ElectrodeRole Probe::role_at(double px, double py) const {
    const double dx = px - x, dy = py - y;
    const double c = std::cos(orientation), s = std::sin(orientation);
    const double u = c * dx + s * dy;   // along main axis
    const double v = -s * dx + c * dy;  // across
    if (const auto* p = std::get_if<BackToBackParams>(&params)) {
        const double slack = kTieSlack * p->gap;
        if (std::abs(v) > 0.5 * p->width + slack) return ElectrodeRole::none;
        const double a = std::abs(u);
        if (a < 0.5 * p->gap - slack || a > 0.5 * p->gap + p->length + slack) return ElectrodeRole::none;
        const bool negative_side = u < 0.0;
        return (negative_side != swapped) ? ElectrodeRole::drive : ElectrodeRole::sense;
    }
    const auto& p = std::get<ConcentricParams>(params);
    const double slack = kTieSlack * p.r1;
    const double r = std::hypot(u, v);
    if (r <= p.r1 + slack) return ElectrodeRole::drive;
    if (r >= p.r2 - slack && r <= p.r3 + slack) return ElectrodeRole::sense;
    return ElectrodeRole::none;
}

double Probe::reach() const {
    if (const auto* p = std::get_if<BackToBackParams>(&params)) {
        return std::hypot(0.5 * p->gap + p->length, 0.5 * p->width);
    }
    return std::get<ConcentricParams>(params).r3;
}

double Probe::half_extent_x() const {
    if (const auto* p = std::get_if<BackToBackParams>(&params)) {
        const double a = 0.5 * p->gap + p->length, b = 0.5 * p->width;
        return std::abs(std::cos(orientation)) * a + std::abs(std::sin(orientation)) * b;
    }
    return std::get<ConcentricParams>(params).r3;
}

double Probe::half_extent_y() const {
    if (const auto* p = std::get_if<BackToBackParams>(&params)) {
        const double a = 0.5 * p->gap + p->length, b = 0.5 * p->width;
        return std::abs(std::sin(orientation)) * a + std::abs(std::cos(orientation)) * b;
    }
    return std::get<ConcentricParams>(params).r3;
}

std::pair<double, std::string> Probe::smallest_feature() const {
    if (const auto* p = std::get_if<BackToBackParams>(&params)) {
        std::pair<double, std::string> best{p->gap, "probe.params.s"};
        if (p->width < best.first) best = {p->width, "probe.params.b"};
        if (p->length < best.first) best = {p->length, "probe.params.h"};
        return best;
    }
    const auto& p = std::get<ConcentricParams>(params);
    std::pair<double, std::string> best{2.0 * p.r1, "probe.params.R1"};
    if (p.r2 - p.r1 < best.first) best = {p.r2 - p.r1, "probe.params.R2-R1"};
    if (p.r3 - p.r2 < best.first) best = {p.r3 - p.r2, "probe.params.R3-R2"};
    return best;
}

Probe Probe::mirrored() const {
    Probe out = *this;
    out.swapped = !swapped;
    return out;
}

Probe make_back_to_back(double s, double b, double h) {
    if (!(s > 0.0) || !(b > 0.0) || !(h > 0.0)) {
        throw GeometryError("back-to-back probe needs s, b, h > 0 (got " + fmt(s) + ", " + fmt(b) +
                            ", " + fmt(h) + ")");
    }
    Probe p;
    p.kind = ProbeKind::back_to_back;
    p.params = BackToBackParams{s, b, h};
    return p;
}

Probe make_concentric(double r1, double r2, double r3) {
    if (!(r1 > 0.0) || !(r1 < r2) || !(r2 < r3)) {
        throw GeometryError("concentric probe needs 0 < R1 < R2 < R3 (got " + fmt(r1) + ", " + fmt(r2) +
                            ", " + fmt(r3) + ")");
    }
    Probe p;
    p.kind = ProbeKind::concentric;
    p.params = ConcentricParams{r1, r2, r3};
    return p;
}

std::size_t BoundaryConditions::count(NodeRole r) const {
    return static_cast<std::size_t>(std::count(role.begin(), role.end(), r));
}

void validate(const PermittivityGrid& grid, const BoundaryConditions& bc) {
    if (bc.role.size() != grid.size()) {
        throw BoundaryConditionError("role array size does not match the grid");
    }
    if (bc.count(NodeRole::drive) == 0) throw BoundaryConditionError("no drive nodes");
    if (bc.count(NodeRole::sense) == 0) throw BoundaryConditionError("no sense nodes");
}

double default_padding(const Probe& probe) { return std::max(probe.reach(), 3.0 * probe.lift_off); }

namespace {

struct Layout {
    double h;
    double padding;
    std::size_t nx, ny, nz;
    std::size_t n_below;
    std::size_t electrode_layer;
};

Layout layout(const SampleSpec& sample, const Probe& probe, const GridOptions& opt) {
    if (!(opt.resolution > 0.0)) throw GeometryError("resolution must be positive");
    if (!(probe.lift_off >= 0.0)) throw GeometryError("lift_off must be >= 0");
    Layout L{};
    L.h = 1.0 / opt.resolution;
    L.padding = opt.padding < 0.0 ? default_padding(probe) : opt.padding;

    const auto [feature, name] = probe.smallest_feature();
    if (feature < 2.0 * L.h * (1.0 - 1e-9)) {
        throw ResolutionError(name, name + " = " + fmt(feature) + " m spans fewer than 2 voxels of " +
                                        fmt(L.h) + " m");
    }
    for (std::size_t n = 0; n < sample.defects.size(); ++n) {
        const auto& d = sample.defects[n];
        const std::string tag = "sample.defects[" + std::to_string(n) + "]";
        const double lateral = d.kind == DefectKind::flat_bottomed_hole ? d.size_x
                                                                         : std::min(d.size_x, d.size_y);
        if (lateral < 2.0 * L.h * (1.0 - 1e-9)) {
            throw ResolutionError(tag + ".size", tag + " lateral size " + fmt(lateral) +
                                                     " m spans fewer than 2 voxels");
        }
        if (d.depth < 2.0 * L.h * (1.0 - 1e-9)) {
            throw ResolutionError(tag + ".depth", tag + " depth " + fmt(d.depth) +
                                                      " m spans fewer than 2 voxels");
        }
    }

    auto half_cells = [&](double extent) {
        return static_cast<std::size_t>(std::ceil((extent + L.padding) / L.h - 1e-9));
    };
    L.nx = 2 * half_cells(probe.half_extent_x());
    L.ny = 2 * half_cells(probe.half_extent_y());
    L.n_below = static_cast<std::size_t>(std::ceil(L.padding / L.h - 1e-9));
    // Slab layers: cells whose centers lie in [0, thickness].
    const auto n_slab = static_cast<std::size_t>(std::floor(sample.thickness / L.h + 0.5 + 1e-9));
    const auto n_gap = static_cast<std::size_t>(std::max(0L, std::lround(probe.lift_off / L.h - 0.5)));
    L.electrode_layer = L.n_below + n_slab + n_gap;
    const std::size_t above = opt.shield ? 1 : static_cast<std::size_t>(std::ceil(L.padding / L.h - 1e-9));
    L.nz = L.electrode_layer + 1 + std::max<std::size_t>(above, 1);
    return L;
}

}  // namespace

GridShape grid_shape(const SampleSpec& sample, const Probe& probe, const GridOptions& opt) {
    const auto L = layout(sample, probe, opt);
    return {L.nx, L.ny, L.nz};
}

GridBuild build_grid(const SampleSpec& sample, const Probe& probe, const GridOptions& opt) {
    validate(sample);
    const Layout L = layout(sample, probe, opt);
    const double h = L.h;
    const double slack = kTieSlack * h;

    GridBuild out;
    auto& g = out.grid;
    g.nx = L.nx;
    g.ny = L.ny;
    g.nz = L.nz;
    g.h = h;
    g.origin_x = probe.x - 0.5 * static_cast<double>(L.nx) * h;
    g.origin_y = probe.y - 0.5 * static_cast<double>(L.ny) * h;
    g.origin_z = -static_cast<double>(L.n_below) * h;
    g.eps.assign(g.size(), Complex{1.0, 0.0});
    out.bc.role.assign(g.size(), NodeRole::free);
    out.bc.outer = opt.outer;
    out.sample_mask.assign(g.size(), 0);
    out.electrode_layer = L.electrode_layer;

    // Offsets from the probe center are exact half-integers times h, so
    // mirrored cells see exactly negated offsets.
    std::vector<double> xs(g.nx), ys(g.ny), zs(g.nz);
    for (std::size_t i = 0; i < g.nx; ++i) {
        xs[i] = probe.x + (static_cast<double>(i) - 0.5 * static_cast<double>(g.nx) + 0.5) * h;
    }
    for (std::size_t j = 0; j < g.ny; ++j) {
        ys[j] = probe.y + (static_cast<double>(j) - 0.5 * static_cast<double>(g.ny) + 0.5) * h;
    }
    for (std::size_t k = 0; k < g.nz; ++k) zs[k] = g.center_z(k);

    for (std::size_t k = 0; k < g.nz; ++k) {
        const double z = zs[k];
        if (z < -slack || z > sample.thickness + slack) continue;
        for (std::size_t j = 0; j < g.ny; ++j) {
            const double y = ys[j];
            if (y < -slack || y > sample.length + slack) continue;
            for (std::size_t i = 0; i < g.nx; ++i) {
                const double x = xs[i];
                if (x < -slack || x > sample.width + slack) continue;
                const std::size_t idx = g.index(i, j, k);
                out.sample_mask[idx] = 1;
                g.eps[idx] = sample.eps_r;
                for (const auto& d : sample.defects) {
                    if (inside_defect(d, sample.thickness, x, y, z, slack)) g.eps[idx] = d.fill_eps;
                }
            }
        }
    }

    const std::size_t ke = L.electrode_layer;
    out.effective_lift_off = zs[ke] - sample.thickness;
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            switch (probe.role_at(xs[i], ys[j])) {
                case ElectrodeRole::drive: out.bc.role[g.index(i, j, ke)] = NodeRole::drive; break;
                case ElectrodeRole::sense: out.bc.role[g.index(i, j, ke)] = NodeRole::sense; break;
                case ElectrodeRole::none: break;
            }
        }
    }
    if (opt.shield) {
        for (std::size_t j = 0; j < g.ny; ++j) {
            for (std::size_t i = 0; i < g.nx; ++i) out.bc.role[g.index(i, j, ke + 1)] = NodeRole::shield;
        }
    }
    validate(g, out.bc);
    return out;
}

}  // namespace capimg
