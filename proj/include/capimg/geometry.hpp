#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace capimg {

using Complex = std::complex<double>;

// Sample coordinates: x along the sample width, y along its length, z up.
// The back surface of the sample is z = 0 and the probed (front) surface is
// z = thickness. All lengths are in meters.

enum class DefectKind { flat_bottomed_hole, rect_void, ellipsoid_blob };

struct DefectSpec {
    DefectKind kind = DefectKind::flat_bottomed_hole;
    double center_x = 0.0;
    double center_y = 0.0;
    /// Hole: size_x is the diameter (size_y ignored). Void and blob: edge
    /// lengths / full axes along x and y.
    double size_x = 0.0;
    double size_y = 0.0;
    /// Hole: milled depth measured up from the back surface. Void and blob:
    /// full extent along z.
    double depth = 0.0;
    /// Vertical center for voids and blobs; negative selects mid-thickness.
    double center_z = -1.0;
    Complex fill_eps{1.0, 0.0};
};

struct SampleSpec {
    double width = 0.0;      ///< extent along x
    double length = 0.0;     ///< extent along y
    double thickness = 0.0;  ///< extent along z
    Complex eps_r{1.0, 0.0}; ///< eps' - j eps'' (imaginary part <= 0)
    std::vector<DefectSpec> defects;
};

/// Validates a sample; throws GeometryError or BoundsError.
void validate(const SampleSpec& sample);

enum class ProbeKind { back_to_back, concentric };

struct BackToBackParams {
    double gap = 0.0;    ///< s
    double width = 0.0;  ///< b, perpendicular to the main axis
    double length = 0.0; ///< h, along the main axis
};

struct ConcentricParams {
    double r1 = 0.0;  ///< drive disc radius
    double r2 = 0.0;  ///< sense annulus inner radius
    double r3 = 0.0;  ///< sense annulus outer radius
};

enum class ElectrodeRole : std::uint8_t { none = 0, drive = 1, sense = 2 };

struct Probe {
    ProbeKind kind = ProbeKind::back_to_back;
    std::variant<BackToBackParams, ConcentricParams> params;
    double lift_off = 0.0;
    double orientation = 0.0;  ///< rotation of the main axis in the x-y plane, rad
    double x = 0.0;            ///< center position in sample coordinates
    double y = 0.0;
    /// Back-to-back only: when true the plate on the +axis side drives.
    bool swapped = false;

    /// Electrode under the point (x, y) given in sample coordinates.
    ElectrodeRole role_at(double px, double py) const;
    /// Largest distance from the probe center to any electrode point.
    double reach() const;
    /// Half extents of the axis-aligned bounding box of the electrodes.
    double half_extent_x() const;
    double half_extent_y() const;
    /// Smallest in-plane feature (gap or conductor width) with its name.
    std::pair<double, std::string> smallest_feature() const;
    /// Same probe with drive and sense exchanged (back-to-back only).
    Probe mirrored() const;
};

Probe make_back_to_back(double s, double b, double h);
Probe make_concentric(double r1, double r2, double r3);

/// Voxelized relative permittivity. Cell (i, j, k) spans
/// [origin + (i, j, k) h, origin + (i + 1, j + 1, k + 1) h]; storage is
/// z-major slabs of row-major x-y planes.
struct PermittivityGrid {
    std::size_t nx = 0, ny = 0, nz = 0;
    double h = 0.0;
    double origin_x = 0.0, origin_y = 0.0, origin_z = 0.0;
    std::vector<Complex> eps;

    std::size_t size() const { return nx * ny * nz; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (k * ny + j) * nx + i;
    }
    double center_x(std::size_t i) const { return origin_x + (static_cast<double>(i) + 0.5) * h; }
    double center_y(std::size_t j) const { return origin_y + (static_cast<double>(j) + 0.5) * h; }
    double center_z(std::size_t k) const { return origin_z + (static_cast<double>(k) + 0.5) * h; }
};

enum class NodeRole : std::uint8_t { free = 0, drive = 1, sense = 2, shield = 3 };
enum class OuterBoundary { neumann, dirichlet_zero };

struct BoundaryConditions {
    std::vector<NodeRole> role;  ///< one entry per voxel, same layout as eps
    OuterBoundary outer = OuterBoundary::neumann;

    std::size_t count(NodeRole r) const;
    bool is_fixed(std::size_t idx) const { return role[idx] != NodeRole::free; }
};

/// Throws BoundaryConditionError unless drive and sense are non-empty and
/// the role array matches the grid.
void validate(const PermittivityGrid& grid, const BoundaryConditions& bc);

struct GridOptions {
    double resolution = 500.0;   ///< voxels per meter
    double padding = -1.0;       ///< air margin, m; negative selects the default rule
    bool shield = true;          ///< grounded plane one voxel above the electrodes
    OuterBoundary outer = OuterBoundary::neumann;
};

/// Default padding: max(probe reach, 3 x lift-off).
double default_padding(const Probe& probe);

struct GridBuild {
    PermittivityGrid grid;
    BoundaryConditions bc;
    std::vector<std::uint8_t> sample_mask;  ///< 1 where the voxel lies inside the slab
    std::size_t electrode_layer = 0;
    double effective_lift_off = 0.0;  ///< electrode plane height above the front surface
};

/// Rasterizes sample and probe on a probe-centered lattice. The probe center
/// sits on a lattice face in x and y so symmetric inputs rasterize to
/// mirror-symmetric arrays.
GridBuild build_grid(const SampleSpec& sample, const Probe& probe, const GridOptions& opt);

/// Lattice dimensions build_grid would use, without rasterizing.
struct GridShape {
    std::size_t nx, ny, nz;
};
GridShape grid_shape(const SampleSpec& sample, const Probe& probe, const GridOptions& opt);

}  // namespace capimg
