#pragma once

#include "adc/mesh.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace adc {

/// Scalar image on an nx x ny x nz grid. The affine maps voxel indices
/// (i, j, k, 1) to world coordinates in mm; voxel centers sit at integer indices.
struct VoxelGrid {
    std::array<int, 3> dims{0, 0, 0};
    Eigen::Matrix4d affine = Eigen::Matrix4d::Identity();
    std::vector<double> values;                     ///< x fastest
    std::optional<std::vector<unsigned char>> mask; ///< CSF labels, 0/1

    VoxelGrid() = default;
    VoxelGrid(std::array<int, 3> dims, const Eigen::Matrix4d& affine, double fill = 0.0);

    std::size_t size() const noexcept { return values.size(); }
    std::size_t index(int i, int j, int k) const noexcept {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
    }
    double& at(int i, int j, int k) { return values[index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[index(i, j, k)]; }

    /// Voxel spacing along each index axis (norm of the affine columns).
    Eigen::Vector3d spacing() const;
    /// Continuous voxel coordinates of a world point.
    Eigen::Vector3d to_voxel(const Point3& world) const;

    /// Throws InputError on bad dims, a singular affine or a size mismatch.
    void validate() const;
};

/// ASCII "ADCVOX 1", dims, 16 affine entries row-major, values x fastest.
/// A mask, if present, goes to the companion file path + ".mask" in the same format.
void write_voxel(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid read_voxel(const std::filesystem::path& path);

enum class BoundaryMode { Reflect, Nearest };

/// Separable Gaussian, sigma in mm converted per axis with the voxel spacing,
/// kernel radius ceil(4 sigma) voxels, weights normalized to unit sum.
VoxelGrid gaussian_smooth(const VoxelGrid& grid, double sigma_mm, BoundaryMode mode = BoundaryMode::Reflect);

/// Normalized 1-D kernel (length 2 ceil(4 sigma) + 1) for sigma in voxels.
std::vector<double> gaussian_kernel(double sigma_voxels);

struct CsfProjection {
    std::vector<std::int32_t> vertices;  ///< boundary vertices, ascending
    std::vector<double> values;
    std::vector<bool> fallback;          ///< no CSF voxel in the window, nearest CSF voxel used
    std::size_t fallback_count = 0;
};

constexpr int kCsfWindow = 7;

/// Mean signal over CSF voxels in the 7x7x7 window around the voxel
/// containing each vertex on the given boundary markers.
CsfProjection csf_project(const VoxelGrid& signal, const VoxelGrid& csf_mask, const Mesh& mesh,
                          const std::vector<BoundaryMarker>& markers);

/// Writes projected values into a copy of base (non-boundary entries untouched).
VertexField apply_projection(const VertexField& base, const CsfProjection& proj);

enum class SampleMode { Trilinear, Nearest };

struct SampledField {
    VertexField field;
    std::vector<bool> clamped;  ///< vertex mapped outside the grid
    std::size_t clamped_count = 0;
};

SampledField sample_to_mesh(const VoxelGrid& grid, const Mesh& mesh, SampleMode mode);

} // namespace adc
