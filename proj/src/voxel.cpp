#include "adc/voxel.hpp"

#include "adc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace adc {

VoxelGrid::VoxelGrid(std::array<int, 3> d, const Eigen::Matrix4d& a, double fill)
    : dims(d), affine(a), values(static_cast<std::size_t>(d[0]) * d[1] * d[2], fill) {
    validate();
}

Eigen::Vector3d VoxelGrid::spacing() const {
    return {affine.block<3, 1>(0, 0).norm(), affine.block<3, 1>(0, 1).norm(), affine.block<3, 1>(0, 2).norm()};
}

Eigen::Vector3d VoxelGrid::to_voxel(const Point3& w) const {
    const Eigen::Vector3d rhs = Eigen::Vector3d(w[0], w[1], w[2]) - affine.block<3, 1>(0, 3);
    return affine.block<3, 3>(0, 0).partialPivLu().solve(rhs);
}

void VoxelGrid::validate() const {
    for (int d : dims)
        if (d < 1) throw InputError("voxel grid: dimensions must be >= 1");
    if (values.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2])
        throw InputError("voxel grid: value count does not match dims");
    if (!affine.allFinite() || std::abs(affine.block<3, 3>(0, 0).determinant()) < 1e-12)
        throw InputError("voxel grid: affine is not invertible");
    if (affine(3, 0) != 0.0 || affine(3, 1) != 0.0 || affine(3, 2) != 0.0 || affine(3, 3) != 1.0)
        throw InputError("voxel grid: affine last row must be 0 0 0 1");
    if (mask && mask->size() != values.size()) throw InputError("voxel grid: mask size does not match dims");
}

namespace {

void write_raw(const VoxelGrid& g, const std::vector<double>& values, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    char buf[40];
    out << "ADCVOX 1\n" << g.dims[0] << ' ' << g.dims[1] << ' ' << g.dims[2] << '\n';
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", g.affine(r, c));
            out << buf << (c == 3 ? '\n' : ' ');
        }
    for (double v : values) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf << '\n';
    }
}

VoxelGrid read_raw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open voxel grid " + path.string());
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "ADCVOX" || version != 1) throw InputError(path.string() + ": not an ADCVOX 1 file");
    VoxelGrid g;
    in >> g.dims[0] >> g.dims[1] >> g.dims[2];
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) in >> g.affine(r, c);
    if (!in) throw InputError(path.string() + ": truncated header");
    for (int d : g.dims)
        if (d < 1) throw InputError(path.string() + ": dimensions must be >= 1");
    g.values.resize(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2]);
    for (double& v : g.values)
        if (!(in >> v)) throw InputError(path.string() + ": expected " + std::to_string(g.values.size()) + " values");
    std::string extra;
    if (in >> extra) throw InputError(path.string() + ": trailing data");
    g.validate();
    return g;
}

std::filesystem::path mask_path(const std::filesystem::path& p) { return p.string() + ".mask"; }

} // namespace

void write_voxel(const VoxelGrid& grid, const std::filesystem::path& path) {
    grid.validate();
    write_raw(grid, grid.values, path);
    if (grid.mask) write_raw(grid, std::vector<double>(grid.mask->begin(), grid.mask->end()), mask_path(path));
}

VoxelGrid read_voxel(const std::filesystem::path& path) {
    VoxelGrid g = read_raw(path);
    if (std::filesystem::exists(mask_path(path))) {
        const VoxelGrid m = read_raw(mask_path(path));
        if (m.dims != g.dims) throw InputError(mask_path(path).string() + ": mask dims differ from grid");
        std::vector<unsigned char> labels(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m.values[i] != 0.0 && m.values[i] != 1.0)
                throw InputError(mask_path(path).string() + ": mask values must be 0 or 1");
            labels[i] = m.values[i] != 0.0;
        }
        g.mask = std::move(labels);
    }
    return g;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma >= 0.0)) throw InputError("gaussian: sigma must be >= 0");
    if (sigma == 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> w(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) sum += w[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    for (double& v : w) v /= sum;
    return w;
}

namespace {

int boundary_index(int i, int n, BoundaryMode mode) {
    if (mode == BoundaryMode::Nearest) return std::clamp(i, 0, n - 1);
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

} // namespace

VoxelGrid gaussian_smooth(const VoxelGrid& grid, double sigma_mm, BoundaryMode mode) {
    grid.validate();
    if (!(sigma_mm >= 0.0)) throw InputError("gaussian_smooth: sigma must be >= 0");
    VoxelGrid out = grid;
    if (sigma_mm == 0.0) return out;
    const Eigen::Vector3d h = grid.spacing();
    std::vector<double> line;
    for (int axis = 0; axis < 3; ++axis) {
        const auto w = gaussian_kernel(sigma_mm / h[axis]);
        const int r = static_cast<int>(w.size() / 2);
        const int n = grid.dims[axis];
        std::array<int, 3> other{};
        int oa = 0;
        for (int a = 0; a < 3; ++a)
            if (a != axis) other[oa++] = a;
        line.resize(static_cast<std::size_t>(n));
        std::array<int, 3> idx{};
        for (int q = 0; q < grid.dims[other[1]]; ++q)
            for (int p = 0; p < grid.dims[other[0]]; ++p) {
                idx[other[0]] = p;
                idx[other[1]] = q;
                for (int i = 0; i < n; ++i) {
                    idx[axis] = i;
                    line[i] = out.at(idx[0], idx[1], idx[2]);
                }
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int t = -r; t <= r; ++t) acc += w[t + r] * line[boundary_index(i + t, n, mode)];
                    idx[axis] = i;
                    out.at(idx[0], idx[1], idx[2]) = acc;
                }
            }
    }
    return out;
}

namespace {

std::array<int, 3> containing_voxel(const VoxelGrid& g, const Eigen::Vector3d& p) {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) c[a] = std::clamp(static_cast<int>(std::lround(p[a])), 0, g.dims[a] - 1);
    return c;
}

} // namespace

CsfProjection csf_project(const VoxelGrid& signal, const VoxelGrid& csf_mask, const Mesh& mesh,
                          const std::vector<BoundaryMarker>& markers) {
    signal.validate();
    if (csf_mask.dims != signal.dims || !csf_mask.affine.isApprox(signal.affine, 1e-12))
        throw InputError("csf_project: mask grid is not aligned with the signal grid");
    std::vector<unsigned char> csf(signal.size());
    if (csf_mask.mask)
        csf = *csf_mask.mask;
    else
        for (std::size_t i = 0; i < csf.size(); ++i) csf[i] = csf_mask.values[i] != 0.0;
    if (std::none_of(csf.begin(), csf.end(), [](unsigned char c) { return c != 0; }))
        throw InputError("csf_project: mask contains no CSF voxels");

    CsfProjection out;
    out.vertices = mesh.boundary_vertices(markers);
    out.values.resize(out.vertices.size());
    out.fallback.assign(out.vertices.size(), false);
    const int h = kCsfWindow / 2;
    const auto& dims = signal.dims;
    for (std::size_t n = 0; n < out.vertices.size(); ++n) {
        const Eigen::Vector3d p = signal.to_voxel(mesh.vertices()[static_cast<std::size_t>(out.vertices[n])]);
        const auto c = containing_voxel(signal, p);
        double sum = 0.0;
        int count = 0;
        for (int k = std::max(0, c[2] - h); k <= std::min(dims[2] - 1, c[2] + h); ++k)
            for (int j = std::max(0, c[1] - h); j <= std::min(dims[1] - 1, c[1] + h); ++j)
                for (int i = std::max(0, c[0] - h); i <= std::min(dims[0] - 1, c[0] + h); ++i) {
                    const std::size_t v = signal.index(i, j, k);
                    if (csf[v]) {
                        sum += signal.values[v];
                        ++count;
                    }
                }
        if (count > 0) {
            out.values[n] = sum / count;
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_v = 0;
        for (int k = 0; k < dims[2]; ++k)
            for (int j = 0; j < dims[1]; ++j)
                for (int i = 0; i < dims[0]; ++i) {
                    const std::size_t v = signal.index(i, j, k);
                    if (!csf[v]) continue;
                    const double d = (p - Eigen::Vector3d(i, j, k)).squaredNorm();
                    if (d < best) {
                        best = d;
                        best_v = v;
                    }
                }
        out.values[n] = signal.values[best_v];
        out.fallback[n] = true;
        ++out.fallback_count;
    }
    return out;
}

VertexField apply_projection(const VertexField& base, const CsfProjection& proj) {
    VertexField out = base;
    for (std::size_t n = 0; n < proj.vertices.size(); ++n) {
        const auto v = static_cast<std::size_t>(proj.vertices[n]);
        if (v >= out.values.size()) throw InputError("apply_projection: vertex index out of range");
        out.values[v] = proj.values[n];
    }
    return out;
}

SampledField sample_to_mesh(const VoxelGrid& grid, const Mesh& mesh, SampleMode mode) {
    grid.validate();
    SampledField out{make_field(mesh), std::vector<bool>(mesh.num_vertices(), false), 0};
    constexpr double tol = 1e-9;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        Eigen::Vector3d p = grid.to_voxel(mesh.vertices()[v]);
        bool clamped = false;
        for (int a = 0; a < 3; ++a) {
            const double hi = grid.dims[a] - 1;
            if (p[a] < -tol || p[a] > hi + tol) clamped = true;
            p[a] = std::clamp(p[a], 0.0, hi);
        }
        if (clamped) {
            out.clamped[v] = true;
            ++out.clamped_count;
        }
        if (mode == SampleMode::Nearest) {
            const auto c = containing_voxel(grid, p);
            out.field.values[v] = grid.at(c[0], c[1], c[2]);
            continue;
        }
        std::array<int, 3> i0{};
        std::array<double, 3> w{};
        for (int a = 0; a < 3; ++a) {
            i0[a] = std::min(static_cast<int>(std::floor(p[a])), std::max(grid.dims[a] - 2, 0));
            w[a] = grid.dims[a] > 1 ? p[a] - i0[a] : 0.0;
        }
        double acc = 0.0;
        for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const double wt = (dx ? w[0] : 1 - w[0]) * (dy ? w[1] : 1 - w[1]) * (dz ? w[2] : 1 - w[2]);
                    if (wt == 0.0) continue;
                    acc += wt * grid.at(std::min(i0[0] + dx, grid.dims[0] - 1), std::min(i0[1] + dy, grid.dims[1] - 1),
                                        std::min(i0[2] + dz, grid.dims[2] - 1));
                }
        out.field.values[v] = acc;
    }
    return out;
}

} // namespace adc
