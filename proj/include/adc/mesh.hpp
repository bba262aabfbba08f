#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace adc {

using Point3 = std::array<double, 3>;

/// Cell labels. The numeric values are part of the mesh file format.
enum class Subdomain : int { Csf = 1, Grey = 2, White = 3 };

/// Boundary facet markers. The numeric values are part of the mesh file format.
enum class BoundaryMarker : int {
    Sas = 1,           ///< outer CSF-facing surface (Dirichlet)
    Ventricle = 2,     ///< ventricle wall (Dirichlet)
    NeumannGreen = 3,  ///< zero-flux
    NeumannYellow = 4, ///< zero-flux
};

inline constexpr bool is_dirichlet(BoundaryMarker m) {
    return m == BoundaryMarker::Sas || m == BoundaryMarker::Ventricle;
}

std::string to_string(BoundaryMarker m);
std::string to_string(Subdomain s);

struct Tet {
    std::array<std::int32_t, 4> v;
    Subdomain label;
};

struct BoundaryFacet {
    std::array<std::int32_t, 3> v;
    BoundaryMarker marker;
};

/// Tetrahedral mesh with per-cell subdomain labels and marked boundary facets.
///
/// The constructor validates the mesh: indices in range, every tet positively
/// oriented, and the marked facets covering the topological boundary exactly
/// once. A Mesh is immutable afterwards.
class Mesh {
public:
    Mesh(std::vector<Point3> vertices, std::vector<Tet> tets, std::vector<BoundaryFacet> facets);

    const std::vector<Point3>& vertices() const noexcept { return vertices_; }
    const std::vector<Tet>& tets() const noexcept { return tets_; }
    const std::vector<BoundaryFacet>& boundary_facets() const noexcept { return facets_; }

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_tets() const noexcept { return tets_.size(); }

    /// Content hash; fields carry it to prove which mesh they belong to.
    std::uint64_t id() const noexcept { return id_; }

    /// Labels present in the mesh, ascending.
    std::vector<Subdomain> subdomains() const;

    double tet_volume(std::size_t t) const;
    double total_volume() const;

    /// Vertices touched by at least one tet with the given label.
    std::vector<bool> vertex_mask(Subdomain s) const;

    /// Vertices on facets carrying any of the given markers, sorted ascending.
    std::vector<std::int32_t> boundary_vertices(const std::vector<BoundaryMarker>& markers) const;

private:
    std::vector<Point3> vertices_;
    std::vector<Tet> tets_;
    std::vector<BoundaryFacet> facets_;
    std::uint64_t id_ = 0;
};

double signed_volume(const Point3& a, const Point3& b, const Point3& c, const Point3& d);

/// One scalar per mesh vertex.
struct VertexField {
    std::uint64_t mesh_id = 0;
    std::vector<double> values;
};

VertexField make_field(const Mesh& mesh, double value = 0.0);

// ---------------------------------------------------------------------------
// Synthetic phantom

enum class PhantomVariant { TwoDomain, ThreeDomain };

struct PhantomOptions {
    int resolution = 8;        ///< cubes per axis
    double box_length = 40.0;  ///< mm
    PhantomVariant variant = PhantomVariant::ThreeDomain;
    /// Shell thicknesses as fractions of the box length. The CSF shell is only
    /// used by the three-domain variant.
    double csf_fraction = 0.125;
    double grey_fraction = 0.125;
    /// Edge length, in cells, of the centered cavity removed in the two-domain variant.
    int cavity_cells = 2;
    /// Marker for the outer box surface.
    BoundaryMarker outer_marker = BoundaryMarker::Sas;
};

/// Structured box [0,L]^3 split into resolution^3 cubes, each cube into six
/// Kuhn tetrahedra. Tets are labelled by the depth of their centroid below the
/// box surface.
Mesh generate_phantom(const PhantomOptions& options);

PhantomVariant parse_variant(const std::string& name);
std::string to_string(PhantomVariant v);

// ---------------------------------------------------------------------------
// I/O

/// ASCII mesh format:
///   ADCMESH 1
///   <nv> <nt> <nbf>
///   nv lines "x y z", nt lines "v0 v1 v2 v3 label", nbf lines "v0 v1 v2 marker".
void write_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh read_mesh(const std::filesystem::path& path);
std::string format_mesh(const Mesh& mesh);
Mesh parse_mesh(const std::string& text);

/// Field file: "<nv>" then one value per line.
void write_field(const VertexField& field, const std::filesystem::path& path);
VertexField read_field(const Mesh& mesh, const std::filesystem::path& path);

/// Legacy ASCII VTK unstructured grid with POINT_DATA scalars for each field
/// and CELL_DATA subdomain labels.
void export_vtk(const Mesh& mesh, const std::map<std::string, VertexField>& fields,
                const std::filesystem::path& path);

} // namespace adc
