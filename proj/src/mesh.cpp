#include "adc/mesh.hpp"

#include "adc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace adc {

namespace {

using FaceKey = std::array<std::int32_t, 3>;

FaceKey sorted_face(std::int32_t a, std::int32_t b, std::int32_t c) {
    FaceKey f{a, b, c};
    std::sort(f.begin(), f.end());
    return f;
}

// Local vertex triples of the four tet faces; face l is opposite vertex l.
constexpr std::array<std::array<int, 3>, 4> kTetFaces{{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

class Fnv1a {
public:
    template <typename T>
    void add(const T& value) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(&value);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            hash_ ^= bytes[i];
            hash_ *= 0x100000001b3ULL;
        }
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string to_string(BoundaryMarker m) {
    switch (m) {
    case BoundaryMarker::Sas: return "R_SAS";
    case BoundaryMarker::Ventricle: return "B_VENTRICLE";
    case BoundaryMarker::NeumannGreen: return "NEUMANN_GREEN";
    case BoundaryMarker::NeumannYellow: return "NEUMANN_YELLOW";
    }
    return "UNKNOWN";
}

std::string to_string(Subdomain s) {
    switch (s) {
    case Subdomain::Csf: return "CSF";
    case Subdomain::Grey: return "grey";
    case Subdomain::White: return "white";
    }
    return "unknown";
}

double signed_volume(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    const double e1[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const double e2[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
    const double e3[3] = {d[0] - a[0], d[1] - a[1], d[2] - a[2]};
    const double det = e1[0] * (e2[1] * e3[2] - e2[2] * e3[1]) -
                       e1[1] * (e2[0] * e3[2] - e2[2] * e3[0]) +
                       e1[2] * (e2[0] * e3[1] - e2[1] * e3[0]);
    return det / 6.0;
}

Mesh::Mesh(std::vector<Point3> vertices, std::vector<Tet> tets, std::vector<BoundaryFacet> facets)
    : vertices_(std::move(vertices)), tets_(std::move(tets)), facets_(std::move(facets)) {
    const auto nv = static_cast<std::int64_t>(vertices_.size());
    auto in_range = [nv](std::int32_t i) { return i >= 0 && i < nv; };

    for (const auto& p : vertices_)
        for (double x : p)
            if (!std::isfinite(x)) throw InputError("mesh: non-finite vertex coordinate");

    for (std::size_t t = 0; t < tets_.size(); ++t) {
        const auto& tet = tets_[t];
        for (auto v : tet.v)
            if (!in_range(v)) throw InputError("mesh: tet index out of range");
        const int label = static_cast<int>(tet.label);
        if (label < 1 || label > 3) throw InputError("mesh: invalid subdomain label " + std::to_string(label));
        if (!(tet_volume(t) > 0.0))
            throw InputError("mesh: tet " + std::to_string(t) + " has non-positive volume");
    }
    for (const auto& f : facets_) {
        for (auto v : f.v)
            if (!in_range(v)) throw InputError("mesh: facet index out of range");
        const int m = static_cast<int>(f.marker);
        if (m < 1 || m > 4) throw InputError("mesh: invalid boundary marker " + std::to_string(m));
    }

    // Topological boundary = faces used by exactly one tet.
    std::vector<FaceKey> faces;
    faces.reserve(tets_.size() * 4);
    for (const auto& tet : tets_)
        for (const auto& lf : kTetFaces) faces.push_back(sorted_face(tet.v[lf[0]], tet.v[lf[1]], tet.v[lf[2]]));
    std::sort(faces.begin(), faces.end());

    std::vector<FaceKey> boundary;
    for (std::size_t i = 0; i < faces.size();) {
        std::size_t j = i;
        while (j < faces.size() && faces[j] == faces[i]) ++j;
        if (j - i > 2) throw InputError("mesh: non-manifold boundary facet list (face shared by more than two tets)");
        if (j - i == 1) boundary.push_back(faces[i]);
        i = j;
    }

    std::vector<FaceKey> marked;
    marked.reserve(facets_.size());
    for (const auto& f : facets_) marked.push_back(sorted_face(f.v[0], f.v[1], f.v[2]));
    std::sort(marked.begin(), marked.end());
    if (std::adjacent_find(marked.begin(), marked.end()) != marked.end())
        throw InputError("mesh: non-manifold boundary facet list (duplicate facet)");
    if (marked != boundary)
        throw InputError("mesh: non-manifold boundary facet list (marked facets differ from topological boundary)");

    Fnv1a h;
    h.add(vertices_.size());
    for (const auto& p : vertices_)
        for (double x : p) h.add(x);
    h.add(tets_.size());
    for (const auto& t : tets_) {
        for (auto v : t.v) h.add(v);
        h.add(static_cast<int>(t.label));
    }
    h.add(facets_.size());
    for (const auto& f : facets_) {
        for (auto v : f.v) h.add(v);
        h.add(static_cast<int>(f.marker));
    }
    id_ = h.value();
}

std::vector<Subdomain> Mesh::subdomains() const {
    std::array<bool, 4> present{};
    for (const auto& t : tets_) present[static_cast<int>(t.label)] = true;
    std::vector<Subdomain> out;
    for (int s = 1; s <= 3; ++s)
        if (present[s]) out.push_back(static_cast<Subdomain>(s));
    return out;
}

double Mesh::tet_volume(std::size_t t) const {
    const auto& v = tets_[t].v;
    return signed_volume(vertices_[v[0]], vertices_[v[1]], vertices_[v[2]], vertices_[v[3]]);
}

double Mesh::total_volume() const {
    double sum = 0.0;
    for (std::size_t t = 0; t < tets_.size(); ++t) sum += tet_volume(t);
    return sum;
}

std::vector<bool> Mesh::vertex_mask(Subdomain s) const {
    std::vector<bool> mask(vertices_.size(), false);
    for (const auto& t : tets_)
        if (t.label == s)
            for (auto v : t.v) mask[v] = true;
    return mask;
}

std::vector<std::int32_t> Mesh::boundary_vertices(const std::vector<BoundaryMarker>& markers) const {
    std::vector<std::int32_t> out;
    for (const auto& f : facets_)
        if (std::find(markers.begin(), markers.end(), f.marker) != markers.end())
            out.insert(out.end(), f.v.begin(), f.v.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

VertexField make_field(const Mesh& mesh, double value) {
    return VertexField{mesh.id(), std::vector<double>(mesh.num_vertices(), value)};
}

// ---------------------------------------------------------------------------

PhantomVariant parse_variant(const std::string& name) {
    if (name == "TWO_DOMAIN" || name == "two_domain" || name == "two") return PhantomVariant::TwoDomain;
    if (name == "THREE_DOMAIN" || name == "three_domain" || name == "three") return PhantomVariant::ThreeDomain;
    throw InputError("unknown phantom variant '" + name + "'");
}

std::string to_string(PhantomVariant v) {
    return v == PhantomVariant::TwoDomain ? "TWO_DOMAIN" : "THREE_DOMAIN";
}

Mesh generate_phantom(const PhantomOptions& opt) {
    const int n = opt.resolution;
    const double length = opt.box_length;
    const bool three = opt.variant == PhantomVariant::ThreeDomain;

    if (n < 4) throw InputError("phantom: resolution must be >= 4");
    if (!(length > 0.0)) throw InputError("phantom: box_length must be positive");
    if (!(opt.grey_fraction > 0.0) || (three && !(opt.csf_fraction > 0.0)))
        throw InputError("phantom: shell fractions must be positive");
    const double shell_sum = (three ? opt.csf_fraction : 0.0) + opt.grey_fraction;
    if (!(shell_sum < 0.5)) throw InputError("phantom: shell fractions must sum to less than 0.5");

    int cav_lo = 0, cav_hi = 0;
    if (!three) {
        if (opt.cavity_cells < 1) throw InputError("phantom: cavity_cells must be >= 1");
        if (opt.cavity_cells > n - 2) throw InputError("phantom: cavity larger than box");
        if ((n - opt.cavity_cells) % 2 != 0)
            throw InputError("phantom: resolution - cavity_cells must be even to center the cavity");
        cav_lo = (n - opt.cavity_cells) / 2;
        cav_hi = cav_lo + opt.cavity_cells;
    }

    const double h = length / n;
    const int np = n + 1;
    auto grid_index = [np](int i, int j, int k) { return i + np * (j + np * k); };
    auto in_cavity = [&](int i, int j, int k) {
        return !three && i >= cav_lo && i < cav_hi && j >= cav_lo && j < cav_hi && k >= cav_lo && k < cav_hi;
    };

    std::vector<Point3> grid_points(static_cast<std::size_t>(np) * np * np);
    for (int k = 0; k < np; ++k)
        for (int j = 0; j < np; ++j)
            for (int i = 0; i < np; ++i) grid_points[grid_index(i, j, k)] = {i * h, j * h, k * h};

    const double csf_depth = opt.csf_fraction * length;
    const double grey_depth = (three ? opt.csf_fraction : 0.0) * length + opt.grey_fraction * length;

    static constexpr std::array<std::array<int, 3>, 6> kPerms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

    std::vector<Tet> tets;
    tets.reserve(static_cast<std::size_t>(n) * n * n * 6);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                if (in_cavity(i, j, k)) continue;
                for (const auto& p : kPerms) {
                    std::array<int, 3> c{i, j, k};
                    std::array<std::int32_t, 4> v{};
                    v[0] = grid_index(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[p[s]];
                        v[s + 1] = grid_index(c[0], c[1], c[2]);
                    }
                    const auto& a = grid_points[v[0]];
                    if (signed_volume(a, grid_points[v[1]], grid_points[v[2]], grid_points[v[3]]) < 0.0)
                        std::swap(v[1], v[2]);

                    Point3 centroid{0, 0, 0};
                    for (auto vi : v)
                        for (int d = 0; d < 3; ++d) centroid[d] += 0.25 * grid_points[vi][d];
                    double depth = length;
                    for (int d = 0; d < 3; ++d) depth = std::min({depth, centroid[d], length - centroid[d]});

                    Subdomain label = Subdomain::White;
                    if (three && depth < csf_depth)
                        label = Subdomain::Csf;
                    else if (depth < grey_depth)
                        label = Subdomain::Grey;
                    tets.push_back(Tet{v, label});
                }
            }

    // Boundary faces of the grid-indexed mesh, oriented outward.
    struct FaceRec {
        FaceKey key;
        std::array<std::int32_t, 3> oriented;
    };
    std::vector<FaceRec> faces;
    faces.reserve(tets.size() * 4);
    for (const auto& t : tets)
        for (const auto& lf : kTetFaces) {
            std::array<std::int32_t, 3> o{t.v[lf[0]], t.v[lf[1]], t.v[lf[2]]};
            faces.push_back({sorted_face(o[0], o[1], o[2]), o});
        }
    std::sort(faces.begin(), faces.end(), [](const FaceRec& a, const FaceRec& b) { return a.key < b.key; });

    auto grid_coords = [np](std::int32_t g) { return std::array<int, 3>{g % np, (g / np) % np, g / (np * np)}; };
    std::vector<BoundaryFacet> facets;
    for (std::size_t a = 0; a < faces.size();) {
        std::size_t b = a;
        while (b < faces.size() && faces[b].key == faces[a].key) ++b;
        if (b - a == 1) {
            const auto& o = faces[a].oriented;
            bool outer = false;
            const auto c0 = grid_coords(o[0]), c1 = grid_coords(o[1]), c2 = grid_coords(o[2]);
            for (int d = 0; d < 3; ++d)
                for (int side : {0, n})
                    if (c0[d] == side && c1[d] == side && c2[d] == side) outer = true;
            facets.push_back({o, outer ? opt.outer_marker : BoundaryMarker::Ventricle});
        }
        a = b;
    }

    // Drop grid points not referenced by any tet (the cavity interior) and renumber.
    std::vector<std::int32_t> remap(grid_points.size(), -1);
    for (const auto& t : tets)
        for (auto v : t.v) remap[v] = 0;
    std::vector<Point3> vertices;
    for (std::size_t g = 0; g < grid_points.size(); ++g)
        if (remap[g] == 0) {
            remap[g] = static_cast<std::int32_t>(vertices.size());
            vertices.push_back(grid_points[g]);
        }
    for (auto& t : tets)
        for (auto& v : t.v) v = remap[v];
    for (auto& f : facets)
        for (auto& v : f.v) v = remap[v];

    Mesh mesh(std::move(vertices), std::move(tets), std::move(facets));

    const auto present = mesh.subdomains();
    const std::vector<Subdomain> expected =
        three ? std::vector<Subdomain>{Subdomain::Csf, Subdomain::Grey, Subdomain::White}
              : std::vector<Subdomain>{Subdomain::Grey, Subdomain::White};
    if (present != expected) throw InputError("phantom: resolution too small to hold requested shells");
    return mesh;
}

// ---------------------------------------------------------------------------

std::string format_mesh(const Mesh& mesh) {
    std::string out;
    out.reserve(mesh.num_vertices() * 64 + mesh.num_tets() * 32);
    out += "ADCMESH 1\n";
    out += std::to_string(mesh.num_vertices()) + " " + std::to_string(mesh.num_tets()) + " " +
           std::to_string(mesh.boundary_facets().size()) + "\n";
    for (const auto& p : mesh.vertices())
        out += format_double(p[0]) + " " + format_double(p[1]) + " " + format_double(p[2]) + "\n";
    for (const auto& t : mesh.tets())
        out += std::to_string(t.v[0]) + " " + std::to_string(t.v[1]) + " " + std::to_string(t.v[2]) + " " +
               std::to_string(t.v[3]) + " " + std::to_string(static_cast<int>(t.label)) + "\n";
    for (const auto& f : mesh.boundary_facets())
        out += std::to_string(f.v[0]) + " " + std::to_string(f.v[1]) + " " + std::to_string(f.v[2]) + " " +
               std::to_string(static_cast<int>(f.marker)) + "\n";
    return out;
}

Mesh parse_mesh(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "ADCMESH" || version != 1)
        throw InputError("mesh file: malformed header");
    long long nv = -1, nt = -1, nf = -1;
    if (!(in >> nv >> nt >> nf) || nv < 0 || nt < 0 || nf < 0) throw InputError("mesh file: malformed header");

    std::vector<Point3> vertices(static_cast<std::size_t>(nv));
    for (auto& p : vertices)
        if (!(in >> p[0] >> p[1] >> p[2])) throw InputError("mesh file: truncated vertex block");

    auto check_index = [nv](long long v) {
        if (v < 0 || v >= nv) throw InputError("mesh file: index out of range");
        return static_cast<std::int32_t>(v);
    };
    std::vector<Tet> tets(static_cast<std::size_t>(nt));
    for (auto& t : tets) {
        long long v[4];
        int label = 0;
        if (!(in >> v[0] >> v[1] >> v[2] >> v[3] >> label)) throw InputError("mesh file: truncated tet block");
        for (int i = 0; i < 4; ++i) t.v[i] = check_index(v[i]);
        if (label < 1 || label > 3) throw InputError("mesh file: invalid subdomain label");
        t.label = static_cast<Subdomain>(label);
    }
    std::vector<BoundaryFacet> facets(static_cast<std::size_t>(nf));
    for (auto& f : facets) {
        long long v[3];
        int marker = 0;
        if (!(in >> v[0] >> v[1] >> v[2] >> marker)) throw InputError("mesh file: truncated facet block");
        for (int i = 0; i < 3; ++i) f.v[i] = check_index(v[i]);
        if (marker < 1 || marker > 4) throw InputError("mesh file: invalid boundary marker");
        f.marker = static_cast<BoundaryMarker>(marker);
    }
    std::string extra;
    if (in >> extra) throw InputError("mesh file: trailing content");
    return Mesh(std::move(vertices), std::move(tets), std::move(facets));
}

void write_mesh(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    out << format_mesh(mesh);
    if (!out) throw InputError("failed writing " + path.string());
}

Mesh read_mesh(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open mesh file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_mesh(buf.str());
}

void write_field(const VertexField& field, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    out << field.values.size() << "\n";
    for (double v : field.values) out << format_double(v) << "\n";
    if (!out) throw InputError("failed writing " + path.string());
}

VertexField read_field(const Mesh& mesh, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open field file " + path.string());
    long long n = -1;
    if (!(in >> n) || n < 0) throw InputError("field file: malformed header in " + path.string());
    if (static_cast<std::size_t>(n) != mesh.num_vertices())
        throw InputError("field file: " + path.string() + " has " + std::to_string(n) + " values, mesh has " +
                         std::to_string(mesh.num_vertices()) + " vertices");
    VertexField f = make_field(mesh);
    for (auto& v : f.values) {
        if (!(in >> v)) throw InputError("field file: truncated " + path.string());
        if (!std::isfinite(v)) throw InputError("field file: non-finite value in " + path.string());
    }
    return f;
}

void export_vtk(const Mesh& mesh, const std::map<std::string, VertexField>& fields,
                const std::filesystem::path& path) {
    for (const auto& [name, f] : fields) {
        if (f.mesh_id != mesh.id() || f.values.size() != mesh.num_vertices())
            throw InputError("export_vtk: field '" + name + "' is not bound to this mesh");
        if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
            throw InputError("export_vtk: field name '" + name + "' must be a non-empty token");
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    out << "# vtk DataFile Version 3.0\n";
    out << "adcinv mesh\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& p : mesh.vertices())
        out << format_double(p[0]) << " " << format_double(p[1]) << " " << format_double(p[2]) << "\n";
    out << "CELLS " << mesh.num_tets() << " " << mesh.num_tets() * 5 << "\n";
    for (const auto& t : mesh.tets()) out << "4 " << t.v[0] << " " << t.v[1] << " " << t.v[2] << " " << t.v[3] << "\n";
    out << "CELL_TYPES " << mesh.num_tets() << "\n";
    for (std::size_t t = 0; t < mesh.num_tets(); ++t) out << "10\n"; // VTK_TETRA
    out << "CELL_DATA " << mesh.num_tets() << "\n";
    out << "SCALARS subdomain int 1\nLOOKUP_TABLE default\n";
    for (const auto& t : mesh.tets()) out << static_cast<int>(t.label) << "\n";
    if (!fields.empty()) {
        out << "POINT_DATA " << mesh.num_vertices() << "\n";
        for (const auto& [name, f] : fields) {
            out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : f.values) out << format_double(v) << "\n";
        }
    }
    if (!out) throw InputError("failed writing " + path.string());
}

} // namespace adc
