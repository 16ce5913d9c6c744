#include "nchhs/field_io.hpp"

#include "nchhs/errors.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "field snapshots are defined little-endian");

namespace nchhs {

void write_field(const std::string& path, const ScalarField& f, double t, SnapshotFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_field: cannot open " + path);
    const Grid& g = f.grid;
    char header[160];
    std::snprintf(header, sizeof(header), "NCHHS-FIELD %d %d %.17g %.17g %.17g\n", g.nx, g.ny,
                  g.lx, g.ly, t);
    out << header;
    if (format == SnapshotFormat::binary) {
        std::vector<double> row(g.nx);
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) row[i] = f.v(i, j);
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(sizeof(double) * row.size()));
        }
    } else {
        char buf[40];
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g\n", f.v(i, j));
                out << buf;
            }
    }
    if (!out) throw IoError("write_field: write failed for " + path);
}

LoadedField read_field(const std::string& path, BoundaryMode mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_field: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("read_field: empty file " + path);

    std::istringstream hs(header);
    std::string magic;
    int nx = 0, ny = 0;
    double lx = 0, ly = 0, t = 0;
    hs >> magic >> nx >> ny >> lx >> ly >> t;
    if (magic != "NCHHS-FIELD" || hs.fail())
        throw IoError("read_field: bad header in " + path);
    if (nx < 8 || ny < 8 || !(lx > 0) || !(ly > 0))
        throw IoError("read_field: invalid grid in header of " + path);

    DomainSpec spec;
    spec.nx = nx;
    spec.ny = ny;
    spec.lx = lx;
    spec.ly = ly;
    spec.boundary_mode = mode;
    LoadedField out{ScalarField::zeros(Grid::make(spec)), t};

    const auto header_len = static_cast<std::uintmax_t>(in.tellg());
    const std::uintmax_t fsize = std::filesystem::file_size(path);
    const std::uintmax_t payload = fsize - header_len;
    const std::uintmax_t want = static_cast<std::uintmax_t>(nx) * ny * sizeof(double);

    if (payload == want) {
        std::vector<double> row(nx);
        for (int j = 0; j < ny; ++j) {
            in.read(reinterpret_cast<char*>(row.data()),
                    static_cast<std::streamsize>(sizeof(double) * row.size()));
            if (!in) throw IoError("read_field: truncated payload in " + path);
            for (int i = 0; i < nx; ++i) out.field.v(i, j) = row[i];
        }
    } else {
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                std::string line;
                if (!std::getline(in, line))
                    throw IoError("read_field: truncated ASCII payload in " + path);
                out.field.v(i, j) = std::strtod(line.c_str(), nullptr);
            }
    }
    return out;
}

void write_pgm(const std::string& path, const ScalarField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_pgm: cannot open " + path);
    const Grid& g = f.grid;
    const double lo = f.v.minCoeff(), hi = f.v.maxCoeff();
    const double span = hi - lo;
    out << "P5\n" << g.nx << " " << g.ny << "\n255\n";
    std::vector<unsigned char> row(g.nx);
    for (int j = g.ny - 1; j >= 0; --j) { // top row first
        for (int i = 0; i < g.nx; ++i) {
            const double v = span > 0 ? (f.v(i, j) - lo) / span : 0.5;
            row[i] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()), g.nx);
    }
    if (!out) throw IoError("write_pgm: write failed for " + path);
}

} // namespace nchhs
