#include "omcf/snapshot_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace omcf {

namespace {

constexpr const char* kMagic = "obstacle-mcf v1";

void put_le(std::ostream& os, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  double x;
  std::memcpy(&x, &bits, sizeof x);
  return x;
}

}  // namespace

std::string snapshot_header(int dim, int n, double t) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s dim=%d n=%d t=%.17g\n", kMagic, dim, n, t);
  return buf;
}

void write_snapshot(std::ostream& os, const ScalarField& u, double t) {
  os << snapshot_header(u.grid().dim(), u.grid().n(), t);
  for (double v : u.values()) put_le(os, v);
}

void write_snapshot(const std::string& path, const ScalarField& u, double t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write snapshot '" + path + "'");
  write_snapshot(os, u, t);
  if (!os) throw std::runtime_error("error while writing snapshot '" + path + "'");
}

FieldSnapshot read_snapshot(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw SnapshotFormatError("snapshot: missing header line");
  int dim = 0, n = 0;
  double t = 0.0;
  char tail = 0;
  const std::string fmt = std::string(kMagic) + " dim=%d n=%d t=%lf%c";
  if (std::sscanf(header.c_str(), fmt.c_str(), &dim, &n, &t, &tail) != 3)
    throw SnapshotFormatError("snapshot: bad header '" + header + "'");
  if (dim < 1 || dim > 3 || n < 8) throw SnapshotFormatError("snapshot: unsupported dim/n in header '" + header + "'");
  const TorusGrid grid(dim, n);
  std::vector<unsigned char> raw(grid.size() * 8);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size())
    throw SnapshotFormatError("snapshot: payload has " + std::to_string(is.gcount()) + " bytes, expected " +
                              std::to_string(raw.size()));
  if (is.peek() != std::char_traits<char>::eof()) throw SnapshotFormatError("snapshot: trailing bytes after payload");
  std::vector<double> values(grid.size());
  for (std::size_t p = 0; p < values.size(); ++p) values[p] = get_le(raw.data() + 8 * p);
  return {ScalarField(grid, std::move(values)), t};
}

FieldSnapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SnapshotFormatError("cannot open snapshot '" + path + "'");
  return read_snapshot(is);
}

void write_snapshot_csv(std::ostream& os, const ScalarField& u) {
  const TorusGrid& g = u.grid();
  if (g.dim() > 2) throw SnapshotFormatError("CSV export supports dim <= 2, snapshot has dim 3");
  os << (g.dim() == 1 ? "i,u\n" : "i,j,u\n");
  char buf[64];
  for (std::size_t p = 0; p < g.size(); ++p) {
    const Index3 idx = g.multi_index(p);
    std::snprintf(buf, sizeof buf, "%.17g", u[p]);
    if (g.dim() == 1) os << idx[0] << ',' << buf << '\n';
    else os << idx[0] << ',' << idx[1] << ',' << buf << '\n';
  }
}

}  // namespace omcf
