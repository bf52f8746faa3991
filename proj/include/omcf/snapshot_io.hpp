#pragma once

// Field snapshots on disk: a one-line text header
//   obstacle-mcf v1 dim=<d> n=<n> t=<time>\n
// followed by n^d little-endian float64 values in row-major order (last axis
// fastest). CSV export for d <= 2.

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "omcf/grid.hpp"

namespace omcf {

class SnapshotFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldSnapshot {
  ScalarField u;
  double t = 0.0;
};

std::string snapshot_header(int dim, int n, double t);

void write_snapshot(std::ostream& os, const ScalarField& u, double t);
void write_snapshot(const std::string& path, const ScalarField& u, double t);

/// Throws SnapshotFormatError on a bad header or a short payload.
FieldSnapshot read_snapshot(std::istream& is);
FieldSnapshot read_snapshot(const std::string& path);

/// Header "i,u" (d = 1) or "i,j,u" (d = 2), one row per grid point in storage
/// order. Throws SnapshotFormatError for d = 3.
void write_snapshot_csv(std::ostream& os, const ScalarField& u);

}  // namespace omcf
