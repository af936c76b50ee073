#pragma once

#include <string>
#include <vector>

#include "molrel/chem/molecule.hpp"
#include "molrel/core/types.hpp"

namespace molrel::chem {

// 3D coordinates in Angstrom, one row per atom of the owning Molecule.
struct Conformer {
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> coords;
  std::vector<std::string> elements;

  int num_atoms() const { return static_cast<int>(coords.rows()); }
};

// XYZ file: line 1 atom count, line 2 comment, then "El x y z" rows.
Conformer load_conformer(const std::string& path);
void save_conformer(const Conformer& conf, const std::string& path, const std::string& comment);

// Expects the file's atom count and element sequence to match mol.
Conformer load_conformer_for(const Molecule& mol, const std::string& path);

// Deterministic test-scaffolding coordinates: atoms seeded on a unit lattice
// with seeded jitter, then a fixed 200-iteration spring relaxation (bonded
// rest length 1.5 A, repulsive floor 1.0 A). Not chemically accurate.
Conformer synth_conformer(const Molecule& mol, uint64_t seed);

}  // namespace molrel::chem
