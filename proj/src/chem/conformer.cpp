#include <cmath>
#include <fstream>
#include <sstream>

#include "molrel/chem/conformer.hpp"
#include "molrel/core/rng.hpp"

namespace molrel::chem {

Conformer load_conformer(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail_validation("xyz: cannot open '", path, "'");
  std::string line;
  if (!std::getline(f, line)) fail_validation("xyz: '", path, "' is empty");
  int n = 0;
  try {
    n = std::stoi(line);
  } catch (...) {
    fail_validation("xyz: '", path, "' line 1 must be the atom count, got '", line, "'");
  }
  if (n <= 0) fail_validation("xyz: '", path, "' declares ", n, " atoms");
  if (!std::getline(f, line)) fail_validation("xyz: '", path, "' missing comment line");

  Conformer conf;
  conf.coords.resize(n, 3);
  conf.elements.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (!std::getline(f, line))
      fail_validation("xyz: '", path, "' ends after ", i, " of ", n, " atom rows");
    std::istringstream row(line);
    std::string el;
    double x, y, z;
    if (!(row >> el >> x >> y >> z))
      fail_validation("xyz: '", path, "' malformed atom row ", i + 3, ": '", line, "'");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
      fail_validation("xyz: '", path, "' non-finite coordinate on row ", i + 3);
    conf.elements.push_back(el);
    conf.coords.row(i) << x, y, z;
  }
  return conf;
}

void save_conformer(const Conformer& conf, const std::string& path, const std::string& comment) {
  std::ofstream f(path);
  if (!f) fail_runtime("xyz: cannot open '", path, "' for writing");
  f << conf.num_atoms() << "\n" << comment << "\n";
  for (int i = 0; i < conf.num_atoms(); ++i)
    f << conf.elements[static_cast<size_t>(i)] << " " << conf.coords(i, 0) << " "
      << conf.coords(i, 1) << " " << conf.coords(i, 2) << "\n";
}

Conformer load_conformer_for(const Molecule& mol, const std::string& path) {
  Conformer conf = load_conformer(path);
  if (conf.num_atoms() != mol.num_atoms())
    fail_validation("xyz: '", path, "' has ", conf.num_atoms(), " atoms but molecule has ",
                    mol.num_atoms());
  for (int i = 0; i < mol.num_atoms(); ++i)
    if (conf.elements[static_cast<size_t>(i)] != mol.atoms[static_cast<size_t>(i)].element)
      fail_validation("xyz: '", path, "' element mismatch at atom ", i, ": ",
                      conf.elements[static_cast<size_t>(i)], " vs ",
                      mol.atoms[static_cast<size_t>(i)].element);
  return conf;
}

Conformer synth_conformer(const Molecule& mol, uint64_t seed) {
  const int n = mol.num_atoms();
  Conformer conf;
  conf.coords.resize(n, 3);
  for (const Atom& a : mol.atoms) conf.elements.push_back(a.element);

  // Unit lattice seeding plus jitter to break symmetry.
  Rng rng(seed ^ 0x636f6e66ULL);
  const int side = std::max(1, static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n)))));
  for (int i = 0; i < n; ++i) {
    conf.coords(i, 0) = static_cast<double>(i % side) + 0.1 * rng.uniform(-1, 1);
    conf.coords(i, 1) = static_cast<double>((i / side) % side) + 0.1 * rng.uniform(-1, 1);
    conf.coords(i, 2) = static_cast<double>(i / (side * side)) + 0.1 * rng.uniform(-1, 1);
  }

  constexpr int kIterations = 200;
  constexpr double kRest = 1.5;       // bonded rest length (A)
  constexpr double kFloor = 1.0;      // repulsive floor (A)
  constexpr double kStep = 0.05;
  for (int it = 0; it < kIterations; ++it) {
    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> force =
        Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>::Zero(n, 3);
    for (const Bond& b : mol.bonds) {
      Eigen::RowVector3d d = conf.coords.row(b.a) - conf.coords.row(b.b);
      double dist = std::max(d.norm(), 1e-9);
      Eigen::RowVector3d f = (kRest - dist) * d / dist;
      force.row(b.a) += f;
      force.row(b.b) -= f;
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Eigen::RowVector3d d = conf.coords.row(i) - conf.coords.row(j);
        double dist = std::max(d.norm(), 1e-9);
        if (dist < kFloor) {
          Eigen::RowVector3d f = (kFloor - dist) * d / dist;
          force.row(i) += f;
          force.row(j) -= f;
        }
      }
    }
    conf.coords += kStep * force;
  }
  return conf;
}

}  // namespace molrel::chem
