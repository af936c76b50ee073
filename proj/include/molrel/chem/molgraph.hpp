#pragma once

#include <utility>
#include <vector>

#include "molrel/chem/molecule.hpp"
#include "molrel/core/types.hpp"

namespace molrel::chem {

// Featurized molecular graph. Node rows are one-hot blocks:
//   element (12) + degree 0-5 (6) + charge -2..+2 clipped (5)
//   + aromatic flag (1) + H count 0-4 clipped (5)        = 29 columns.
// Edge rows (one per directed edge, both directions per bond):
//   bond order one-hot {single, double, triple, aromatic} (4) + in-ring (1).
struct MolGraph {
  static constexpr int kNodeFeatures = 29;
  static constexpr int kEdgeFeatures = 5;
  static constexpr int kNumElements = 12;

  Matd node_features;                            // num_atoms x 29
  std::vector<std::pair<int, int>> edge_index;   // directed (src, dst)
  Matd edge_features;                            // num_directed_edges x 5

  int num_atoms() const { return static_cast<int>(node_features.rows()); }
  int num_edges() const { return static_cast<int>(edge_index.size()); }
};

// Index into the element one-hot block; unknown elements land on the last slot.
int element_feature_index(const std::string& element);

MolGraph to_graph(const Molecule& mol);

}  // namespace molrel::chem
