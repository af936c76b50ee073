#include <algorithm>
#include <array>

#include "molrel/chem/molgraph.hpp"

namespace molrel::chem {

namespace {
constexpr std::array<const char*, 11> kElementOrder = {"B", "C",  "N",  "O", "F", "Si",
                                                       "P", "S", "Cl", "Br", "I"};
}

int element_feature_index(const std::string& element) {
  for (size_t i = 0; i < kElementOrder.size(); ++i)
    if (element == kElementOrder[i]) return static_cast<int>(i);
  return MolGraph::kNumElements - 1;  // "other"
}

MolGraph to_graph(const Molecule& mol) {
  const int n = mol.num_atoms();
  MolGraph g;
  g.node_features = Matd::Zero(n, MolGraph::kNodeFeatures);

  std::vector<int> degree(static_cast<size_t>(n), 0);
  for (const Bond& b : mol.bonds) {
    ++degree[static_cast<size_t>(b.a)];
    ++degree[static_cast<size_t>(b.b)];
  }

  for (int i = 0; i < n; ++i) {
    const Atom& a = mol.atoms[static_cast<size_t>(i)];
    int col = 0;
    g.node_features(i, col + element_feature_index(a.element)) = 1.0;
    col += MolGraph::kNumElements;  // 12
    g.node_features(i, col + std::min(degree[static_cast<size_t>(i)], 5)) = 1.0;
    col += 6;
    g.node_features(i, col + std::clamp(a.charge, -2, 2) + 2) = 1.0;
    col += 5;
    if (a.aromatic) g.node_features(i, col) = 1.0;
    col += 1;
    g.node_features(i, col + std::min(a.h_count, 4)) = 1.0;
  }

  g.edge_features = Matd::Zero(2 * mol.num_bonds(), MolGraph::kEdgeFeatures);
  g.edge_index.reserve(static_cast<size_t>(2 * mol.num_bonds()));
  int row = 0;
  for (const Bond& b : mol.bonds) {
    int order_slot = 0;
    switch (b.order) {
      case BondOrder::single: order_slot = 0; break;
      case BondOrder::double_: order_slot = 1; break;
      case BondOrder::triple: order_slot = 2; break;
      case BondOrder::aromatic: order_slot = 3; break;
    }
    for (auto [s, d] : {std::pair{b.a, b.b}, std::pair{b.b, b.a}}) {
      g.edge_index.emplace_back(s, d);
      g.edge_features(row, order_slot) = 1.0;
      if (b.in_ring) g.edge_features(row, 4) = 1.0;
      ++row;
    }
  }
  return g;
}

}  // namespace molrel::chem
