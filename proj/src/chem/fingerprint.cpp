#include <algorithm>
#include <bit>
#include <vector>

#include "molrel/chem/fingerprint.hpp"

namespace molrel::chem {

namespace {

constexpr uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

uint64_t fnv1a(const void* data, size_t len, uint64_t h = kFnvOffset) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
  return h;
}

uint64_t fnv1a_u64(uint64_t v, uint64_t h) { return fnv1a(&v, sizeof(v), h); }

// Initial atom invariant: element, charge, aromaticity, H count, degree.
uint64_t atom_invariant(const Molecule& mol, int i) {
  const Atom& a = mol.atoms[static_cast<size_t>(i)];
  uint64_t h = fnv1a(a.element.data(), a.element.size());
  h = fnv1a_u64(static_cast<uint64_t>(a.charge + 8), h);
  h = fnv1a_u64(a.aromatic ? 1 : 0, h);
  h = fnv1a_u64(static_cast<uint64_t>(a.h_count), h);
  h = fnv1a_u64(static_cast<uint64_t>(mol.degree(i)), h);
  return h;
}

}  // namespace

int Fingerprint::popcount() const {
  int n = 0;
  for (uint64_t w : words) n += std::popcount(w);
  return n;
}

Fingerprint fingerprint(const Molecule& mol) {
  const int n = mol.num_atoms();
  std::vector<std::vector<std::pair<int, int>>> nbrs(static_cast<size_t>(n));  // (bond code, atom)
  for (const Bond& b : mol.bonds) {
    nbrs[static_cast<size_t>(b.a)].emplace_back(static_cast<int>(b.order), b.b);
    nbrs[static_cast<size_t>(b.b)].emplace_back(static_cast<int>(b.order), b.a);
  }

  Fingerprint fp;
  std::vector<uint64_t> env(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) env[static_cast<size_t>(i)] = atom_invariant(mol, i);
  for (uint64_t h : env) fp.set(h);

  for (int r = 1; r <= Fingerprint::kRadius; ++r) {
    std::vector<uint64_t> next(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      // Sorted (bond code, neighbor hash) pairs make the tuple canonical.
      std::vector<std::pair<int, uint64_t>> shell;
      shell.reserve(nbrs[static_cast<size_t>(i)].size());
      for (auto [code, j] : nbrs[static_cast<size_t>(i)])
        shell.emplace_back(code, env[static_cast<size_t>(j)]);
      std::sort(shell.begin(), shell.end());
      uint64_t h = fnv1a_u64(static_cast<uint64_t>(r), env[static_cast<size_t>(i)]);
      for (auto [code, nh] : shell) {
        h = fnv1a_u64(static_cast<uint64_t>(code), h);
        h = fnv1a_u64(nh, h);
      }
      next[static_cast<size_t>(i)] = h;
    }
    env = std::move(next);
    for (uint64_t h : env) fp.set(h);
  }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  int inter = 0, uni = 0;
  for (size_t w = 0; w < a.words.size(); ++w) {
    inter += std::popcount(a.words[w] & b.words[w]);
    uni += std::popcount(a.words[w] | b.words[w]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace molrel::chem
