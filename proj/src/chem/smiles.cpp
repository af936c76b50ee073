#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include "molrel/chem/molecule.hpp"

namespace molrel::chem {

namespace detail {

namespace {

struct ValenceRow {
  const char* element;
  std::vector<int> allowed;
};

const std::vector<ValenceRow>& valence_table() {
  static const std::vector<ValenceRow> table = {
      {"B", {3}},  {"C", {4}},  {"N", {3, 5}}, {"O", {2}},     {"P", {3, 5}},
      {"S", {2, 4, 6}}, {"F", {1}}, {"Cl", {1}}, {"Br", {1}}, {"I", {1}},
      {"Si", {4}}, {"H", {1}},
  };
  return table;
}

const std::vector<int>* allowed_valences(const std::string& el) {
  for (const auto& row : valence_table())
    if (el == row.element) return &row.allowed;
  return nullptr;
}

bool aromatic_capable(const std::string& el) {
  return el == "B" || el == "C" || el == "N" || el == "O" || el == "P" || el == "S";
}

}  // namespace

bool known_element(const std::string& el) { return allowed_valences(el) != nullptr; }

int max_valence(const std::string& el) {
  const auto* v = allowed_valences(el);
  return v ? v->back() : -1;
}

// Hydrogen fill for organic-subset atoms. Aromatic counting: each aromatic
// bond contributes 1 to bond_order_sum; aromatic carbon reserves one extra
// valence for the pi system, aromatic heteroatoms get no implicit hydrogens.
int implicit_h_fill(const std::string& el, bool aromatic, int bond_order_sum, int charge) {
  const auto* allowed = allowed_valences(el);
  if (!allowed) return -1;
  int cap = allowed->back() + std::max(0, charge);
  if (bond_order_sum > cap) return -1;
  if (aromatic) {
    if (el == "C") return std::max(0, 4 - (bond_order_sum + 1));
    return 0;
  }
  for (int v : *allowed)
    if (bond_order_sum <= v + std::max(0, charge)) return v + std::max(0, charge) - bond_order_sum;
  return -1;
}

namespace {

struct RingOpen {
  int atom;
  std::optional<BondOrder> order;
  size_t pos;
};

class SmilesParser {
 public:
  SmilesParser(std::string_view text, bool smarts_mode) : text_(text), smarts_(smarts_mode) {}

  Molecule run() {
    while (pos_ < text_.size()) step();
    if (!branch_stack_.empty())
      fail_validation(err_prefix(), "unclosed branch opened at byte ", branch_stack_.back().second);
    if (!open_rings_.empty())
      fail_validation(err_prefix(), "unclosed ring bond ", open_rings_.begin()->first,
                      " opened at byte ", open_rings_.begin()->second.pos);
    if (pending_order_)
      fail_validation(err_prefix(), "dangling bond symbol at byte ", pending_pos_);
    if (mol_.atoms.empty()) fail_validation(err_prefix(), "no atoms in input");
    if (!smarts_) resolve_hydrogens();
    finalize_molecule(mol_);
    return std::move(mol_);
  }

 private:
  std::string err_prefix() const {
    return smarts_ ? "smarts parse: " : "smiles parse: ";
  }

  [[noreturn]] void syntax_error(size_t at, const std::string& what) {
    fail_validation(err_prefix(), "syntax error at byte ", at, ": ", what);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char peek2() const { return pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0'; }

  void step() {
    char c = peek();
    switch (c) {
      case '(': {
        if (current_ < 0) syntax_error(pos_, "branch before any atom");
        branch_stack_.emplace_back(current_, pos_);
        ++pos_;
        return;
      }
      case ')': {
        if (branch_stack_.empty()) syntax_error(pos_, "unmatched ')'");
        current_ = branch_stack_.back().first;
        branch_stack_.pop_back();
        ++pos_;
        return;
      }
      case '-': set_pending(BondOrder::single); return;
      case '=': set_pending(BondOrder::double_); return;
      case '#': set_pending(BondOrder::triple); return;
      case ':': set_pending(BondOrder::aromatic); return;
      case '/':
      case '\\':
        syntax_error(pos_, "stereo bond markers are not supported in this subset");
      case '.':
        syntax_error(pos_, "disconnected components ('.') are not supported in this subset");
      case '%': {
        if (!std::isdigit(static_cast<unsigned char>(peek2())) || pos_ + 2 >= text_.size() ||
            !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2])))
          syntax_error(pos_, "'%' must be followed by two digits");
        int num = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
        size_t at = pos_;
        pos_ += 3;
        ring_bond(num, at);
        return;
      }
      case '[': parse_bracket_atom(); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t at = pos_++;
      ring_bond(c - '0', at);
      return;
    }
    if (std::isspace(static_cast<unsigned char>(c)))
      syntax_error(pos_, "whitespace inside molecular string");
    parse_organic_atom();
  }

  void set_pending(BondOrder o) {
    if (pending_order_) syntax_error(pos_, "two bond symbols in a row");
    pending_order_ = o;
    pending_pos_ = pos_;
    ++pos_;
  }

  void parse_organic_atom() {
    size_t at = pos_;
    char c = peek();
    std::string el;
    bool aromatic = false;
    if (c == 'C' && peek2() == 'l') {
      el = "Cl";
      pos_ += 2;
    } else if (c == 'B' && peek2() == 'r') {
      el = "Br";
      pos_ += 2;
    } else if (c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' || c == 'S' || c == 'F' ||
               c == 'I') {
      el = std::string(1, c);
      ++pos_;
    } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
      el = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      aromatic = true;
      ++pos_;
    } else {
      syntax_error(at, concat("unexpected character '", std::string(1, c), "'"));
    }
    add_atom(Atom{el, 0, aromatic, 0, false}, at);
  }

  void parse_bracket_atom() {
    size_t at = pos_;
    ++pos_;  // '['
    if (std::isdigit(static_cast<unsigned char>(peek())))
      syntax_error(pos_, "isotope specifications are not supported in this subset");
    Atom atom;
    atom.bracket = true;
    char c = peek();
    if (std::isupper(static_cast<unsigned char>(c))) {
      std::string el(1, c);
      ++pos_;
      if (std::islower(static_cast<unsigned char>(peek())) && known_element(el + peek())) {
        el += peek();
        ++pos_;
      }
      atom.element = el;
    } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
      atom.element = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      atom.aromatic = true;
      ++pos_;
    } else {
      syntax_error(pos_, "expected element symbol inside brackets");
    }
    if (!known_element(atom.element))
      syntax_error(at, concat("unknown element '", atom.element, "'"));

    while (peek() != ']') {
      char k = peek();
      if (k == '@')
        syntax_error(pos_, "stereo descriptors ('@') are not supported in this subset");
      if (k == 'H') {
        ++pos_;
        int n = 1;
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
          n = peek() - '0';
          ++pos_;
        }
        atom.h_count = n;
        continue;
      }
      if (k == '+' || k == '-') {
        int sign = k == '+' ? 1 : -1;
        ++pos_;
        int mag = 1;
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
          mag = peek() - '0';
          ++pos_;
        } else {
          while (peek() == k) {
            ++mag;
            ++pos_;
          }
        }
        atom.charge = sign * mag;
        continue;
      }
      if (k == '\0') syntax_error(at, "unterminated bracket atom");
      syntax_error(pos_, concat("unexpected character '", std::string(1, k), "' inside brackets"));
    }
    ++pos_;  // ']'
    add_atom(atom, at);
  }

  void add_atom(Atom atom, size_t at) {
    mol_.atoms.push_back(std::move(atom));
    atom_pos_.push_back(at);
    int idx = mol_.num_atoms() - 1;
    if (current_ >= 0) make_bond(current_, idx, take_pending(), at);
    else if (pending_order_)
      syntax_error(pending_pos_, "bond symbol before the first atom");
    current_ = idx;
  }

  std::optional<BondOrder> take_pending() {
    auto o = pending_order_;
    pending_order_.reset();
    return o;
  }

  void make_bond(int a, int b, std::optional<BondOrder> order, size_t at) {
    if (a == b) syntax_error(at, "ring bond closes onto the same atom");
    if (mol_.find_bond(a, b)) syntax_error(at, "duplicate bond between the same atoms");
    BondOrder o;
    if (order) {
      o = *order;
      if (o == BondOrder::aromatic && !(mol_.atoms[a].aromatic && mol_.atoms[b].aromatic))
        syntax_error(at, "':' bond requires two aromatic atoms");
    } else {
      o = (mol_.atoms[a].aromatic && mol_.atoms[b].aromatic) ? BondOrder::aromatic
                                                             : BondOrder::single;
    }
    mol_.bonds.push_back(Bond{a, b, o, false});
  }

  void ring_bond(int num, size_t at) {
    if (current_ < 0) syntax_error(at, "ring closure before any atom");
    auto pending = take_pending();
    auto it = open_rings_.find(num);
    if (it == open_rings_.end()) {
      open_rings_[num] = RingOpen{current_, pending, at};
      return;
    }
    RingOpen open = it->second;
    open_rings_.erase(it);
    std::optional<BondOrder> order;
    if (open.order && pending && *open.order != *pending)
      syntax_error(at, "ring bond order conflicts with its opening");
    order = open.order ? open.order : pending;
    make_bond(open.atom, current_, order, at);
  }

  void resolve_hydrogens() {
    for (int i = 0; i < mol_.num_atoms(); ++i) {
      Atom& a = mol_.atoms[i];
      if (a.aromatic && !aromatic_capable(a.element))
        fail_validation(err_prefix(), "element ", a.element, " at byte ", atom_pos_[i],
                        " cannot be aromatic");
      int sum = 0;
      for (const Bond& b : mol_.bonds)
        if (b.a == i || b.b == i)
          sum += b.order == BondOrder::aromatic ? 1 : static_cast<int>(b.order);
      if (a.bracket) {
        if (sum + a.h_count > max_valence(a.element) + std::max(0, a.charge))
          fail_validation(err_prefix(), "valence violation at byte ", atom_pos_[i], ": ",
                          a.element, " has ", sum + a.h_count, " bonds, allowed at most ",
                          max_valence(a.element) + std::max(0, a.charge));
      } else {
        int h = implicit_h_fill(a.element, a.aromatic, sum, a.charge);
        if (h < 0)
          fail_validation(err_prefix(), "valence violation at byte ", atom_pos_[i], ": ",
                          a.element, " has bond order sum ", sum, ", allowed at most ",
                          max_valence(a.element));
        a.h_count = h;
      }
    }
  }

  std::string_view text_;
  bool smarts_;
  size_t pos_ = 0;
  Molecule mol_;
  std::vector<size_t> atom_pos_;
  int current_ = -1;
  std::vector<std::pair<int, size_t>> branch_stack_;
  std::optional<BondOrder> pending_order_;
  size_t pending_pos_ = 0;
  std::map<int, RingOpen> open_rings_;
};

// Non-bridge edges are exactly the edges on cycles.
void mark_ring_bonds(Molecule& mol) {
  const int n = mol.num_atoms();
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<size_t>(n));  // (neighbor, bond)
  for (int k = 0; k < mol.num_bonds(); ++k) {
    adj[static_cast<size_t>(mol.bonds[k].a)].emplace_back(mol.bonds[k].b, k);
    adj[static_cast<size_t>(mol.bonds[k].b)].emplace_back(mol.bonds[k].a, k);
  }
  std::vector<int> disc(static_cast<size_t>(n), -1), low(static_cast<size_t>(n), 0);
  int timer = 0;
  // Iterative DFS: (node, parent bond, next neighbor index).
  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<size_t>(root)] >= 0) continue;
    std::vector<std::tuple<int, int, size_t>> stack{{root, -1, 0}};
    disc[static_cast<size_t>(root)] = low[static_cast<size_t>(root)] = timer++;
    while (!stack.empty()) {
      auto& [u, pbond, next] = stack.back();
      if (next < adj[static_cast<size_t>(u)].size()) {
        auto [v, bond] = adj[static_cast<size_t>(u)][next++];
        if (bond == pbond) continue;
        if (disc[static_cast<size_t>(v)] < 0) {
          disc[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = timer++;
          stack.emplace_back(v, bond, 0);
        } else {
          // Back edge: always on a cycle.
          mol.bonds[static_cast<size_t>(bond)].in_ring = true;
          low[static_cast<size_t>(u)] = std::min(low[static_cast<size_t>(u)], disc[static_cast<size_t>(v)]);
        }
      } else {
        const int done = u;
        const int done_bond = pbond;
        stack.pop_back();
        if (!stack.empty()) {
          int parent = std::get<0>(stack.back());
          low[static_cast<size_t>(parent)] =
              std::min(low[static_cast<size_t>(parent)], low[static_cast<size_t>(done)]);
          // (parent, done) is a bridge iff low[done] > disc[parent].
          if (low[static_cast<size_t>(done)] <= disc[static_cast<size_t>(parent)])
            mol.bonds[static_cast<size_t>(done_bond)].in_ring = true;
        }
      }
    }
  }
}

}  // namespace

void finalize_molecule(Molecule& mol) {
  for (const Bond& b : mol.bonds) {
    if (b.a == b.b || b.a < 0 || b.b < 0 || b.a >= mol.num_atoms() || b.b >= mol.num_atoms())
      fail_validation("molecule: bond endpoints out of range");
    if (b.order == BondOrder::aromatic &&
        !(mol.atoms[static_cast<size_t>(b.a)].aromatic && mol.atoms[static_cast<size_t>(b.b)].aromatic))
      fail_validation("molecule: aromatic bond joins non-aromatic atom");
  }
  mark_ring_bonds(mol);
}

Molecule parse_smiles(std::string_view text, bool smarts_mode) {
  return SmilesParser(text, smarts_mode).run();
}

}  // namespace detail

Molecule parse(std::string_view text, ReprKind kind) {
  if (text.empty()) fail_validation("parse: empty input");
  Molecule mol;
  switch (kind) {
    case ReprKind::smiles: mol = detail::parse_smiles(text, false); break;
    case ReprKind::smarts: mol = detail::smarts_skeleton(text); break;
    case ReprKind::selfies: mol = detail::parse_selfies(text); break;
  }
  mol.source_text = std::string(text);
  mol.source_kind = kind;
  return mol;
}

}  // namespace molrel::chem
