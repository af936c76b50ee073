#include <cctype>
#include <map>
#include <sstream>

#include "molrel/chem/substructure.hpp"
#include "molrel/core/assets.hpp"

namespace molrel::chem {

namespace {

class SmartsParser {
 public:
  explicit SmartsParser(std::string_view text) : text_(text) {}

  SmartsPattern run() {
    while (pos_ < text_.size()) step();
    if (!branch_stack_.empty()) fail_validation("smarts parse: unclosed branch");
    if (!open_rings_.empty()) fail_validation("smarts parse: unclosed ring bond");
    if (pending_) fail_validation("smarts parse: dangling bond symbol");
    if (pat_.atoms.empty()) fail_validation("smarts parse: no atoms in pattern");
    pat_.source = std::string(text_);
    return std::move(pat_);
  }

 private:
  [[noreturn]] void syntax_error(size_t at, const std::string& what) {
    fail_validation("smarts parse: syntax error at byte ", at, ": ", what);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char peek2() const { return pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0'; }

  void step() {
    char c = peek();
    switch (c) {
      case '(':
        if (current_ < 0) syntax_error(pos_, "branch before any atom");
        branch_stack_.push_back(current_);
        ++pos_;
        return;
      case ')':
        if (branch_stack_.empty()) syntax_error(pos_, "unmatched ')'");
        current_ = branch_stack_.back();
        branch_stack_.pop_back();
        ++pos_;
        return;
      case '-': set_pending(SmartsBond::single); return;
      case '=': set_pending(SmartsBond::double_); return;
      case '#': set_pending(SmartsBond::triple); return;
      case ':': set_pending(SmartsBond::aromatic); return;
      case '[': parse_bracket(); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_bond(c - '0', pos_);
      ++pos_;
      return;
    }
    if (c == '%') {
      if (!std::isdigit(static_cast<unsigned char>(peek2())) || pos_ + 2 >= text_.size() ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2])))
        syntax_error(pos_, "'%' must be followed by two digits");
      ring_bond((text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0'), pos_);
      pos_ += 3;
      return;
    }
    parse_plain_atom();
  }

  void set_pending(SmartsBond b) {
    if (pending_) syntax_error(pos_, "two bond symbols in a row");
    pending_ = b;
    ++pos_;
  }

  void parse_plain_atom() {
    size_t at = pos_;
    char c = peek();
    SmartsAtom atom;
    if (c == 'C' && peek2() == 'l') {
      atom.elements = {"Cl"};
      pos_ += 2;
    } else if (c == 'B' && peek2() == 'r') {
      atom.elements = {"Br"};
      pos_ += 2;
    } else if (c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' || c == 'S' || c == 'F' ||
               c == 'I') {
      atom.elements = {std::string(1, c)};
      ++pos_;
    } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
      atom.elements = {std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))))};
      atom.aromatic = true;
      ++pos_;
    } else {
      syntax_error(at, concat("unsupported SMARTS primitive '", std::string(1, c), "'"));
    }
    if (atom.aromatic != true) atom.aromatic = false;  // plain uppercase = aliphatic
    add_atom(std::move(atom), at);
  }

  void parse_bracket() {
    size_t at = pos_;
    ++pos_;  // '['
    SmartsAtom atom;
    bool saw_element = false;
    while (peek() != ']') {
      char c = peek();
      if (c == '\0') syntax_error(at, "unterminated bracket");
      if (c == ',') {
        if (!saw_element) syntax_error(pos_, "',' before any element");
        ++pos_;
        continue;
      }
      if (c == ';' || c == '&') {  // conjunction separators
        ++pos_;
        continue;
      }
      if (c == 'H' && saw_element) {
        ++pos_;
        int n = 1;
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
          n = peek() - '0';
          ++pos_;
        }
        atom.h_count = n;
        continue;
      }
      if (c == 'X') {
        ++pos_;
        if (!std::isdigit(static_cast<unsigned char>(peek())))
          syntax_error(pos_, "X must be followed by a digit");
        atom.connectivity = peek() - '0';
        ++pos_;
        continue;
      }
      if (c == '+' || c == '-') {
        int sign = c == '+' ? 1 : -1;
        ++pos_;
        int mag = 1;
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
          mag = peek() - '0';
          ++pos_;
        }
        atom.charge = sign * mag;
        continue;
      }
      if (std::isupper(static_cast<unsigned char>(c))) {
        std::string el(1, c);
        ++pos_;
        if (std::islower(static_cast<unsigned char>(peek())) &&
            detail::known_element(el + peek())) {
          el += peek();
          ++pos_;
        }
        if (!detail::known_element(el))
          syntax_error(at, concat("unknown element '", el, "'"));
        atom.elements.push_back(el);
        if (!atom.aromatic) atom.aromatic = false;
        saw_element = true;
        continue;
      }
      if (std::islower(static_cast<unsigned char>(c))) {
        std::string el(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        if (!detail::known_element(el)) syntax_error(pos_, "unknown aromatic element");
        atom.elements.push_back(el);
        atom.aromatic = true;
        saw_element = true;
        ++pos_;
        continue;
      }
      syntax_error(pos_, concat("unsupported SMARTS primitive '", std::string(1, c), "'"));
    }
    ++pos_;  // ']'
    // An element list with mixed alternatives keeps aromaticity unspecified
    // unless every alternative was lowercase or uppercase consistently; the
    // restricted table only ever mixes same-case alternatives.
    if (atom.elements.size() > 1 && atom.aromatic == false) atom.aromatic.reset();
    add_atom(std::move(atom), at);
  }

  void add_atom(SmartsAtom atom, size_t at) {
    (void)at;
    pat_.atoms.push_back(std::move(atom));
    int idx = static_cast<int>(pat_.atoms.size()) - 1;
    if (current_ >= 0) {
      SmartsBond b = pending_ ? *pending_ : SmartsBond::single_or_aromatic;
      pat_.bonds.emplace_back(current_, idx, b);
    }
    pending_.reset();
    current_ = idx;
  }

  void ring_bond(int num, size_t at) {
    if (current_ < 0) syntax_error(at, "ring closure before any atom");
    auto pending = pending_;
    pending_.reset();
    auto it = open_rings_.find(num);
    if (it == open_rings_.end()) {
      open_rings_[num] = {current_, pending};
      return;
    }
    auto [atom, open_bond] = it->second;
    open_rings_.erase(it);
    SmartsBond b = open_bond ? *open_bond : (pending ? *pending : SmartsBond::single_or_aromatic);
    if (atom == current_) syntax_error(at, "ring closes onto the same atom");
    pat_.bonds.emplace_back(atom, current_, b);
  }

  std::string_view text_;
  size_t pos_ = 0;
  SmartsPattern pat_;
  int current_ = -1;
  std::vector<int> branch_stack_;
  std::optional<SmartsBond> pending_;
  std::map<int, std::pair<int, std::optional<SmartsBond>>> open_rings_;
};

bool atom_matches(const Molecule& mol, int i, const SmartsAtom& p) {
  const Atom& a = mol.atoms[static_cast<size_t>(i)];
  if (!p.elements.empty()) {
    bool any = false;
    for (const std::string& el : p.elements)
      if (a.element == el) {
        any = true;
        break;
      }
    if (!any) return false;
  }
  if (p.aromatic && *p.aromatic != a.aromatic) return false;
  if (p.connectivity && *p.connectivity != mol.degree(i) + a.h_count) return false;
  if (p.h_count && *p.h_count != a.h_count) return false;
  if (p.charge && *p.charge != a.charge) return false;
  return true;
}

bool bond_matches(const Bond& b, SmartsBond p) {
  switch (p) {
    case SmartsBond::single_or_aromatic:
      return b.order == BondOrder::single || b.order == BondOrder::aromatic;
    case SmartsBond::single: return b.order == BondOrder::single;
    case SmartsBond::double_: return b.order == BondOrder::double_;
    case SmartsBond::triple: return b.order == BondOrder::triple;
    case SmartsBond::aromatic: return b.order == BondOrder::aromatic;
  }
  return false;
}

bool extend(const Molecule& mol, const SmartsPattern& pat, std::vector<int>& map,
            std::vector<bool>& used, size_t next) {
  if (next == pat.atoms.size()) return true;
  for (int cand = 0; cand < mol.num_atoms(); ++cand) {
    if (used[static_cast<size_t>(cand)]) continue;
    if (!atom_matches(mol, cand, pat.atoms[next])) continue;
    bool ok = true;
    for (const auto& [pa, pb, pbond] : pat.bonds) {
      int other = -1;
      if (static_cast<size_t>(pa) == next && static_cast<size_t>(pb) < next) other = map[static_cast<size_t>(pb)];
      else if (static_cast<size_t>(pb) == next && static_cast<size_t>(pa) < next) other = map[static_cast<size_t>(pa)];
      else continue;
      const Bond* mb = mol.find_bond(cand, other);
      if (!mb || !bond_matches(*mb, pbond)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    map[next] = cand;
    used[static_cast<size_t>(cand)] = true;
    if (extend(mol, pat, map, used, next + 1)) return true;
    used[static_cast<size_t>(cand)] = false;
  }
  return false;
}

}  // namespace

SmartsPattern parse_smarts(std::string_view text) {
  if (text.empty()) fail_validation("smarts parse: empty pattern");
  return SmartsParser(text).run();
}

bool matches_pattern(const Molecule& mol, const SmartsPattern& pattern) {
  if (pattern.atoms.size() > static_cast<size_t>(mol.num_atoms())) return false;
  std::vector<int> map(pattern.atoms.size(), -1);
  std::vector<bool> used(static_cast<size_t>(mol.num_atoms()), false);
  return extend(mol, pattern, map, used, 0);
}

const std::vector<NamedPattern>& builtin_patterns() {
  static const std::vector<NamedPattern> table = [] {
    std::vector<NamedPattern> out;
    std::istringstream in(read_asset("smarts_patterns.txt"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        fail_validation("smarts_patterns.txt: expected '<name>\\t<smarts>', got '", line, "'");
      NamedPattern np;
      np.name = line.substr(0, tab);
      np.smarts = line.substr(tab + 1);
      np.pattern = parse_smarts(np.smarts);
      out.push_back(std::move(np));
    }
    if (out.empty()) fail_validation("smarts_patterns.txt: no patterns");
    return out;
  }();
  return table;
}

std::vector<std::string> match_substructures(const Molecule& mol) {
  return match_substructures(mol, builtin_patterns());
}

std::vector<std::string> match_substructures(const Molecule& mol,
                                             const std::vector<NamedPattern>& table) {
  std::vector<std::string> out;
  for (const NamedPattern& np : table)
    if (matches_pattern(mol, np.pattern)) out.push_back(np.name);
  return out;
}

namespace detail {
// Skeleton Molecule view of a SMARTS pattern: first element alternative,
// plus whatever charge / aromaticity / H count the pattern pins.
Molecule smarts_skeleton(std::string_view text) {
  SmartsPattern pat = parse_smarts(text);
  Molecule mol;
  for (const SmartsAtom& pa : pat.atoms) {
    Atom a;
    a.element = pa.elements.empty() ? "C" : pa.elements.front();
    a.aromatic = pa.aromatic.value_or(false);
    a.charge = pa.charge.value_or(0);
    a.h_count = pa.h_count.value_or(0);
    a.bracket = true;
    mol.atoms.push_back(std::move(a));
  }
  for (const auto& [a, b, pbond] : pat.bonds) {
    BondOrder o = BondOrder::single;
    if (pbond == SmartsBond::double_) o = BondOrder::double_;
    else if (pbond == SmartsBond::triple) o = BondOrder::triple;
    else if (pbond == SmartsBond::aromatic) o = BondOrder::aromatic;
    else if (pbond == SmartsBond::single_or_aromatic &&
             mol.atoms[static_cast<size_t>(a)].aromatic && mol.atoms[static_cast<size_t>(b)].aromatic)
      o = BondOrder::aromatic;
    mol.bonds.push_back(Bond{a, b, o, false});
  }
  finalize_molecule(mol);
  return mol;
}
}  // namespace detail

}  // namespace molrel::chem
