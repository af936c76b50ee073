#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "molrel/chem/molecule.hpp"

namespace molrel::chem::detail {

namespace {

// Remaining-bond capacities used during derivation (the standard SELFIES
// constraint set; note N is capped at 3 here, unlike permissive SMILES).
int selfies_capacity(const std::string& el, int charge) {
  int base;
  if (el == "H" || el == "F" || el == "Cl" || el == "Br" || el == "I") base = 1;
  else if (el == "O") base = 2;
  else if (el == "N" || el == "B") base = 3;
  else if (el == "C" || el == "Si") base = 4;
  else if (el == "P") base = 5;
  else if (el == "S") base = 6;
  else return -1;
  return base + std::max(0, charge);
}

struct Symbol {
  std::string text;     // without brackets
  int bond_order = 1;   // from = / # prefix
  bool is_branch = false;
  bool is_ring = false;
  int level = 0;        // Branch1/2/3, Ring1/2/3
  bool is_atom = false;
  std::string element;
  int h_count = -1;     // -1: unspecified (implicit fill later)
  int charge = 0;
  bool is_nop = false;
};

// The overloaded hexadecimal index alphabet.
int index_value(const Symbol& s) {
  static const std::vector<std::string> order = {
      "C",  "Ring1", "Ring2", "Branch1", "=Branch1", "#Branch1", "Branch2", "=Branch2",
      "#Branch2", "O", "N", "=N", "=C", "#C", "S", "P"};
  for (size_t i = 0; i < order.size(); ++i)
    if (s.text == order[i]) return static_cast<int>(i);
  return 0;
}

std::vector<Symbol> tokenize(std::string_view text) {
  std::vector<Symbol> out;
  size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] != '[')
      fail_validation("selfies parse: syntax error at byte ", pos, ": expected '['");
    size_t end = text.find(']', pos);
    if (end == std::string_view::npos)
      fail_validation("selfies parse: syntax error at byte ", pos, ": unterminated symbol");
    Symbol s;
    s.text = std::string(text.substr(pos + 1, end - pos - 1));
    size_t at = pos;
    pos = end + 1;
    if (s.text.empty())
      fail_validation("selfies parse: syntax error at byte ", at, ": empty symbol");
    if (s.text == "nop") {
      s.is_nop = true;
      out.push_back(std::move(s));
      continue;
    }

    std::string body = s.text;
    if (body[0] == '=') {
      s.bond_order = 2;
      body = body.substr(1);
    } else if (body[0] == '#') {
      s.bond_order = 3;
      body = body.substr(1);
    } else if (body[0] == '/' || body[0] == '\\') {
      fail_validation("selfies parse: stereo symbols are not supported (byte ", at, ")");
    }

    auto parse_level = [&](const std::string& stem) -> int {
      if (body.size() == stem.size() + 1 && body.compare(0, stem.size(), stem) == 0 &&
          body.back() >= '1' && body.back() <= '3')
        return body.back() - '0';
      return 0;
    };
    if (int l = parse_level("Branch"); l > 0) {
      s.is_branch = true;
      s.level = l;
      out.push_back(std::move(s));
      continue;
    }
    if (int l = parse_level("Ring"); l > 0) {
      s.is_ring = true;
      s.level = l;
      out.push_back(std::move(s));
      continue;
    }

    // Atom: Element, optional H<digit>, optional charge sign + digit.
    size_t p = 0;
    if (p >= body.size() || !std::isupper(static_cast<unsigned char>(body[p])))
      fail_validation("selfies parse: unknown symbol '[", s.text, "]' at byte ", at);
    s.element = body[p++];
    if (p < body.size() && std::islower(static_cast<unsigned char>(body[p])) &&
        known_element(s.element + body[p]))
      s.element += body[p++];
    if (p < body.size() && body[p] == 'H') {
      ++p;
      if (p >= body.size() || !std::isdigit(static_cast<unsigned char>(body[p])))
        fail_validation("selfies parse: malformed H count in '[", s.text, "]'");
      s.h_count = body[p++] - '0';
    }
    if (p < body.size() && (body[p] == '+' || body[p] == '-')) {
      int sign = body[p] == '+' ? 1 : -1;
      ++p;
      if (p >= body.size() || !std::isdigit(static_cast<unsigned char>(body[p])))
        fail_validation("selfies parse: malformed charge in '[", s.text, "]'");
      s.charge = sign * (body[p++] - '0');
    }
    if (p != body.size())
      fail_validation("selfies parse: unknown symbol '[", s.text, "]' at byte ", at);
    if (!known_element(s.element))
      fail_validation("selfies parse: unknown element '", s.element, "' at byte ", at);
    s.is_atom = true;
    out.push_back(std::move(s));
  }
  return out;
}

class Deriver {
 public:
  explicit Deriver(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {}

  Molecule run() {
    size_t pos = 0;
    derive(pos, symbols_.size(), -1, 0);
    if (mol_.atoms.empty()) fail_validation("selfies parse: no atoms derived");
    resolve_hydrogens();
    finalize_molecule(mol_);
    return std::move(mol_);
  }

 private:
  // Derives up to `count` symbols starting at pos. attach >= 0 means the
  // first derived atom bonds to that atom with order <= max_first_order.
  // Returns the order of that first bond (0 if nothing derived).
  int derive(size_t& pos, size_t count, int attach, int max_first_order) {
    int current = attach;
    int first_order = 0;
    bool first = true;
    size_t consumed = 0;
    while (pos < symbols_.size() && consumed < count) {
      const Symbol& s = symbols_[pos];
      ++pos;
      ++consumed;
      if (s.is_nop) continue;

      if (s.is_atom) {
        int cap = selfies_capacity(s.element, s.charge);
        if (cap < 0) fail_validation("selfies parse: no valence entry for ", s.element);
        if (s.h_count > 0) cap -= s.h_count;
        int order = s.bond_order;
        if (current >= 0) {
          order = std::min(order, remaining_[static_cast<size_t>(current)]);
          if (first && attach >= 0) order = std::min(order, max_first_order);
          order = std::min(order, std::max(0, cap));
        }
        Atom a;
        a.element = s.element;
        a.charge = s.charge;
        a.h_count = std::max(0, s.h_count);
        a.bracket = s.h_count >= 0 || s.charge != 0;
        if (current >= 0 && order < 1) continue;  // no capacity: symbol dropped
        mol_.atoms.push_back(a);
        int idx = mol_.num_atoms() - 1;
        remaining_.push_back(cap);
        if (current >= 0) {
          mol_.bonds.push_back(Bond{current, idx,
                                    order == 2   ? BondOrder::double_
                                    : order == 3 ? BondOrder::triple
                                                 : BondOrder::single,
                                    false});
          remaining_[static_cast<size_t>(current)] -= order;
          remaining_[static_cast<size_t>(idx)] -= order;
          if (first) first_order = order;
        }
        first = false;
        current = idx;
        continue;
      }

      if (s.is_branch) {
        int q = read_index(pos, consumed, count, s.level);
        size_t body = static_cast<size_t>(q) + 1;
        if (current < 0 || remaining_[static_cast<size_t>(current)] <= 1) {
          skip(pos, consumed, count, body);
          continue;
        }
        int budget = std::min(s.bond_order, remaining_[static_cast<size_t>(current)] - 1);
        size_t body_count = std::min(body, count - consumed);
        size_t before = pos;
        derive(pos, body_count, current, budget);
        consumed += pos - before;
        continue;
      }

      if (s.is_ring) {
        int q = read_index(pos, consumed, count, s.level);
        if (current < 0) continue;
        int target = std::max(0, current - (q + 1));
        int order = std::min({s.bond_order, remaining_[static_cast<size_t>(current)],
                              remaining_[static_cast<size_t>(target)]});
        if (target == current || order < 1 || mol_.find_bond(current, target)) continue;
        mol_.bonds.push_back(Bond{target, current,
                                  order == 2   ? BondOrder::double_
                                  : order == 3 ? BondOrder::triple
                                               : BondOrder::single,
                                  false});
        remaining_[static_cast<size_t>(current)] -= order;
        remaining_[static_cast<size_t>(target)] -= order;
        continue;
      }
    }
    return first_order;
  }

  int read_index(size_t& pos, size_t& consumed, size_t count, int level) {
    int value = 0;
    for (int i = 0; i < level; ++i) {
      if (pos >= symbols_.size() || consumed >= count)
        fail_validation("selfies parse: truncated index after branch/ring symbol");
      value = value * 16 + index_value(symbols_[pos]);
      ++pos;
      ++consumed;
    }
    return value;
  }

  void skip(size_t& pos, size_t& consumed, size_t count, size_t n) {
    while (n > 0 && pos < symbols_.size() && consumed < count) {
      ++pos;
      ++consumed;
      --n;
    }
  }

  void resolve_hydrogens() {
    for (int i = 0; i < mol_.num_atoms(); ++i) {
      Atom& a = mol_.atoms[i];
      if (a.bracket) continue;  // explicit H count from the symbol
      int sum = 0;
      for (const Bond& b : mol_.bonds)
        if (b.a == i || b.b == i) sum += static_cast<int>(b.order);
      int h = implicit_h_fill(a.element, false, sum, a.charge);
      if (h < 0)
        fail_validation("selfies parse: valence violation on atom ", i, " (", a.element, ")");
      a.h_count = h;
    }
  }

  std::vector<Symbol> symbols_;
  Molecule mol_;
  std::vector<int> remaining_;
};

}  // namespace

Molecule parse_selfies(std::string_view text) {
  return Deriver(tokenize(text)).run();
}

}  // namespace molrel::chem::detail
