#include "support/progen.hpp"

#include <random>
#include <sstream>
#include <vector>

namespace progen {

namespace {

struct Gen {
  std::mt19937_64 rng;
  std::ostringstream out;
  std::vector<std::string> qs, is, fs, bs;
  int next_id = 0;
  int allocs = 0;
  int stmts = 0;

  explicit Gen(std::uint64_t seed) : rng(seed) {}

  int pick(int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }
  std::string fresh(const char* prefix) { return prefix + std::to_string(next_id++); }

  std::string int_expr(int depth) {
    if (depth == 0 || is.empty() || pick(3) == 0) {
      if (!is.empty() && pick(2) == 0) return is[pick(static_cast<int>(is.size()))];
      return std::to_string(pick(10));
    }
    std::string a = int_expr(depth - 1), b = int_expr(depth - 1);
    switch (pick(3)) {
      case 0: return "(" + a + " + " + b + ")";
      case 1: return "(" + a + " - " + b + ")";
      // keep magnitudes bounded so chained assignments cannot overflow
      default: return "((" + a + " * " + b + ") % 97)";
    }
  }

  std::string float_expr(int depth) {
    if (depth == 0 || pick(3) == 0) {
      if (!fs.empty() && pick(2) == 0) return fs[pick(static_cast<int>(fs.size()))];
      const char* lits[] = {"0.5", "1.25", "0.1", "2.0", "-0.75"};
      return lits[pick(5)];
    }
    std::string a = float_expr(depth - 1), b = float_expr(depth - 1);
    switch (pick(3)) {
      case 0: return "(" + a + " + " + b + ")";
      case 1: return "(" + a + " * " + b + ")";
      default: return "(" + int_expr(1) + " * " + b + ")";
    }
  }

  std::string bool_expr(int depth) {
    if (depth == 0 || pick(3) == 0) {
      if (!bs.empty() && pick(2) == 0) return bs[pick(static_cast<int>(bs.size()))];
      return pick(2) == 0 ? "True" : "False";
    }
    switch (pick(4)) {
      case 0: return "(" + int_expr(1) + " < " + int_expr(1) + ")";
      case 1: return "(" + float_expr(1) + " <= " + float_expr(1) + ")";
      case 2: return "(" + bool_expr(depth - 1) + " and " + bool_expr(depth - 1) + ")";
      default: return "not " + bool_expr(depth - 1);
    }
  }

  std::string gate1(const std::string& q) {
    switch (pick(6)) {
      case 0: return "h(" + q + ")";
      case 1: return "x(" + q + ")";
      case 2: return "z(" + q + ")";
      case 3: return "t(" + q + ")";
      case 4: return "tdg(" + q + ")";
      default: return "rz(" + q + ", " + float_expr(1) + ")";
    }
  }

  void line(int indent, const std::string& text) {
    for (int i = 0; i < indent; ++i) out << "  ";
    out << text << "\n";
    ++stmts;
  }

  // One random statement at top level; returns statements consumed.
  void step() {
    int kind = pick(12);
    if (kind <= 1 && allocs < 5) {
      std::string q = fresh("q");
      line(1, q + " = Qubit()");
      qs.push_back(q);
      ++allocs;
      return;
    }
    if (kind <= 4 && !qs.empty()) {
      std::string& q = qs[pick(static_cast<int>(qs.size()))];
      line(1, q + " = " + gate1(q));
      return;
    }
    if (kind == 5 && qs.size() >= 2) {
      int a = pick(static_cast<int>(qs.size()));
      int b = pick(static_cast<int>(qs.size() - 1));
      if (b >= a) ++b;
      const char* g = pick(2) == 0 ? "cx" : "zz";
      line(1, qs[a] + ", " + qs[b] + " = " + g + "(" + qs[a] + ", " + qs[b] + ")");
      return;
    }
    if (kind == 6 && !qs.empty()) {
      int i = pick(static_cast<int>(qs.size()));
      std::string b = fresh("b");
      line(1, b + " = measure(" + qs[i] + ")");
      bs.push_back(b);
      qs.erase(qs.begin() + i);
      return;
    }
    if (kind == 7) {
      std::string v = fresh("i");
      line(1, v + " = " + int_expr(2));
      is.push_back(v);
      return;
    }
    if (kind == 8) {
      std::string v = fresh("f");
      line(1, v + " = " + float_expr(2));
      fs.push_back(v);
      return;
    }
    if (kind == 9) {
      std::string v = fresh("b");
      line(1, v + " = " + bool_expr(2));
      bs.push_back(v);
      return;
    }
    if (kind == 10 && !qs.empty()) {
      // conditionally rebound qubit: consumed and reassigned on one path only
      std::string& q = qs[pick(static_cast<int>(qs.size()))];
      line(1, "if " + bool_expr(1) + ":");
      line(2, q + " = " + gate1(q));
      return;
    }
    if (kind == 11 && !qs.empty()) {
      std::string& q = qs[pick(static_cast<int>(qs.size()))];
      line(1, "for _ in range(" + std::to_string(1 + pick(3)) + "):");
      line(2, q + " = " + gate1(q));
      return;
    }
    std::string v = fresh("i");
    line(1, v + " = " + int_expr(1));
    is.push_back(v);
  }

  std::string run() {
    out << "def main() -> int:\n";
    // leave room for the epilogue: one measure per live qubit plus acc/return
    while (stmts < 22) step();
    line(1, "acc = 0");
    while (!qs.empty()) {
      line(1, "acc = (acc * 2) + (1 if measure(" + qs.back() + ") else 0)");
      qs.pop_back();
    }
    std::string mix = is.empty() ? std::string("0") : is[pick(static_cast<int>(is.size()))];
    line(1, "return (acc * 1000) + (" + mix + " % 97)");
    return out.str();
  }
};

}  // namespace

std::string generate(std::uint64_t seed) { return Gen(seed).run(); }

}  // namespace progen
