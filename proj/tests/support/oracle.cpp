#include "support/oracle.hpp"

#include <cmath>
#include <cstdlib>

namespace oracle {

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}

cmat mat_h() { return {{kInvSqrt2, kInvSqrt2}, {kInvSqrt2, -kInvSqrt2}}; }
cmat mat_x() { return {{0.0, 1.0}, {1.0, 0.0}}; }
cmat mat_z() { return {{1.0, 0.0}, {0.0, -1.0}}; }
cmat mat_t() { return {{1.0, 0.0}, {0.0, std::polar(1.0, M_PI / 4)}}; }
cmat mat_tdg() { return {{1.0, 0.0}, {0.0, std::polar(1.0, -M_PI / 4)}}; }
cmat mat_rz(double theta) {
  return {{std::polar(1.0, -theta / 2), 0.0}, {0.0, std::polar(1.0, theta / 2)}};
}

int MiniSim::alloc() {
  cvec next(amps.size() * 2, cplx{0.0, 0.0});
  // new qubit is the next-higher bit, starting in |0>
  for (std::size_t i = 0; i < amps.size(); ++i) next[i] = amps[i];
  amps = std::move(next);
  return n++;
}

void MiniSim::apply1(const cmat& u, int q) {
  std::uint64_t bit = 1ull << q;
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    if (i & bit) continue;
    cplx a0 = amps[i], a1 = amps[i | bit];
    amps[i] = u[0][0] * a0 + u[0][1] * a1;
    amps[i | bit] = u[1][0] * a0 + u[1][1] * a1;
  }
}

void MiniSim::cx(int ctrl, int tgt) {
  std::uint64_t cb = 1ull << ctrl, tb = 1ull << tgt;
  for (std::uint64_t i = 0; i < amps.size(); ++i)
    if ((i & cb) && !(i & tb)) std::swap(amps[i], amps[i | tb]);
}

void MiniSim::zz(int a, int b) {
  std::uint64_t ab = 1ull << a, bb = 1ull << b;
  for (std::uint64_t i = 0; i < amps.size(); ++i)
    if (((i & ab) != 0) != ((i & bb) != 0)) amps[i] = -amps[i];
}

double MiniSim::prob1(int q) const {
  std::uint64_t bit = 1ull << q;
  double p = 0.0;
  for (std::uint64_t i = 0; i < amps.size(); ++i)
    if (i & bit) p += std::norm(amps[i]);
  return p;
}

double MiniSim::project(int q, bool outcome) {
  std::uint64_t bit = 1ull << q;
  double p1 = prob1(q);
  double p = outcome ? p1 : 1.0 - p1;
  double scale = p > 0.0 ? 1.0 / std::sqrt(p) : 0.0;
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    if (((i & bit) != 0) == outcome)
      amps[i] *= scale;
    else
      amps[i] = 0.0;
  }
  return p;
}

double MiniSim::norm() const {
  double s = 0.0;
  for (const auto& a : amps) s += std::norm(a);
  return std::sqrt(s);
}

double fidelity(const cvec& a, const cvec& b) {
  cplx ip{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) ip += std::conj(a[i]) * b[i];
  return std::norm(ip);
}

bool equal_up_to_phase(const cvec& a, const cvec& b, double eps) {
  if (a.size() != b.size()) return false;
  // phase from the largest-magnitude component of b
  std::size_t k = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (std::abs(b[i]) > std::abs(b[k])) k = i;
  if (std::abs(b[k]) < eps) {
    for (const auto& x : a)
      if (std::abs(x) > eps) return false;
    return true;
  }
  cplx phase = a[k] / b[k];
  if (std::abs(std::abs(phase) - 1.0) > eps) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - phase * b[i]) > eps) return false;
  return true;
}

cvec reverse_bits(const cvec& v, int n) {
  cvec out(v.size());
  for (std::uint64_t i = 0; i < v.size(); ++i) {
    std::uint64_t r = 0;
    for (int b = 0; b < n; ++b)
      if (i & (1ull << b)) r |= 1ull << (n - 1 - b);
    out[r] = v[i];
  }
  return out;
}

}  // namespace oracle
