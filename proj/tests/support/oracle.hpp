#pragma once

// Independent dense-matrix statevector simulator used as a test oracle.
// Deliberately shares no code with src/sim.cpp: gates are applied via
// explicit 2^n x 2^n-free bit arithmetic with the *opposite* qubit-to-bit
// convention (first allocated qubit = least significant bit), so agreement
// with the production simulator is meaningful.

#include <complex>
#include <cstdint>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using cmat = std::vector<std::vector<cplx>>;  // row-major 2x2

cmat mat_h();
cmat mat_x();
cmat mat_z();
cmat mat_t();
cmat mat_tdg();
cmat mat_rz(double theta);

struct MiniSim {
  cvec amps{cplx{1.0, 0.0}};
  int n = 0;  // live qubits; qubit k occupies bit k (LSB-first)

  int alloc();                                  // returns qubit index
  void apply1(const cmat& u, int q);
  void cx(int ctrl, int tgt);
  void zz(int a, int b);
  // Projects qubit q onto `outcome` and renormalizes; returns the outcome
  // probability before projection. The qubit stays in the register (the
  // production sim contracts it out; callers compare reduced states).
  double project(int q, bool outcome);
  double prob1(int q) const;
  double norm() const;
};

// |<a|b>|^2 for normalized vectors of equal length.
double fidelity(const cvec& a, const cvec& b);

// True iff a == c*b for some unit-modulus c, within eps per amplitude.
bool equal_up_to_phase(const cvec& a, const cvec& b, double eps);

// Reverses the bit order of the index (MSB-first <-> LSB-first) so oracle
// states can be compared against production final_statevector output.
cvec reverse_bits(const cvec& v, int n);

}  // namespace oracle
