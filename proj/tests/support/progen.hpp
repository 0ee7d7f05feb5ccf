#pragma once

// Random well-typed program generator for linearity / determinism fuzzing.
// Every emitted program defines `def main() -> int`, allocates at most 5
// qubits, contains at most 30 statements, and consumes every qubit before
// returning, so a clean compile and a zero-leak run are both required.

#include <cstdint>
#include <string>

namespace progen {

std::string generate(std::uint64_t seed);

}  // namespace progen
