#include "vql/pauli.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace vql {

namespace {

// Phase power of i contributed by multiplying two single-qubit letters,
// indexed [a][b] with the 2-bit code (x | z<<1): I=0, X=1, Z=2, Y=3.
// E.g. X*Y = iZ (+1), Y*X = -iZ (+3).
constexpr int kMulPhase[4][4] = {
    {0, 0, 0, 0},  // I*
    {0, 0, 3, 1},  // X*: X*Z=-iY, X*Y=iZ
    {0, 1, 0, 3},  // Z*: Z*X=iY, Z*Y=-iX
    {0, 3, 1, 0},  // Y*: Y*X=-iZ, Y*Z=iX
};

int code_of(std::uint64_t x, std::uint64_t z, int q) {
  return static_cast<int>((x >> q) & 1u) | (static_cast<int>((z >> q) & 1u) << 1);
}

}  // namespace

PauliString::PauliString(int n_qubits, std::uint64_t x_mask, std::uint64_t z_mask, int phase_power)
    : n_qubits_(n_qubits), x_mask_(x_mask), z_mask_(z_mask), phase_power_(((phase_power % 4) + 4) % 4) {
  if (n_qubits < 1 || n_qubits > 64) throw std::domain_error("PauliString: n_qubits out of range");
  if (n_qubits < 64) {
    const std::uint64_t valid = (std::uint64_t{1} << n_qubits) - 1;
    if ((x_mask & ~valid) || (z_mask & ~valid))
      throw std::domain_error("PauliString: mask bit beyond n_qubits");
  }
}

PauliString PauliString::single(int n_qubits, int qubit, PauliLetter letter) {
  PauliString p = identity(n_qubits);
  p.set_letter(qubit, letter);
  return p;
}

PauliString PauliString::from_letters(const std::string& letters, int phase_power) {
  PauliString p(static_cast<int>(letters.size()), 0, 0, phase_power);
  for (int q = 0; q < static_cast<int>(letters.size()); ++q) {
    switch (letters[static_cast<std::size_t>(q)]) {
      case 'I': break;
      case 'X': p.set_letter(q, PauliLetter::X); break;
      case 'Y': p.set_letter(q, PauliLetter::Y); break;
      case 'Z': p.set_letter(q, PauliLetter::Z); break;
      default: throw std::domain_error("PauliString: bad letter");
    }
  }
  return p;
}

cplx PauliString::phase() const {
  static const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[phase_power_];
}

PauliLetter PauliString::letter(int qubit) const {
  if (qubit < 0 || qubit >= n_qubits_) throw std::domain_error("PauliString: qubit out of range");
  const bool x = (x_mask_ >> qubit) & 1u;
  const bool z = (z_mask_ >> qubit) & 1u;
  if (x && z) return PauliLetter::Y;
  if (x) return PauliLetter::X;
  if (z) return PauliLetter::Z;
  return PauliLetter::I;
}

void PauliString::set_letter(int qubit, PauliLetter letter) {
  if (qubit < 0 || qubit >= n_qubits_) throw std::domain_error("PauliString: qubit out of range");
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  x_mask_ &= ~bit;
  z_mask_ &= ~bit;
  if (letter == PauliLetter::X || letter == PauliLetter::Y) x_mask_ |= bit;
  if (letter == PauliLetter::Z || letter == PauliLetter::Y) z_mask_ |= bit;
}

int PauliString::weight() const { return std::popcount(x_mask_ | z_mask_); }

std::string PauliString::str() const {
  static const char* prefix[4] = {"+", "+i", "-", "-i"};
  std::string out = prefix[phase_power_];
  for (int q = 0; q < n_qubits_; ++q) {
    out += "IXYZ"[static_cast<int>(letter(q))];
  }
  return out;
}

PauliString pauli_mul(const PauliString& a, const PauliString& b) {
  if (a.n_qubits() != b.n_qubits()) throw std::domain_error("pauli_mul: size mismatch");
  int phase = a.phase_power() + b.phase_power();
  std::uint64_t overlap = (a.x_mask() | a.z_mask()) & (b.x_mask() | b.z_mask());
  while (overlap) {
    const int q = std::countr_zero(overlap);
    overlap &= overlap - 1;
    phase += kMulPhase[code_of(a.x_mask(), a.z_mask(), q)][code_of(b.x_mask(), b.z_mask(), q)];
  }
  return PauliString(a.n_qubits(), a.x_mask() ^ b.x_mask(), a.z_mask() ^ b.z_mask(), phase);
}

cplx pauli_trace_product(const PauliString& a, const PauliString& b) {
  if (a.n_qubits() != b.n_qubits()) throw std::domain_error("pauli_trace_product: size mismatch");
  const PauliString ab = pauli_mul(a, b);
  if (!ab.is_identity_word()) return {0.0, 0.0};
  const double dim = std::pow(2.0, a.n_qubits());
  return dim * ab.phase();
}

}  // namespace vql
