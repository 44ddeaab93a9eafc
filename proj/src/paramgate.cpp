#include "vql/paramgate.hpp"

#include <cmath>
#include <stdexcept>

namespace vql {

namespace {

constexpr double kConfluentTol = 1e-12;

Eigen::Matrix2cd pauli1(int k) {
  Eigen::Matrix2cd m;
  switch (k) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

Matrix4c skew_from32(std::span<const double> v) {
  Matrix4c m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const int k = 2 * (4 * r + c);
      m(r, c) = cplx(v[k], v[k + 1]);
    }
  return m - m.adjoint().eval();
}

Matrix4c skew_from16(std::span<const double> v) {
  const auto& basis = two_qubit_pauli_basis();
  Matrix4c h = Matrix4c::Zero();
  for (int k = 0; k < 16; ++k) h += cplx(0, v[k]) * basis[k];
  return h;
}

void check_finite(std::span<const double> v) {
  for (const double x : v)
    if (!std::isfinite(x)) throw std::domain_error("gate params must be finite");
}

// exp(H) for skew-Hermitian H via the eigendecomposition of the Hermitian
// matrix A = -iH: H = iA = V (iΛ) V†, so exp(H) = V diag(e^{iλ}) V†.
struct EigH {
  Eigen::Matrix4cd vecs;
  Eigen::Vector4d vals;
};

EigH eig_of_skew(const Matrix4c& h) {
  const Matrix4c a = cplx(0, -1) * h;
  Eigen::SelfAdjointEigenSolver<Matrix4c> solver(a);
  if (solver.info() != Eigen::Success) throw numeric_error("build_unitary: eigensolve failed");
  return {solver.eigenvectors(), solver.eigenvalues()};
}

Matrix4c exp_from_eig(const EigH& e) {
  Eigen::Vector4cd phases;
  for (int i = 0; i < 4; ++i) phases(i) = std::exp(cplx(0, e.vals(i)));
  return e.vecs * phases.asDiagonal() * e.vecs.adjoint();
}

// Divided-difference kernel of f(λ) = e^{iλ} in the paper-facing form
// φ(λa, λb) = (e^{iλa} - e^{iλb})/(i(λa - λb)), confluent limit e^{iλa}.
cplx phi(double la, double lb) {
  if (std::abs(la - lb) < kConfluentTol) return std::exp(cplx(0, la));
  return (std::exp(cplx(0, la)) - std::exp(cplx(0, lb))) / (cplx(0, 1) * (la - lb));
}

// Daleckii-Krein: dU in generator direction D (skew-Hermitian) is
// V (Φ ∘ (V† D V)) V† with Φ_ab = φ(λa, λb).
Matrix4c frechet_direction(const EigH& e, const Matrix4c& d) {
  Matrix4c inner = e.vecs.adjoint() * d * e.vecs;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) inner(a, b) *= phi(e.vals(a), e.vals(b));
  return e.vecs * inner * e.vecs.adjoint();
}

std::vector<Matrix4c> generators32() {
  std::vector<Matrix4c> gens;
  gens.reserve(32);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      Matrix4c re = Matrix4c::Zero();
      re(r, c) += 1.0;
      re(c, r) -= 1.0;
      gens.push_back(re);  // d/d Re M(r,c) of (M - M†)
      Matrix4c im = Matrix4c::Zero();
      im(r, c) += cplx(0, 1);
      im(c, r) += cplx(0, 1);
      gens.push_back(im);  // d/d Im M(r,c)
    }
  return gens;
}

FrechetPair with_partials(const Matrix4c& h, const std::vector<Matrix4c>& gens) {
  const EigH e = eig_of_skew(h);
  FrechetPair out{exp_from_eig(e), {}};
  out.partials.reserve(gens.size());
  for (const auto& d : gens) out.partials.push_back(frechet_direction(e, d));
  return out;
}

}  // namespace

const std::array<Matrix4c, 16>& two_qubit_pauli_basis() {
  static const std::array<Matrix4c, 16> basis = [] {
    std::array<Matrix4c, 16> b;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const Eigen::Matrix2cd a = pauli1(i);
        const Eigen::Matrix2cd c = pauli1(j);
        Matrix4c m;
        for (int r = 0; r < 2; ++r)
          for (int s = 0; s < 2; ++s) m.block<2, 2>(2 * r, 2 * s) = a(r, s) * c;
        b[static_cast<std::size_t>(4 * i + j)] = m;
      }
    return b;
  }();
  return basis;
}

Gate2Q build_unitary32(const GateParams32& p) {
  check_finite(p.values);
  return Gate2Q(exp_from_eig(eig_of_skew(skew_from32(p.values))));
}

Gate2Q build_unitary16(const GateParams16& p) {
  check_finite(p.values);
  return Gate2Q(exp_from_eig(eig_of_skew(skew_from16(p.values))));
}

Gate2Q build_unitary(SlotKind kind, std::span<const double> values) {
  check_finite(values);
  const Matrix4c h = kind == SlotKind::params32 ? skew_from32(values) : skew_from16(values);
  return Gate2Q(exp_from_eig(eig_of_skew(h)));
}

FrechetPair build_with_partials(const GateParams32& p) {
  check_finite(p.values);
  return with_partials(skew_from32(p.values), generators32());
}

FrechetPair build_with_partials(const GateParams16& p) {
  check_finite(p.values);
  const auto& basis = two_qubit_pauli_basis();
  std::vector<Matrix4c> gens;
  gens.reserve(16);
  for (int k = 0; k < 16; ++k) gens.push_back(cplx(0, 1) * basis[static_cast<std::size_t>(k)]);
  return with_partials(skew_from16(p.values), gens);
}

FrechetPair build_with_partials(SlotKind kind, std::span<const double> values) {
  if (kind == SlotKind::params32) {
    GateParams32 p;
    std::copy(values.begin(), values.end(), p.values.begin());
    return build_with_partials(p);
  }
  GateParams16 p;
  std::copy(values.begin(), values.end(), p.values.begin());
  return build_with_partials(p);
}

GateParams32 random_params32(Rng& rng) {
  GateParams32 p;
  for (auto& v : p.values) v = rng.normal();
  return p;
}

GateParams16 random_params16(Rng& rng) {
  GateParams16 p;
  for (auto& v : p.values) v = rng.normal();
  return p;
}

}  // namespace vql
