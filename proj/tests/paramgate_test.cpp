#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "test_support.hpp"
#include "vql/paramgate.hpp"

using namespace vql;

namespace {

Matrix4c skew32(const GateParams32& p) {
  Matrix4c m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const int k = 2 * (4 * r + c);
      m(r, c) = cplx(p.values[static_cast<std::size_t>(k)], p.values[static_cast<std::size_t>(k) + 1]);
    }
  return m - m.adjoint().eval();
}

}  // namespace

TEST_CASE("zero parameters give the identity") {
  CHECK((build_unitary32(GateParams32{}).matrix() - Matrix4c::Identity()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((build_unitary16(GateParams16{}).matrix() - Matrix4c::Identity()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("only the skew part of M enters") {
  Rng rng(101);
  GateParams32 p = random_params32(rng);
  GateParams32 shifted = p;
  // Add a Hermitian matrix S to M: entries S(r,c) = conj(S(c,r)).
  for (int r = 0; r < 4; ++r)
    for (int c = r; c < 4; ++c) {
      const double re = rng.normal();
      const double im = c == r ? 0.0 : rng.normal();
      const int k_rc = 2 * (4 * r + c);
      const int k_cr = 2 * (4 * c + r);
      shifted.values[static_cast<std::size_t>(k_rc)] += re;
      shifted.values[static_cast<std::size_t>(k_rc) + 1] += im;
      if (c != r) {
        shifted.values[static_cast<std::size_t>(k_cr)] += re;
        shifted.values[static_cast<std::size_t>(k_cr) + 1] -= im;
      }
    }
  const auto u1 = build_unitary32(p).matrix();
  const auto u2 = build_unitary32(shifted).matrix();
  CHECK((u1 - u2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("identity generator of the 16-basis is a global phase") {
  GateParams16 p;
  p.values[0] = 0.7;  // coefficient on i*(I⊗I)
  const auto u = build_unitary16(p).matrix();
  const cplx expected = std::exp(cplx(0, 0.7));
  CHECK((u - expected * Matrix4c::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("random parameters produce unitaries matching a Pade exponential oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const GateParams32 p = random_params32(rng);
    const Matrix4c u = build_unitary32(p).matrix();
    CHECK((u.adjoint() * u - Matrix4c::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    const Matrix4c oracle = skew32(p).exp();
    CHECK((u - oracle).cwiseAbs().maxCoeff() < 1e-10);

    GateParams16 q = random_params16(rng);
    const Matrix4c u16 = build_unitary16(q).matrix();
    CHECK((u16.adjoint() * u16 - Matrix4c::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("dexp at zero is the generator itself") {
  const FrechetPair fp = build_with_partials(GateParams32{});
  // Direction of Re M(0,1) is generator E01 - E10 at index 2*(0*4+1) = 2.
  Matrix4c expected = Matrix4c::Zero();
  expected(0, 1) = 1.0;
  expected(1, 0) = -1.0;
  CHECK((fp.partials[2] - expected).cwiseAbs().maxCoeff() < 1e-12);

  const FrechetPair fp16 = build_with_partials(GateParams16{});
  const auto& basis = two_qubit_pauli_basis();
  for (int k = 0; k < 16; ++k)
    CHECK((fp16.partials[static_cast<std::size_t>(k)] - cplx(0, 1) * basis[static_cast<std::size_t>(k)])
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("partials match finite differences") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const GateParams32 p = random_params32(rng);
    const FrechetPair fp = build_with_partials(p);
    const double h = 1e-5;
    for (int k = 0; k < 32; ++k) {
      GateParams32 up = p, down = p;
      up.values[static_cast<std::size_t>(k)] += h;
      down.values[static_cast<std::size_t>(k)] -= h;
      const Matrix4c fd = (build_unitary32(up).matrix() - build_unitary32(down).matrix()) / (2 * h);
      const double err = (fp.partials[static_cast<std::size_t>(k)] - fd).cwiseAbs().maxCoeff();
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      CHECK(err / scale < 1e-6);
    }
  }
}

TEST_CASE("U† dU is skew-Hermitian for every partial") {
  Rng rng(23);
  const GateParams16 p = random_params16(rng);
  const FrechetPair fp = build_with_partials(p);
  for (const auto& d : fp.partials) {
    const Matrix4c s = fp.unitary.adjoint() * d;
    CHECK((s + s.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("partials are continuous through eigenvalue confluence") {
  // H built from a parameter point engineered so two eigenvalues collide.
  GateParams16 p;
  p.values[3] = 0.5;   // i Z on second factor
  p.values[12] = 0.5;  // i Z on first factor
  const FrechetPair degenerate = build_with_partials(p);
  GateParams16 q = p;
  q.values[3] += 1e-9;
  const FrechetPair nearby = build_with_partials(q);
  for (std::size_t k = 0; k < 16; ++k)
    CHECK((degenerate.partials[k] - nearby.partials[k]).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("non-finite parameters are rejected") {
  GateParams32 p;
  p.values[5] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(build_unitary32(p), std::domain_error);
}
