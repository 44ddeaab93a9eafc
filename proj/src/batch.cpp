#include "vql/batch.hpp"

#include <stdexcept>

namespace vql::batch {

namespace {

constexpr std::size_t kGroupBlock = 256;  // groups per reduction block
// Fork/join only pays off once a pass moves a few MB.
constexpr std::size_t kParallelWork = std::size_t{1} << 17;

struct GroupMasks {
  std::size_t bit_a, bit_b, mask_lo, mask_mid, mask_hi, groups;
};

GroupMasks masks_for(std::size_t dim, int qa, int qb) {
  const int q_lo = qa < qb ? qa : qb;
  const int q_hi = qa < qb ? qb : qa;
  GroupMasks m;
  m.bit_a = std::size_t{1} << qa;
  m.bit_b = std::size_t{1} << qb;
  m.mask_lo = (std::size_t{1} << q_lo) - 1;
  m.mask_mid = ((std::size_t{1} << q_hi) - 1) ^ ((std::size_t{1} << (q_lo + 1)) - 1);
  m.mask_hi = ~((std::size_t{2} << q_hi) - 1);
  m.groups = dim >> 2;
  return m;
}

inline std::size_t group_base(const GroupMasks& m, std::size_t u) {
  return (u & m.mask_lo) | ((u << 1) & m.mask_mid) | ((u << 2) & m.mask_hi);
}

// Out-of-line so the data-ref analysis sees clean restrict pointers; this is
// the hot loop of the whole library.
void apply4_lanes(double* __restrict__ r0, double* __restrict__ r1, double* __restrict__ r2,
                  double* __restrict__ r3, double* __restrict__ i0, double* __restrict__ i1,
                  double* __restrict__ i2, double* __restrict__ i3, const double gr[4][4],
                  const double gi[4][4], std::size_t stride) {
  for (std::size_t lane = 0; lane < stride; ++lane) {
    const double a0r = r0[lane], a1r = r1[lane], a2r = r2[lane], a3r = r3[lane];
    const double a0i = i0[lane], a1i = i1[lane], a2i = i2[lane], a3i = i3[lane];
    r0[lane] = gr[0][0] * a0r - gi[0][0] * a0i + gr[0][1] * a1r - gi[0][1] * a1i +
               gr[0][2] * a2r - gi[0][2] * a2i + gr[0][3] * a3r - gi[0][3] * a3i;
    i0[lane] = gr[0][0] * a0i + gi[0][0] * a0r + gr[0][1] * a1i + gi[0][1] * a1r +
               gr[0][2] * a2i + gi[0][2] * a2r + gr[0][3] * a3i + gi[0][3] * a3r;
    r1[lane] = gr[1][0] * a0r - gi[1][0] * a0i + gr[1][1] * a1r - gi[1][1] * a1i +
               gr[1][2] * a2r - gi[1][2] * a2i + gr[1][3] * a3r - gi[1][3] * a3i;
    i1[lane] = gr[1][0] * a0i + gi[1][0] * a0r + gr[1][1] * a1i + gi[1][1] * a1r +
               gr[1][2] * a2i + gi[1][2] * a2r + gr[1][3] * a3i + gi[1][3] * a3r;
    r2[lane] = gr[2][0] * a0r - gi[2][0] * a0i + gr[2][1] * a1r - gi[2][1] * a1i +
               gr[2][2] * a2r - gi[2][2] * a2i + gr[2][3] * a3r - gi[2][3] * a3i;
    i2[lane] = gr[2][0] * a0i + gi[2][0] * a0r + gr[2][1] * a1i + gi[2][1] * a1r +
               gr[2][2] * a2i + gi[2][2] * a2r + gr[2][3] * a3i + gi[2][3] * a3r;
    r3[lane] = gr[3][0] * a0r - gi[3][0] * a0i + gr[3][1] * a1r - gi[3][1] * a1i +
               gr[3][2] * a2r - gi[3][2] * a2i + gr[3][3] * a3r - gi[3][3] * a3i;
    i3[lane] = gr[3][0] * a0i + gi[3][0] * a0r + gr[3][1] * a1i + gi[3][1] * a1r +
               gr[3][2] * a2i + gi[3][2] * a2r + gr[3][3] * a3i + gi[3][3] * a3r;
  }
}

// Dot products of conj(lambda_r) . psi_c accumulated in four fixed lane
// phases so the reduction vectorizes without reassociation.
void cross16_lanes(const double* __restrict__ xr, const double* __restrict__ xi,
                   const double* __restrict__ yr, const double* __restrict__ yi,
                   std::size_t stride, double& out_re, double& out_im) {
  double sr[4] = {0, 0, 0, 0}, si[4] = {0, 0, 0, 0};
  for (std::size_t lane = 0; lane < stride; lane += 4) {
    for (std::size_t k = 0; k < 4; ++k) {
      sr[k] += xr[lane + k] * yr[lane + k] + xi[lane + k] * yi[lane + k];
      si[k] += xr[lane + k] * yi[lane + k] - xi[lane + k] * yr[lane + k];
    }
  }
  out_re += (sr[0] + sr[1]) + (sr[2] + sr[3]);
  out_im += (si[0] + si[1]) + (si[2] + si[3]);
}

}  // namespace

BatchedStates::BatchedStates(int n_qubits, int lanes) : n_qubits_(n_qubits), lanes_(lanes) {
  if (n_qubits < 2 || n_qubits > kMaxQubits) throw std::domain_error("BatchedStates: bad qubit count");
  if (lanes < 1) throw std::domain_error("BatchedStates: need at least one lane");
  stride_ = (lanes + 3) & ~3;
  dim_ = std::size_t{1} << n_qubits;
  re_.assign(dim_ * static_cast<std::size_t>(stride_), 0.0);
  im_.assign(dim_ * static_cast<std::size_t>(stride_), 0.0);
}

BatchedStates BatchedStates::from_basis_indices(int n_qubits,
                                                const std::vector<std::uint64_t>& indices) {
  BatchedStates s(n_qubits, static_cast<int>(indices.size()));
  for (std::size_t lane = 0; lane < indices.size(); ++lane) {
    if (indices[lane] >= s.dim_) throw std::domain_error("from_basis_indices: index out of range");
    s.re_[indices[lane] * static_cast<std::size_t>(s.stride_) + lane] = 1.0;
  }
  return s;
}

StateVector BatchedStates::lane_state(int lane) const {
  std::vector<cplx> amps(dim_);
  for (std::size_t i = 0; i < dim_; ++i) amps[i] = amplitude(i, lane);
  return StateVector(n_qubits_, std::move(amps));
}

void apply_gate(BatchedStates& s, const Matrix4c& g, int qa, int qb) {
  if (qa == qb || qa < 0 || qb < 0 || qa >= s.n_qubits() || qb >= s.n_qubits())
    throw std::domain_error("batch::apply_gate: bad qubit pair");
  const GroupMasks m = masks_for(s.dim(), qa, qb);
  const std::size_t stride = static_cast<std::size_t>(s.stride());
  double gr[4][4], gi[4][4];
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      gr[r][c] = g(r, c).real();
      gi[r][c] = g(r, c).imag();
    }
  double* re = s.re();
  double* im = s.im();

#pragma omp parallel for schedule(static) if (m.groups * stride >= kParallelWork)
  for (std::ptrdiff_t giter = 0; giter < static_cast<std::ptrdiff_t>(m.groups); ++giter) {
    const std::size_t base = group_base(m, static_cast<std::size_t>(giter));
    const std::size_t ib = base | m.bit_b;
    const std::size_t ia = base | m.bit_a;
    const std::size_t iab = base | m.bit_a | m.bit_b;
    apply4_lanes(re + base * stride, re + ib * stride, re + ia * stride, re + iab * stride,
                 im + base * stride, im + ib * stride, im + ia * stride, im + iab * stride, gr, gi,
                 stride);
  }
}

void forward(const CircuitLayout& layout, std::span<const double> params, BatchedStates& s) {
  if (s.n_qubits() != layout.n_qubits()) throw std::domain_error("batch::forward: size mismatch");
  const auto gates = detail::slot_unitaries(layout, params);
  for (const auto& b : layout.bricks()) {
    const Matrix4c& u = b.trainable() ? gates[static_cast<std::size_t>(b.param_slot)].matrix()
                                      : b.fixed_gate->matrix();
    apply_gate(s, u, b.qa, b.qb);
  }
}

std::vector<double> lane_marginals(const BatchedStates& s, int qubit) {
  const std::size_t stride = static_cast<std::size_t>(s.stride());
  const std::size_t bit = std::size_t{1} << qubit;
  const std::size_t dim = s.dim();
  const std::size_t nblocks = (dim + detail::kReduceBlock - 1) / detail::kReduceBlock;
  std::vector<std::vector<double>> parts(nblocks, std::vector<double>(stride, 0.0));
  const double* re = s.re();
  const double* im = s.im();
#pragma omp parallel for schedule(static) if (nblocks > 1 && dim * stride >= kParallelWork)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    auto& acc = parts[static_cast<std::size_t>(b)];
    const std::size_t lo = static_cast<std::size_t>(b) * detail::kReduceBlock;
    const std::size_t hi = std::min(lo + detail::kReduceBlock, dim);
    for (std::size_t i = lo; i < hi; ++i) {
      if (!(i & bit)) continue;
      const double* __restrict__ pr = re + i * stride;
      const double* __restrict__ pi = im + i * stride;
      for (std::size_t lane = 0; lane < stride; ++lane)
        acc[lane] += pr[lane] * pr[lane] + pi[lane] * pi[lane];
    }
  }
  std::size_t count = nblocks;
  while (count > 1) {
    const std::size_t half = (count + 1) / 2;
    for (std::size_t i = 0; i + half < count; ++i)
      for (std::size_t lane = 0; lane < stride; ++lane) parts[i][lane] += parts[i + half][lane];
    count = half;
  }
  return {parts[0].begin(), parts[0].begin() + s.lanes()};
}

std::vector<cplx> lane_overlaps(const BatchedStates& a, const BatchedStates& b) {
  if (a.dim() != b.dim() || a.stride() != b.stride())
    throw std::domain_error("lane_overlaps: shape mismatch");
  const std::size_t stride = static_cast<std::size_t>(a.stride());
  const std::size_t dim = a.dim();
  const std::size_t nblocks = (dim + detail::kReduceBlock - 1) / detail::kReduceBlock;
  std::vector<std::vector<double>> parts_re(nblocks, std::vector<double>(stride, 0.0));
  std::vector<std::vector<double>> parts_im(nblocks, std::vector<double>(stride, 0.0));
#pragma omp parallel for schedule(static) if (nblocks > 1 && dim * stride >= kParallelWork)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblocks); ++blk) {
    auto& acc_re = parts_re[static_cast<std::size_t>(blk)];
    auto& acc_im = parts_im[static_cast<std::size_t>(blk)];
    const std::size_t lo = static_cast<std::size_t>(blk) * detail::kReduceBlock;
    const std::size_t hi = std::min(lo + detail::kReduceBlock, dim);
    for (std::size_t i = lo; i < hi; ++i) {
      const double* __restrict__ ar = a.re() + i * stride;
      const double* __restrict__ ai = a.im() + i * stride;
      const double* __restrict__ br = b.re() + i * stride;
      const double* __restrict__ bi = b.im() + i * stride;
      for (std::size_t lane = 0; lane < stride; ++lane) {
        // conj(a) * b
        acc_re[lane] += ar[lane] * br[lane] + ai[lane] * bi[lane];
        acc_im[lane] += ar[lane] * bi[lane] - ai[lane] * br[lane];
      }
    }
  }
  std::size_t count = nblocks;
  while (count > 1) {
    const std::size_t half = (count + 1) / 2;
    for (std::size_t i = 0; i + half < count; ++i)
      for (std::size_t lane = 0; lane < stride; ++lane) {
        parts_re[i][lane] += parts_re[i + half][lane];
        parts_im[i][lane] += parts_im[i + half][lane];
      }
    count = half;
  }
  std::vector<cplx> out(static_cast<std::size_t>(a.lanes()));
  for (int lane = 0; lane < a.lanes(); ++lane)
    out[static_cast<std::size_t>(lane)] = {parts_re[0][static_cast<std::size_t>(lane)],
                                           parts_im[0][static_cast<std::size_t>(lane)]};
  return out;
}

BatchedStates scaled_copy(const BatchedStates& source, const std::vector<cplx>& coeffs,
                          int project_qubit) {
  if (static_cast<int>(coeffs.size()) != source.lanes())
    throw std::domain_error("scaled_copy: coefficient count mismatch");
  BatchedStates out(source.n_qubits(), source.lanes());
  const std::size_t stride = static_cast<std::size_t>(source.stride());
  const std::size_t bit = project_qubit >= 0 ? (std::size_t{1} << project_qubit) : 0;
  std::vector<double> cr(stride, 0.0), ci(stride, 0.0);
  for (std::size_t lane = 0; lane < coeffs.size(); ++lane) {
    cr[lane] = coeffs[lane].real();
    ci[lane] = coeffs[lane].imag();
  }
  const std::size_t dim = source.dim();
#pragma omp parallel for schedule(static) if (dim * stride >= kParallelWork)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(dim); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double* __restrict__ orr = out.re() + i * stride;
    double* __restrict__ oi = out.im() + i * stride;
    if (project_qubit >= 0 && !(i & bit)) continue;  // rows already zero
    const double* __restrict__ sr = source.re() + i * stride;
    const double* __restrict__ si = source.im() + i * stride;
    for (std::size_t lane = 0; lane < stride; ++lane) {
      orr[lane] = cr[lane] * sr[lane] - ci[lane] * si[lane];
      oi[lane] = cr[lane] * si[lane] + ci[lane] * sr[lane];
    }
  }
  return out;
}

void adjoint_accumulate(const CircuitLayout& layout, std::span<const double> params,
                        BatchedStates psi, BatchedStates lambda, double sign,
                        std::vector<double>& grad) {
  std::vector<FrechetPair> pairs;
  pairs.reserve(layout.slots().size());
  for (std::size_t s = 0; s < layout.slots().size(); ++s) {
    const SlotKind kind = layout.slots()[s];
    const int off = layout.slot_offset(static_cast<int>(s));
    pairs.push_back(build_with_partials(kind, params.subspan(static_cast<std::size_t>(off),
                                                             static_cast<std::size_t>(param_count(kind)))));
  }
  const std::size_t stride = static_cast<std::size_t>(psi.stride());
  const auto& bricks = layout.bricks();

  for (std::size_t bi = bricks.size(); bi-- > 0;) {
    const Brick& b = bricks[bi];
    const Matrix4c u = b.trainable() ? pairs[static_cast<std::size_t>(b.param_slot)].unitary
                                     : b.fixed_gate->matrix();
    const Matrix4c u_dag = u.adjoint();
    apply_gate(psi, u_dag, b.qa, b.qb);
    if (b.trainable()) {
      // R = sum over lanes and rest of conj(lambda) psi_prev on the brick pair.
      const GroupMasks m = masks_for(psi.dim(), b.qa, b.qb);
      const std::size_t nblocks = (m.groups + kGroupBlock - 1) / kGroupBlock;
      struct RAcc {
        double re[4][4]{};
        double im[4][4]{};
      };
      std::vector<RAcc> parts(nblocks);
#pragma omp parallel for schedule(static) if (nblocks > 1 && psi.dim() * stride >= kParallelWork)
      for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblocks); ++blk) {
        RAcc acc;
        const std::size_t lo = static_cast<std::size_t>(blk) * kGroupBlock;
        const std::size_t hi = std::min(lo + kGroupBlock, m.groups);
        for (std::size_t u_i = lo; u_i < hi; ++u_i) {
          const std::size_t base = group_base(m, u_i);
          const std::size_t idx[4] = {base, base | m.bit_b, base | m.bit_a, base | m.bit_a | m.bit_b};
          const double* lr[4];
          const double* li[4];
          const double* pr[4];
          const double* pi[4];
          for (int k = 0; k < 4; ++k) {
            lr[k] = lambda.re() + idx[k] * stride;
            li[k] = lambda.im() + idx[k] * stride;
            pr[k] = psi.re() + idx[k] * stride;
            pi[k] = psi.im() + idx[k] * stride;
          }
          for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
              cross16_lanes(lr[r], li[r], pr[c], pi[c], stride, acc.re[r][c], acc.im[r][c]);
        }
        parts[static_cast<std::size_t>(blk)] = acc;
      }
      std::size_t count = nblocks;
      while (count > 1) {
        const std::size_t half = (count + 1) / 2;
        for (std::size_t i = 0; i + half < count; ++i)
          for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
              parts[i].re[r][c] += parts[i + half].re[r][c];
              parts[i].im[r][c] += parts[i + half].im[r][c];
            }
        count = half;
      }
      Matrix4c r_mat;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) r_mat(r, c) = cplx(parts[0].re[r][c], parts[0].im[r][c]);

      const auto& partials = pairs[static_cast<std::size_t>(b.param_slot)].partials;
      const int off = layout.slot_offset(b.param_slot);
      for (std::size_t k = 0; k < partials.size(); ++k) {
        const cplx inner = (partials[k].array() * r_mat.array()).sum();
        grad[static_cast<std::size_t>(off) + k] += sign * 2.0 * inner.real();
      }
    }
    apply_gate(lambda, u_dag, b.qa, b.qb);
  }
}

}  // namespace vql::batch
