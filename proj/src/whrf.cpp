#include "vql/whrf.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <stdexcept>

namespace vql {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
  while (a >= kPi) a -= 2 * kPi;
  while (a < -kPi) a += 2 * kPi;
  return a;
}

Eigen::VectorXd grad_at(const WishartField& f, const std::vector<double>& angles,
                        const Eigen::VectorXcd& jw) {
  const int l = f.l;
  std::vector<double> fc(static_cast<std::size_t>(l)), fs(static_cast<std::size_t>(l));
  for (int q = 0; q < l; ++q) {
    fc[static_cast<std::size_t>(q)] = std::cos(angles[static_cast<std::size_t>(q)]);
    fs[static_cast<std::size_t>(q)] = std::sin(angles[static_cast<std::size_t>(q)]);
  }
  const std::size_t dim = std::size_t{1} << l;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(l);
  for (int i = 0; i < l; ++i) {
    // dw/dθ_i replaces factor i by (-sin, cos).
    double acc = 0.0;
    for (std::size_t b = 0; b < dim; ++b) {
      double prod = 1.0;
      for (int q = 0; q < l; ++q) {
        const bool bit = (b >> q) & 1u;
        if (q == i)
          prod *= bit ? fc[static_cast<std::size_t>(q)] : -fs[static_cast<std::size_t>(q)];
        else
          prod *= bit ? fs[static_cast<std::size_t>(q)] : fc[static_cast<std::size_t>(q)];
      }
      acc += prod * jw(static_cast<long>(b)).real();
    }
    g(i) = 2.0 * acc;
  }
  return g;
}

}  // namespace

double dof_from_weights(const std::vector<double>& alpha, int l) {
  if (alpha.empty()) throw std::domain_error("dof_from_weights: empty weights");
  double l1 = 0.0, l2sq = 0.0;
  for (const double a : alpha) {
    if (a <= 0.0) throw std::domain_error("dof_from_weights: weights must be positive");
    l1 += a;
    l2sq += a * a;
  }
  return l1 * l1 / l2sq * std::pow(2.0, l - 1);
}

double overparam_ratio(int l, double m) {
  if (m <= 0.0) throw std::domain_error("overparam_ratio: m must be positive");
  return static_cast<double>(l) / (2.0 * m);
}

WishartField sample_wishart(int l, int m_int, Rng& rng) {
  if (m_int < 1) throw std::domain_error("sample_wishart: need m >= 1");
  if (l < 1 || l > 12) throw resource_error("sample_wishart: l outside the dense cap (1..12)");
  const long dim = 1L << l;
  Eigen::MatrixXcd x(dim, m_int);
  const double s = std::sqrt(0.5);  // Re, Im ~ N(0, 1/2) so E|x|^2 = 1
  for (long c = 0; c < m_int; ++c)
    for (long r = 0; r < dim; ++r) x(r, c) = cplx(s * rng.normal(), s * rng.normal());
  Eigen::MatrixXcd j = x * x.adjoint() / static_cast<double>(m_int);
  j = ((j + j.adjoint()) * 0.5).eval();  // exact Hermitian symmetry
  return WishartField{l, static_cast<double>(m_int), std::move(j)};
}

std::vector<double> embed_torus(const TorusPoint& p) {
  const int l = static_cast<int>(p.angles.size());
  const std::size_t dim = std::size_t{1} << l;
  std::vector<double> w(dim, 1.0);
  for (int q = 0; q < l; ++q) {
    const double c = std::cos(p.angles[static_cast<std::size_t>(q)]);
    const double s = std::sin(p.angles[static_cast<std::size_t>(q)]);
    const std::size_t bit = std::size_t{1} << q;
    for (std::size_t b = 0; b < dim; ++b) w[b] *= (b & bit) ? s : c;
  }
  return w;
}

double eval_field(const WishartField& f, const TorusPoint& p) {
  if (static_cast<int>(p.angles.size()) != f.l) throw std::domain_error("eval_field: dimension mismatch");
  const auto w_vec = embed_torus(p);
  Eigen::VectorXd w(static_cast<long>(w_vec.size()));
  for (std::size_t i = 0; i < w_vec.size(); ++i) w(static_cast<long>(i)) = w_vec[i];
  const Eigen::VectorXcd jw = f.j * w.cast<cplx>();
  return w.dot(jw.real());
}

std::vector<double> grad_field(const WishartField& f, const TorusPoint& p) {
  if (static_cast<int>(p.angles.size()) != f.l) throw std::domain_error("grad_field: dimension mismatch");
  const auto w_vec = embed_torus(p);
  Eigen::VectorXd w(static_cast<long>(w_vec.size()));
  for (std::size_t i = 0; i < w_vec.size(); ++i) w(static_cast<long>(i)) = w_vec[i];
  const Eigen::VectorXcd jw = f.j * w.cast<cplx>();
  const Eigen::VectorXd g = grad_at(f, p.angles, jw);
  return {g.data(), g.data() + g.size()};
}

namespace {

// One J.w matvec serves both the energy and, when the point is accepted, the
// next iteration's gradient.
struct FieldPoint {
  double energy;
  Eigen::VectorXcd jw;
};

FieldPoint eval_with_jw(const WishartField& f, const std::vector<double>& angles) {
  const auto w_vec = embed_torus(TorusPoint{angles});
  Eigen::VectorXd w(static_cast<long>(w_vec.size()));
  for (std::size_t i = 0; i < w_vec.size(); ++i) w(static_cast<long>(i)) = w_vec[i];
  FieldPoint fp;
  fp.jw = f.j * w.cast<cplx>();
  fp.energy = w.dot(fp.jw.real());
  return fp;
}

}  // namespace

MinimumResult find_minimum(const WishartField& f, const TorusPoint& p0, double lr, int max_iters,
                           double tol) {
  if (tol <= 0.0) throw std::domain_error("find_minimum: tol must be positive");
  if (static_cast<int>(p0.angles.size()) != f.l)
    throw std::domain_error("find_minimum: dimension mismatch");
  MinimumResult res;
  res.point = p0;
  FieldPoint here = eval_with_jw(f, res.point.angles);
  double step = lr;
  int stalls = 0;
  for (int iter = 0; iter < max_iters; ++iter) {
    const Eigen::VectorXd grad = grad_at(f, res.point.angles, here.jw);
    const double ginf = grad.cwiseAbs().maxCoeff();
    if (ginf < tol) {
      res.energy = here.energy;
      res.converged = true;
      res.iterations = iter;
      return res;
    }
    // Backtracking: halve the step until the energy does not increase.
    TorusPoint candidate = res.point;
    FieldPoint cand = here;
    double trial = step;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < candidate.angles.size(); ++i)
        candidate.angles[i] = wrap_angle(res.point.angles[i] - trial * grad(static_cast<long>(i)));
      cand = eval_with_jw(f, candidate.angles);
      if (cand.energy <= here.energy) break;
      trial *= 0.5;
    }
    if (cand.energy >= here.energy) {
      // No representable decrease left along -grad; a few retries, then stop.
      if (cand.energy > here.energy || ++stalls >= 3) {
        res.energy = here.energy;
        res.converged = false;
        res.iterations = iter;
        return res;
      }
    } else {
      stalls = 0;
    }
    res.point = candidate;
    here = std::move(cand);
    step = std::min(lr, trial * 2.0);  // cautious regrowth
  }
  res.energy = here.energy;
  res.converged = false;
  res.iterations = max_iters;
  return res;
}

std::vector<double> minima_histogram(int l, int m_int, int n_fields, int starts_per_field,
                                     std::uint64_t seed, const GdSettings& gd) {
  std::vector<std::vector<double>> per_field(static_cast<std::size_t>(n_fields));
#pragma omp parallel for schedule(dynamic)
  for (int fi = 0; fi < n_fields; ++fi) {
    Rng field_rng(derive_seed(seed, static_cast<std::uint64_t>(fi), "whrf-field"));
    const WishartField field = sample_wishart(l, m_int, field_rng);
    std::vector<double>& found = per_field[static_cast<std::size_t>(fi)];
    for (int si = 0; si < starts_per_field; ++si) {
      Rng start_rng(derive_seed(seed, static_cast<std::uint64_t>(fi) * 1000003ull +
                                          static_cast<std::uint64_t>(si),
                                "whrf-start"));
      TorusPoint p;
      p.angles.resize(static_cast<std::size_t>(l));
      for (auto& a : p.angles) a = start_rng.uniform(-kPi, kPi);
      const MinimumResult res = find_minimum(field, p, gd.lr, gd.max_iters, gd.tol);
      if (res.converged) found.push_back(res.energy);
    }
  }
  std::vector<double> all;
  for (const auto& v : per_field) all.insert(all.end(), v.begin(), v.end());
  return all;
}

AsymptoticMinimaDensity::AsymptoticMinimaDensity(double m, int l) : m_(m), l_(l) {
  if (!(m > static_cast<double>(l) / 2.0))
    throw std::domain_error("AsymptoticMinimaDensity: requires m > l/2");
  // Peak-shifted quadrature for the normalizer.
  const double peak = unnormalized_log(mode_closed_form());
  const auto integrand = [&](double e) { return std::exp(unnormalized_log(e) - peak); };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, 0.5, 12, 1e-10);
  log_z_ = peak + std::log(integral);
}

double AsymptoticMinimaDensity::unnormalized_log(double energy) const {
  return -m_ * energy + (m_ - static_cast<double>(l_) / 2.0) * std::log(energy) +
         static_cast<double>(l_) * std::log1p(-2.0 * energy);
}

double AsymptoticMinimaDensity::log_density(double energy) const {
  if (!(energy > 0.0 && energy < 0.5))
    throw std::domain_error("AsymptoticMinimaDensity: energy outside (0, 1/2)");
  return unnormalized_log(energy) - log_z_;
}

double AsymptoticMinimaDensity::mode_closed_form() const {
  // d/dE log p = -m + (m - l/2)/E - 2l/(1-2E) = 0
  // <=> 2mE^2 - (3m + l)E + (m - l/2) = 0, root inside (0, 1/2).
  const double a = 2.0 * m_;
  const double b = -(3.0 * m_ + static_cast<double>(l_));
  const double c = m_ - static_cast<double>(l_) / 2.0;
  const double disc = std::sqrt(b * b - 4.0 * a * c);
  const double r1 = (-b - disc) / (2.0 * a);
  const double r2 = (-b + disc) / (2.0 * a);
  if (r1 > 0.0 && r1 < 0.5) return r1;
  return r2;
}

}  // namespace vql
