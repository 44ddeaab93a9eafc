#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vql/common.hpp"
#include "vql/rng.hpp"

namespace vql {

/// Sampled normalized complex Wishart matrix J = XX†/m on the 2^l embedding
/// space of the l-torus.
struct WishartField {
  int l = 1;
  double m = 1.0;
  Eigen::MatrixXcd j;
};

struct TorusPoint {
  std::vector<double> angles;  // each in [-pi, pi)
};

/// Degrees of freedom m = (||alpha||_1^2 / ||alpha||_2^2) * 2^{l-1}.
double dof_from_weights(const std::vector<double>& alpha, int l);

/// gamma = l / (2m); gamma >= 1 is the overparameterized phase.
double overparam_ratio(int l, double m);

WishartField sample_wishart(int l, int m_int, Rng& rng);

/// Torus embedding w: component b = prod_i (cos θ_i if bit_i(b)=0 else sin θ_i).
std::vector<double> embed_torus(const TorusPoint& p);

/// F(θ) = wᵀ J w.
double eval_field(const WishartField& f, const TorusPoint& p);

/// dF/dθ_i = 2 Re(wᵀ J dw/dθ_i).
std::vector<double> grad_field(const WishartField& f, const TorusPoint& p);

struct MinimumResult {
  TorusPoint point;
  double energy = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Backtracking gradient descent with angle wrap-around; the energy sequence
/// is non-increasing and convergence means ||grad||_inf < tol.
MinimumResult find_minimum(const WishartField& f, const TorusPoint& p0, double lr, int max_iters,
                           double tol);

struct GdSettings {
  double lr = 0.4;
  int max_iters = 100000;
  double tol = 1e-6;
};

/// Converged energies over n_fields i.i.d. fields with starts_per_field
/// uniform random starts each; deterministic given the seed, fields run in
/// parallel with derived per-task streams.
std::vector<double> minima_histogram(int l, int m_int, int n_fields, int starts_per_field,
                                     std::uint64_t seed, const GdSettings& gd = {});

/// Normalized asymptotic local-minima density on 0 < E < 1/2:
/// log p(E) = -mE + (m - l/2) log E + l log(1 - 2E) - log Z, with log Z fixed
/// once by quadrature at construction. Requires m > l/2.
class AsymptoticMinimaDensity {
 public:
  AsymptoticMinimaDensity(double m, int l);

  double log_density(double energy) const;
  double m() const { return m_; }
  int l() const { return l_; }
  double log_z() const { return log_z_; }

  /// Stationary point of the log density in (0, 1/2), from the closed-form
  /// quadratic 2mE^2 - (3m + l)E + (m - l/2) = 0.
  double mode_closed_form() const;

 private:
  double unnormalized_log(double energy) const;

  double m_;
  int l_;
  double log_z_;
};

}  // namespace vql
