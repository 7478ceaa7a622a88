#pragma once

#include <optional>

namespace tubeband {

/// Everything the tail formula of max_x Y(x) needs.
struct TubeFormulaParams {
  int k = 3;                 // number of groups
  double gamma_length = 0.0; // |Gamma|
  int euler_char = 1;        // chi(Gamma)
  std::optional<int> nu;     // df of sigma-hat^2; empty when Sigma is known

  /// Gamma(k/2) / (sqrt(pi) Gamma((k-1)/2)).
  double lead_coeff() const;

  /// Throws DomainError unless k >= 2, |Gamma| >= 0, chi >= 0, nu > 0.
  void validate() const;
};

/// Upper tail of the chi-square distribution with m df; m = 0 is the point
/// mass at zero.
double chi2_upper_tail(int m, double t);

/// Tube approximation of Pr(max_x Y(x) >= b^2) with Sigma known. The raw
/// value is returned even when it exceeds 1.
double tube_tail_probability(const TubeFormulaParams& params, double b);

enum class StudentizedMethod {
  f_tail,     // closed form through F(m, nu) upper tails
  quadrature  // 64-node Gauss-Legendre over the density of tau
};

/// E[tube tail at b * tau] with tau^2 ~ chi2_nu / nu. Requires params.nu.
double studentized_tube_tail(const TubeFormulaParams& params, double b,
                             StudentizedMethod method = StudentizedMethod::f_tail);

/// Dispatches to the studentized form when params.nu is set.
double tail_probability(const TubeFormulaParams& params, double b);

/// Largest b in [1, 50] with tail_probability(b) = alpha, to |residual| < 1e-10.
double critical_value(const TubeFormulaParams& params, double alpha);

/// Vol(M_theta) / Omega_n with n = p (k - 1), from the same weights as the
/// tail formula.
double tube_volume_fraction(const TubeFormulaParams& params, int p,
                            double theta);

}  // namespace tubeband
