#pragma once

namespace uent {

enum class Norm { L1, L2, Linf };

// Upward recurrence into the asymptotic series; absolute error <= 1e-12 on
// [1e-3, 1e6]. Throws DomainError for x <= 0.
double digamma(double x);

// log of the volume of the unit p-ball in R^d; Linf is the limit (log 1 = 0).
double log_unit_ball_volume(int d, Norm p);

// Standard normal helpers. cdf is clamped to [1e-15, 1-1e-15] so downstream
// logs of cell side lengths stay finite.
double normal_cdf(double y);
double normal_log_pdf(double y);
double normal_quantile(double p);  // inverse of the unclamped cdf

// Regularized incomplete beta I_x(a, b) and its inverse (Newton with a
// bisection safeguard, |I(inv(p)) - p| <= 1e-10).
double reg_inc_beta(double a, double b, double x);
double reg_inc_beta_inv(double a, double b, double p);

}  // namespace uent
