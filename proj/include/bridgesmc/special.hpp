#pragma once

namespace bridgesmc {

double digamma(double x);

/// Regularized lower incomplete gamma P(a, x).
double reg_lower_gamma(double a, double x);

/// Quantile of Gamma(shape, rate): solves P(shape, rate*x) = u to ~1e-12.
double gamma_quantile(double shape, double rate, double u);

double normal_quantile(double p);
double normal_cdf(double x);

/// Survival function of the Kolmogorov statistic, Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda);

}  // namespace bridgesmc
