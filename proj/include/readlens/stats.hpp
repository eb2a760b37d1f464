#pragma once

namespace readlens {

/// Regularized incomplete beta I_x(a, b), evaluated with a Lentz continued
/// fraction on whichever side of the mean converges fastest.
double regularized_incomplete_beta(double a, double b, double x);

/// Upper tail P(X > f) of the F(df1, df2) distribution.
double f_distribution_sf(double f, double df1, double df2);

}  // namespace readlens
