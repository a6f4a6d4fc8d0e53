#pragma once

namespace ibf {

/// exp(-|z|) I_n(z), the exponentially scaled modified Bessel function of the
/// first kind. Finite for every finite z.
double bessel_i_scaled(int n, double z);

/// I_n(z). Throws numeric_failure when the value overflows a double.
double bessel_i(int n, double z);

/// sin(x) / x with the removable singularity filled in.
double sinc(double x);

}  // namespace ibf
