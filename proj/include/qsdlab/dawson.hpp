#pragma once

namespace qsdlab {

// Dawson's integral D(z) = exp(-z^2) * int_0^z exp(u^2) du.
double dawson(double z);
// D_m = sup D and its maximiser, by golden-section search (cached).
double dawson_max();
double dawson_argmax();
// int_0^z D(s) ds (even in z).
double dawson_integral(double z);

}  // namespace qsdlab
