#pragma once

namespace fgml::pmath {

// Portable transcendental kernels built from IEEE-754 arithmetic only, so the
// RNG's normal transform and the augmentation geometry produce identical bits
// on any platform with the same float semantics, independent of libm.

// Natural log; requires x > 0 and finite.
double log(double x);

// Sine/cosine for |x| <= ~8 (one Cody-Waite reduction step).
double sin(double x);
double cos(double x);

}  // namespace fgml::pmath
