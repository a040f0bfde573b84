#pragma once
/*
 * FFTW-backed transforms between grid samples and Fourier coefficients.
 * Plans are created with FFTW_ESTIMATE only, so planning is deterministic
 * and results are bit-reproducible across runs and machines with the same
 * FFTW build.  Everything here is single-threaded.
 */

#include "wildflow/field.hpp"

namespace wf {

Spectrum to_spectrum(const Field& f);
Field from_spectrum(const Spectrum& s);

// L2 norm with the normalized measure (1/(2pi)^3) dx, i.e.
// ||f||^2 = mean over the grid of |f(x)|^2 summed over components.
double l2_norm(const Field& f);
double l2_norm_spectral(const Spectrum& s);  // same quantity via Parseval

}  // namespace wf
