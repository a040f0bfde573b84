#pragma once
/*
 * Space-time partitions of unity for the perturbation assembly.
 *
 * The time axis is cut into slabs of length eps and the spatial torus
 * into cubical cells of side 2 pi / Nc.  Both cuts use one scalar window
 * theta0: identically 1 on [1/8, 7/8], supported in (-1/8, 9/8), with
 * edge profile the 6th root of smooth_step.  Since
 *     smooth_step(u) + smooth_step(1 - u) = 1
 * the 6th powers of integer translates tile exactly,
 *     sum_m theta0(s - m)^6 = 1   for every s,
 * and the product cell window chi_n(y) = prod_a theta0(y_a - n_a)
 * inherits sum_n chi_n^6 = 1 by factorization.  Amplitudes in the
 * scheme carry theta^2 chi^2 (stress pieces) or theta^3 chi^3 (current
 * pieces), so the squared resp. cubed weights of the three interleaved
 * residue classes combine back to the constant 1.
 *
 * The cell count per axis is snapped to a multiple of 3 so the residue
 * class n mod 3 (which selects the direction family) is well defined on
 * the torus.
 */

#include <array>

namespace wf {

// The master window theta0 described above.
double theta_window(double u);

// theta0(t / eps - m)^power
double theta_weight(int m, double t, double eps, int power);

// Cells per axis for a requested cell size mu (as a fraction of 2 pi):
// the smallest multiple of 3 with 1 / Nc <= mu.
int snap_cells(double mu_raw);

// chi_n(y)^power at xi (radians), for the cell n of an Nc^3 grid; the
// window argument is wrapped periodically.
double chi_cell(const double xi[3], const std::array<int, 3>& n, int ncells,
                int power = 1);

// The (at most 2) integer windows with theta0(y - n) != 0; returns how
// many.  With ncells > 0 the indices are reduced mod ncells into
// [0, ncells) (spatial cells); with ncells <= 0 they are returned as is
// (time slabs).  Shared by the cell and slab enumerations in the
// assembly loop.
int active_windows_axis(double y, int ncells, int out_n[2]);

}  // namespace wf
