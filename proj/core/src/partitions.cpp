#include "wildflow/partitions.hpp"

#include <cmath>
#include <stdexcept>

#include "wildflow/bump.hpp"

namespace wf {

constexpr double two_pi = 6.283185307179586476925286766559;

/*
 * Edges are the 6th root of smooth_step over the transition intervals
 * (-1/8, 1/8) and (7/8, 9/8).  On the falling edge the argument of
 * smooth_step is 1 minus the rising-edge argument of the next window,
 * which is what makes the 6th powers tile exactly.
 */
double theta_window(double u) {
    if (u <= -0.125 || u >= 1.125) return 0.0;
    if (u >= 0.125 && u <= 0.875) return 1.0;
    double s;
    if (u < 0.125)
        s = smooth_step((u + 0.125) * 4.0);
    else
        s = smooth_step((1.125 - u) * 4.0);
    return std::pow(s, 1.0 / 6.0);
}

double theta_weight(int m, double t, double eps, int power) {
    const double th = theta_window(t / eps - m);
    if (th == 0.0) return 0.0;
    double r = th;
    for (int i = 1; i < power; ++i) r *= th;
    return r;
}

int snap_cells(double mu_raw) {
    if (!(mu_raw > 0.0) || mu_raw > 1.0)
        throw std::runtime_error("snap_cells: cell fraction outside (0, 1]");
    return 3 * int(std::ceil(1.0 / (3.0 * mu_raw) - 1e-12));
}

double chi_cell(const double xi[3], const std::array<int, 3>& n, int ncells,
                int power) {
    double chi = 1.0;
    for (int a = 0; a < 3; ++a) {
        double y = xi[a] * ncells / two_pi - n[a];
        // reduce to the representative nearest the window [−1/8, 9/8]
        y -= ncells * std::floor((y + 0.5 * ncells - 0.5) / ncells);
        chi *= theta_window(y);
        if (chi == 0.0) return 0.0;
    }
    double r = chi;
    for (int i = 1; i < power; ++i) r *= chi;
    return r;
}

int active_windows_axis(double y, int ncells, int out_n[2]) {
    // theta0(y - n) != 0 iff n in (y - 9/8, y + 1/8)
    const int hi = int(std::floor(y + 0.125));
    int cnt = 0;
    for (int n = hi - 1; n <= hi; ++n) {
        if (n <= y - 1.125 || n >= y + 0.125) continue;
        int nr = n;
        if (ncells > 0) {
            nr %= ncells;
            if (nr < 0) nr += ncells;
        }
        out_n[cnt++] = nr;
    }
    return cnt;
}

}  // namespace wf
