#pragma once
/*
 * Direction families and the two pointwise decomposition lemmas.
 *
 * A stress family F_R is six integer directions {k_i} with
 * sum k_i (x) k_i = C Id whose rank-one tensors form a basis of the
 * symmetric 3x3 matrices: every K near the identity then decomposes as
 * K = sum Gamma_i^2(K) k_i (x) k_i with positive coefficients, valid on
 * the box |K - Id|_inf <= N0 (measured per family).
 *
 * A current frame F_phi is an orthogonal integer frame {k_1,k_2,k_3} plus
 * k_4 = -(k_1+k_2+k_3); every small vector u decomposes as
 * u = sum Lambda_i(u) k_i with the affine coefficients bounded below.
 *
 * There are 27 classes indexed by (n mod 3) in Z^3; all 270 directions
 * across classes are pairwise distinct up to sign, so pieces living in
 * adjacent partition cells never share a pipe direction.
 */

#include <array>
#include <string>
#include <vector>

namespace wf {

using IVec = std::array<int, 3>;

struct Family6 {
    std::array<IVec, 6> k;
    int C = 0;       // sum k_i (x) k_i = C Id
    double n0 = 0;   // measured domain radius N0 (1% safety margin)
};

struct Frame4 {
    std::array<IVec, 4> k;  // k[3] = -(k[0]+k[1]+k[2])
};

struct DirectionFamilies {
    std::array<Family6, 27> R;
    std::array<Frame4, 27> Phi;

    static int class_index(int n1, int n2, int n3) {
        auto m = [](int v) { return ((v % 3) + 3) % 3; };
        return m(n1) + 3 * m(n2) + 9 * m(n3);
    }
};

DirectionFamilies build_families();
double min_family_n0(const DirectionFamilies& fam);

// Solves K = sum c_i k_i (x) k_i (coefficients are affine in K, so one
// 6x6 inverse per family serves every grid point).
class GammaSolver {
  public:
    explicit GammaSolver(const Family6& fam);
    // K in sym storage order xx,yy,zz,xy,xz,yz
    std::array<double, 6> coeffs(const std::array<double, 6>& K) const;
    // sqrt of the coefficients; throws naming the direction if c_i <= 0
    std::array<double, 6> gammas(const std::array<double, 6>& K) const;
    bool coeffs_positive(const std::array<double, 6>& K) const;
    const Family6& family() const { return fam_; }

  private:
    Family6 fam_;
    std::array<double, 36> inv_;  // row-major inverse of the basis matrix
};

// Largest N with all coefficients strictly positive on the box
// |K - Id|_inf <= N (affine coefficients: the worst corner is explicit),
// times a 1% safety margin.
double measure_N0(const Family6& fam);

// Minimal affine offset M with min_i Lambda_i >= n0_target on |u| <= n0_target.
double lambda_offset(const Frame4& frame, double n0_target);
// Lambda_i(u) = u.k_i/|k_i|^2 + M (i=1..3), Lambda_4 = M; throws if |u| too big.
std::array<double, 4> lambda_coeffs(const std::array<double, 3>& u,
                                    const Frame4& frame, double n0_target);

}  // namespace wf
