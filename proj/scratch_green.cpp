#include <cstdio>
#include "ris/green.hpp"
using namespace ris;

int main() {
    auto tab = build_green_table(3, 24, 30.0);
    std::printf("G(0,0)        = %.15f (ref 1.516386059151978)\n", tab.at_origin());
    std::printf("G(e1)         = %.15f (ref %.15f = G(0,0)-1)\n", tab.eval(Point{1, 0, 0}), tab.at_origin() - 1.0);
    // harmonicity at (2,1,0): G = mean of neighbours
    Point x{2, 1, 0};
    double m = 0.0;
    for (int k = 0; k < 6; ++k) m += tab.eval(x.neighbour(k));
    std::printf("harmonic test = %.3e (G - mean_neighbors, want ~0)\n", tab.eval(x) - m / 6.0);
    std::printf("sym           = %.3e\n", tab.eval(Point{3, -2, 1}) - tab.eval(Point{-1, 2, 3}));
    std::printf("a3 fitted     = %.8f analytic %.8f\n", tab.fitted_front_coeff(), tab.analytic_front_coeff());
    std::printf("fit residual  = %.3e\n", tab.fit_band_residual());
    std::printf("G(50,0,0)*50  = %.6f (a3 = %.6f)\n", tab.eval(Point{50, 0, 0}) * 50.0, tab.analytic_front_coeff());
    std::printf("table size    = %zu\n", tab.table_size());
    auto t4 = build_green_table(4, 24, 0.0);
    std::printf("d=4 G(0)      = %.12f (ref 1.239467)\n", t4.at_origin());
    Point y4{1, 0, 0, 0};
    std::printf("d=4 G(e1)     = %.12f (ref %.12f)\n", t4.eval(y4), (t4.at_origin() - 1.0) * 1.0);
    return 0;
}
