#pragma once

// Values produced by tests/oracles/s3n_diagonal_peak.py (scipy QUADPACK at
// 1e-12, explicit 2x2 Keldysh matrices) and frozen here. Gamma = 1.

#include <array>
#include <complex>

namespace wmsim::oracle {

struct S3Point {
    double omega, omega_p, eps, kT;
    std::complex<double> value;
};

inline constexpr std::array<S3Point, 4> kS3Points{{
    {1.0, 1.0, 0.5, 0.0, {0.078626992698047835, 0.054505306523066357}},
    {1.0, 0.4, 0.5, 0.0, {0.16268143132468249, 0.066623625823335419}},
    {1.0, 1.0, 0.5, 1.0, {0.027925650838942325, 0.0056578554204802243}},
    {1.0, 1.0, 20.0, 0.0, {-1.0009377184081042e-05, 1.8949465841301267e-10}},
}};

struct DiagonalPeak {
    double eps;
    double omega;  // location of the |Im S3(w, w)| maximum on (0, 3]
    double im_s3;  // |Im S3| at the maximum
};

inline constexpr std::array<DiagonalPeak, 3> kDiagonalPeaks{{
    {1.0, 0.86721309027000215, 0.06090038611061048},
    {0.5, 0.56652494779753371, 0.097635433278665043},
    {0.2, 0.43230376673643756, 0.070339694099828168},
}};

} // namespace wmsim::oracle
