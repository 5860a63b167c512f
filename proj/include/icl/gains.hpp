#pragma once

#include "icl/types.hpp"

namespace icl {

/// Controller and adaptation gains. K (n x n) and Gamma (m x m) must be
/// symmetric positive definite; k_cl must be positive. Construction fails
/// loudly otherwise -- there is no clamping.
class Gains {
public:
    Gains(Mat K, Mat Gamma, double k_cl);

    const Mat& K() const { return K_; }
    const Mat& Gamma() const { return Gamma_; }
    const Mat& Gamma_inv() const { return Gamma_inv_; }
    double k_cl() const { return k_cl_; }

    double K_min_eig() const { return K_min_eig_; }
    double Gamma_min_eig() const { return Gamma_min_eig_; }
    double Gamma_max_eig() const { return Gamma_max_eig_; }

private:
    Mat K_, Gamma_, Gamma_inv_;
    double k_cl_;
    double K_min_eig_, Gamma_min_eig_, Gamma_max_eig_;
};

// Minimum eigenvalue of a symmetric matrix (symmetrized before the solve).
double min_eigenvalue(const Mat& sym);

}  // namespace icl
