#include "icl/gains.hpp"

#include <stdexcept>

namespace icl {

namespace {

void require_spd(const Mat& A, const char* what, double* min_eig, double* max_eig) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw std::invalid_argument(std::string(what) + " must be square and non-empty");
    }
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument(std::string(what) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (A + A.transpose()),
                                           Eigen::EigenvaluesOnly);
    const Vec& vals = eig.eigenvalues();
    if (vals.minCoeff() <= 0.0) {
        throw std::invalid_argument(std::string(what) + " is not positive definite");
    }
    if (min_eig) *min_eig = vals.minCoeff();
    if (max_eig) *max_eig = vals.maxCoeff();
}

}  // namespace

Gains::Gains(Mat K, Mat Gamma, double k_cl)
    : K_(std::move(K)), Gamma_(std::move(Gamma)), k_cl_(k_cl) {
    require_spd(K_, "K", &K_min_eig_, nullptr);
    require_spd(Gamma_, "Gamma", &Gamma_min_eig_, &Gamma_max_eig_);
    if (!(k_cl_ > 0.0)) {
        throw std::invalid_argument("k_cl must be positive");
    }
    Gamma_inv_ = Gamma_.inverse();
}

double min_eigenvalue(const Mat& sym) {
    if (sym.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (sym + sym.transpose()),
                                           Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

}  // namespace icl
