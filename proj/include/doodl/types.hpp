#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace doodl {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace doodl
