#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfbcid {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

// Error taxonomy. Everything thrown by the library derives from Error so
// callers can catch one type; the subclasses name the failing contract.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wrong vector/matrix size handed to an operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or unsupported configuration (FFT size, CP, antennas, pool).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Out-of-range numeric parameter (probability, index, SNR).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// FFT window placed outside the received stream.
class WindowError : public Error {
public:
    using Error::Error;
};

/// Test statistic requested for an all-zero spectrum.
class StatisticError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated file (IQ capture, table, config).
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace sfbcid
