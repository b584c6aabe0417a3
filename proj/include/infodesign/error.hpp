#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace infodesign {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorKind {
    InvalidInput,   //!< argument violates a documented precondition
    RankDeficient,  //!< data matrix lacks full row rank / condition cap exceeded
    Truncation,     //!< requested SVD rank exceeds the numerical rank
    Size,           //!< instance too large for an explicit construction
    Allocation,     //!< multisine harmonics cannot be allotted
    Slew,           //!< generated signal violates the slew bound
    Numerical,      //!< solver breakdown
    Config,         //!< configuration file problem
    Io,             //!< file system problem
};

/**
 * @brief Library exception. Every failure raised by the core carries a kind so
 * the C layer can map it onto a status code without string matching.
 */
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by estimate_theta when Z Z^T is singular or too ill-conditioned.
class RankDeficientError : public Error {
public:
    RankDeficientError(Index numerical_rank, Index required, const std::string& what)
        : Error(ErrorKind::RankDeficient, what), numerical_rank_(numerical_rank), required_(required) {}

    [[nodiscard]] Index numerical_rank() const noexcept { return numerical_rank_; }
    [[nodiscard]] Index required_rank() const noexcept { return required_; }

private:
    Index numerical_rank_;
    Index required_;
};

/// Raised by the DMDc reduction when a truncation rank cannot be honoured.
class TruncationError : public Error {
public:
    TruncationError(Index achievable, const std::string& what)
        : Error(ErrorKind::Truncation, what), achievable_(achievable) {}

    [[nodiscard]] Index achievable_rank() const noexcept { return achievable_; }

private:
    Index achievable_;
};

enum class ConfigErrorKind { MissingFile, Syntax, OutOfRange, UnknownKey, TypeMismatch };

class ConfigError : public Error {
public:
    ConfigError(ConfigErrorKind sub, std::string key, const std::string& what)
        : Error(ErrorKind::Config, what), sub_(sub), key_(std::move(key)) {}

    [[nodiscard]] ConfigErrorKind sub_kind() const noexcept { return sub_; }
    /// Offending key path (e.g. "constraints.beta"), empty for file-level errors.
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    ConfigErrorKind sub_;
    std::string key_;
};

} // namespace infodesign
