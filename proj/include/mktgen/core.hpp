#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace mktgen {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

enum class ErrorCode {
    ConstantColumn,
    InvalidValue,
    DomainError,
    OutOfBounds,
    ShapeError,
    EmptyBatch,
    TooLarge,
    Diverged,
    CacheError,
    TooFewRows,
    NotPositiveDefinite,
    EmptyInput,
    SupportError,
    VersionError,
    UsageError,
    ConfigError,
    IoError,
};

inline const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Diverged: return "DivergedError";
    case ErrorCode::CacheError: return "CacheError";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SupportError: return "SupportError";
    case ErrorCode::VersionError: return "VersionError";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message)
{
    if (!condition)
        fail(code, message);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m)
{
    return m.allFinite();
}

/// Deterministic random stream identified by (master seed, stream index).
///
/// Distinct indices under one seed give independent substreams; replication r
/// of any Monte-Carlo experiment uses index r.
class RngStream {
public:
    using Engine = std::mt19937_64;

    explicit RngStream(std::uint64_t seed, std::uint64_t index = 0) : seed_(seed), index_(index)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          0x6d6b7467u};
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t index() const noexcept { return index_; }

    /// Substream of the same master seed.
    RngStream substream(std::uint64_t index) const { return RngStream(seed_, index); }

    Engine& engine() noexcept { return engine_; }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() { return normal_(engine_); }

    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n)
    {
        std::uniform_int_distribution<std::size_t> dist(0, n - 1);
        return dist(engine_);
    }

    Matrix normal_matrix(Index rows, Index cols)
    {
        Matrix out(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i)
                out(i, j) = normal();
        return out;
    }

private:
    std::uint64_t seed_;
    std::uint64_t index_;
    Engine engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace mktgen
