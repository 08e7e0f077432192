#ifndef LDENET_ERRORS_HPP
#define LDENET_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ldenet {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A precondition on an argument was violated (bad alpha, nonpositive dt, ...).
class InvalidParameter : public Error {
public:
    explicit InvalidParameter(const std::string& msg) : Error(msg) {}
};

/// Input series or batch too short for the requested operation.
class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

/// Dimension mismatch between containers that must agree.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Neighbor geometry collapsed (all candidate distances zero or none valid).
class DegenerateGeometry : public Error {
public:
    DegenerateGeometry(const std::string& msg, std::size_t step)
        : Error(msg + " (replacement step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Lyapunov exponent is not positive; no finite predictability horizon.
class NotChaotic : public Error {
public:
    explicit NotChaotic(const std::string& msg) : Error(msg) {}
};

/// E1 curve never plateaued within the computed range.
class NoSaturation : public Error {
public:
    explicit NoSaturation(const std::string& msg) : Error(msg) {}
};

/// A gradient or parameter update produced NaN/Inf.
class NonFiniteUpdate : public Error {
public:
    NonFiniteUpdate(const std::string& msg, std::string block)
        : Error(msg + " (parameter block: " + block + ")"), block_(std::move(block)) {}
    const std::string& block() const { return block_; }

private:
    std::string block_;
};

/// An integration path left the representable range at a known step.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, std::size_t step)
        : Error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Too many Monte-Carlo paths diverged for the estimate to be trusted.
class PredictionUnstable : public Error {
public:
    explicit PredictionUnstable(const std::string& msg) : Error(msg) {}
};

/// CSV or JSON input could not be parsed; carries the 1-based row number.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t row)
        : Error(msg + " (row " + std::to_string(row) + ")"), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

/// Timestamps out of order or duplicated; carries the offending row.
class OrderingError : public Error {
public:
    OrderingError(const std::string& msg, std::size_t row)
        : Error(msg + " (row " + std::to_string(row) + ")"), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

/// Train split has zero range; min-max normalization undefined.
class ConstantSeries : public Error {
public:
    explicit ConstantSeries(const std::string& msg) : Error(msg) {}
};

/// Normal equations singular while fitting a linear model.
class RankError : public Error {
public:
    explicit RankError(const std::string& msg) : Error(msg) {}
};

/// Too few Monte-Carlo paths for a meaningful statistic.
class StatisticalPower : public Error {
public:
    explicit StatisticalPower(const std::string& msg) : Error(msg) {}
};

/// An experiment stage failed; carries the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

} // namespace ldenet

#endif
