#pragma once

#include <stdexcept>
#include <string>

namespace doslb {

// Base class for everything thrown by this library. The CLI maps usage
// problems to exit code 1 and numeric/internal failures to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

class NonFiniteInput : public Error {
public:
    explicit NonFiniteInput(const std::string& msg) : Error(msg) {}
};

class NotSymmetric : public Error {
public:
    explicit NotSymmetric(const std::string& msg) : Error(msg) {}
};

class NotPositiveDefinite : public Error {
public:
    explicit NotPositiveDefinite(const std::string& msg) : Error(msg) {}
};

class NumericalFailure : public Error {
public:
    explicit NumericalFailure(const std::string& msg) : Error(msg) {}
};

class InvalidInstance : public Error {
public:
    explicit InvalidInstance(const std::string& msg) : Error(msg) {}
};

class UnboundedDomain : public Error {
public:
    explicit UnboundedDomain(const std::string& msg) : Error(msg) {}
};

class InvalidEps : public Error {
public:
    explicit InvalidEps(const std::string& msg) : Error(msg) {}
};

class BernoulliMeanOutOfRange : public Error {
public:
    explicit BernoulliMeanOutOfRange(const std::string& msg) : Error(msg) {}
};

class OutOfRange : public Error {
public:
    explicit OutOfRange(const std::string& msg) : Error(msg) {}
};

class NonpositiveGap : public Error {
public:
    explicit NonpositiveGap(const std::string& msg) : Error(msg) {}
};

class PermissibleEmpty : public Error {
public:
    explicit PermissibleEmpty(const std::string& msg) : Error(msg) {}
};

class NotOnSimplex : public Error {
public:
    explicit NotOnSimplex(const std::string& msg) : Error(msg) {}
};

class TooManyVertices : public Error {
public:
    explicit TooManyVertices(const std::string& msg) : Error(msg) {}
};

class EnumerationBudgetExceeded : public Error {
public:
    explicit EnumerationBudgetExceeded(const std::string& msg) : Error(msg) {}
};

class NoSafeFallback : public Error {
public:
    explicit NoSafeFallback(const std::string& msg) : Error(msg) {}
};

class ProgramInfeasible : public Error {
public:
    explicit ProgramInfeasible(const std::string& msg) : Error(msg) {}
};

class ProgramUnbounded : public Error {
public:
    explicit ProgramUnbounded(const std::string& msg) : Error(msg) {}
};

class ExponentialBudgetExceeded : public Error {
public:
    explicit ExponentialBudgetExceeded(const std::string& msg) : Error(msg) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace doslb
