#pragma once

#include <stdexcept>
#include <string>

namespace bornrad {

// Exit-code classes used by the CLI.
enum class ErrorClass { validation = 2, budget = 3, numerical = 4 };

class Error : public std::runtime_error {
public:
    Error(std::string kind, ErrorClass cls, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)), cls_(cls) {}
    const std::string& kind() const { return kind_; }
    ErrorClass error_class() const { return cls_; }
    int exit_code() const { return static_cast<int>(cls_); }

private:
    std::string kind_;
    ErrorClass cls_;
};

#define BORNRAD_ERROR(Name, Cls)                                              \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& msg) : Error(#Name, Cls, msg) {}     \
    };

BORNRAD_ERROR(DegenerateBand, ErrorClass::validation)
BORNRAD_ERROR(NonHermitianFiber, ErrorClass::validation)
BORNRAD_ERROR(DimensionMismatch, ErrorClass::validation)
BORNRAD_ERROR(ProjectorMismatch, ErrorClass::validation)
BORNRAD_ERROR(RoughFiber, ErrorClass::validation)
BORNRAD_ERROR(ResonantMode, ErrorClass::validation)
BORNRAD_ERROR(WrongSign, ErrorClass::validation)
BORNRAD_ERROR(ParseError, ErrorClass::validation)
BORNRAD_ERROR(ValidationError, ErrorClass::validation)
BORNRAD_ERROR(NonPositiveValue, ErrorClass::validation)
BORNRAD_ERROR(BudgetExceeded, ErrorClass::budget)
BORNRAD_ERROR(StepSizeTooLarge, ErrorClass::numerical)
BORNRAD_ERROR(DefectTooLarge, ErrorClass::numerical)
BORNRAD_ERROR(QuadratureNotConverged, ErrorClass::numerical)
BORNRAD_ERROR(KrylovBreakdown, ErrorClass::numerical)

#undef BORNRAD_ERROR

// Carries the offending grid index.
class GapViolation : public Error {
public:
    GapViolation(const std::string& msg, int point)
        : Error("GapViolation", ErrorClass::validation, msg), point_(point) {}
    int point() const { return point_; }

private:
    int point_;
};

}  // namespace bornrad
