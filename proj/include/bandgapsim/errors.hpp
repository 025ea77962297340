#pragma once

#include <stdexcept>
#include <string>

namespace bgs {

// Base for every domain error. The operation name travels with the message so
// the CLI can report which module step failed.
class Error : public std::runtime_error {
public:
    Error(std::string op, const std::string& what)
        : std::runtime_error(op + ": " + what), op_(std::move(op)) {}
    const std::string& operation() const { return op_; }

private:
    std::string op_;
};

// Input documents that fail validation (CLI exit 1).
class SchemaError : public Error {
public:
    using Error::Error;
};

// Everything raised while computing (CLI exit 2).
class ComputationError : public Error {
public:
    using Error::Error;
};

// Unreadable inputs or unwritable outputs (CLI exit 3).
class IoError : public Error {
public:
    using Error::Error;
};

#define BGS_DEFINE_ERROR(Name)            \
    class Name : public ComputationError { \
    public:                                \
        using ComputationError::ComputationError; \
    };

BGS_DEFINE_ERROR(InvalidSpec)
BGS_DEFINE_ERROR(NotPositiveDefinite)
BGS_DEFINE_ERROR(SeriesDiverges)
BGS_DEFINE_ERROR(InsideBand)
BGS_DEFINE_ERROR(OnBranchCut)
BGS_DEFINE_ERROR(DivergentLength)
BGS_DEFINE_ERROR(MissingAnchor)
BGS_DEFINE_ERROR(NoBoundState)
BGS_DEFINE_ERROR(InsufficientPoints)
BGS_DEFINE_ERROR(DimensionMismatch)
BGS_DEFINE_ERROR(SectorTooLarge)
BGS_DEFINE_ERROR(ZeroTimeAverage)
BGS_DEFINE_ERROR(EmptyAfterPostselect)
BGS_DEFINE_ERROR(TensorOnly)
BGS_DEFINE_ERROR(InvalidArgument)

#undef BGS_DEFINE_ERROR

}  // namespace bgs
