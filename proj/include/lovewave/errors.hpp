#pragma once

#include <stdexcept>
#include <string>

namespace lovewave {

// Base class for every failure raised by the library. Errors are split into
// data/validation problems and numerical failures so front ends can map them
// to distinct exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual bool numerical() const { return false; }
};

class NumericalError : public Error {
public:
    using Error::Error;
    bool numerical() const override { return true; }
};

#define LOVEWAVE_ERROR(Name, Base)                                      \
    class Name : public Base {                                          \
    public:                                                             \
        explicit Name(const std::string& what) : Base(#Name ": " + what) {} \
    };

LOVEWAVE_ERROR(NonPositiveParameter, Error)
LOVEWAVE_ERROR(NoLoveWaves, Error)
LOVEWAVE_ERROR(ConfigError, Error)
LOVEWAVE_ERROR(BadBracket, Error)
LOVEWAVE_ERROR(OutOfRange, Error)
LOVEWAVE_ERROR(InsufficientData, Error)
LOVEWAVE_ERROR(UnresolvedLevels, Error)
LOVEWAVE_ERROR(AmbiguousOrdering, Error)
LOVEWAVE_ERROR(NotOnBranch, Error)
LOVEWAVE_ERROR(DegeneratePoint, Error)
LOVEWAVE_ERROR(GridTooCoarse, NumericalError)
LOVEWAVE_ERROR(DivergedOrInfeasible, NumericalError)
LOVEWAVE_ERROR(NonRealResult, NumericalError)

#undef LOVEWAVE_ERROR

}  // namespace lovewave
