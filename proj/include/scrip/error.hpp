#pragma once

#include <stdexcept>
#include <string>

namespace scrip {

// Base type for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter or argument outside its documented bounds.
struct RangeError : Error {
    using Error::Error;
};

// A violation probability was supplied that has no usable exact rational form.
struct IrrationalReward : Error {
    using Error::Error;
};

// Arithmetic left the exactly representable range.
struct RationalOverflow : Error {
    using Error::Error;
};

// A uniform draw was requested from an empty pool.
struct EmptyPool : Error {
    using Error::Error;
};

struct StateSpaceTooLarge : Error {
    using Error::Error;
};

struct NotIrreducible : Error {
    using Error::Error;
};

struct Periodic : Error {
    using Error::Error;
};

struct InfeasibleMean : Error {
    using Error::Error;
};

// Nobody volunteers under the proposed population play; the monitor-selection
// rate is undefined rather than guessed.
struct NoVolunteers : Error {
    using Error::Error;
};

struct NoFixedPoint : Error {
    using Error::Error;
};

struct UnknownAgent : Error {
    using Error::Error;
};

struct ZeroAverage : Error {
    using Error::Error;
};

struct InfeasibleInit : Error {
    using Error::Error;
};

struct NeverConverged : Error {
    using Error::Error;
};

}  // namespace scrip
