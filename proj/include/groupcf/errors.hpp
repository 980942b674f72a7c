#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace groupcf {

// Base of all library errors. The three families below map onto the CLI
// exit-code contract: InputError -> 2, NoSolutionError -> 3,
// ExhaustionError -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : Error {
    using Error::Error;
};

struct NoSolutionError : Error {
    using Error::Error;
};

struct ExhaustionError : Error {
    using Error::Error;
};

// --- ingestion / schema ---

struct MissingColumnError : InputError {
    explicit MissingColumnError(const std::string& column)
        : InputError("missing column: " + column), column(column) {}
    std::string column;
};

struct UnknownCategoryError : InputError {
    UnknownCategoryError(const std::string& feature, const std::string& value, std::size_t row)
        : InputError("unknown category '" + value + "' for feature '" + feature + "' at data row " +
                     std::to_string(row)),
          feature(feature), value(value), row(row) {}
    std::string feature;
    std::string value;
    std::size_t row;
};

struct MalformedNumberError : InputError {
    MalformedNumberError(std::size_t row, const std::string& feature, const std::string& text)
        : InputError("malformed number '" + text + "' for feature '" + feature + "' at data row " +
                     std::to_string(row)),
          row(row), feature(feature) {}
    std::size_t row;
    std::string feature;
};

struct SchemaError : InputError {
    using InputError::InputError;
};

struct SchemaMismatchError : InputError {
    using InputError::InputError;
};

struct DegenerateSplitError : InputError {
    using InputError::InputError;
};

// --- model ---

struct ConfigError : InputError {
    using InputError::InputError;
};

struct SingleClassTrainingError : InputError {
    using InputError::InputError;
};

struct UnknownInstanceError : InputError {
    using InputError::InputError;
};

struct IoError : InputError {
    using InputError::InputError;
};

struct FormatVersionMismatchError : InputError {
    using InputError::InputError;
};

// --- neighbors ---

struct InsufficientNeighborsError : ExhaustionError {
    InsufficientNeighborsError(std::size_t found, std::size_t wanted)
        : ExhaustionError("insufficient like-class neighbors: found " + std::to_string(found) +
                          ", wanted " + std::to_string(wanted)),
          found(found), wanted(wanted) {}
    std::size_t found;
    std::size_t wanted;
};

struct InsufficientEligibleError : ExhaustionError {
    InsufficientEligibleError(int cls, std::size_t found, std::size_t wanted)
        : ExhaustionError("insufficient eligible seeds for class " + std::to_string(cls) +
                          ": found " + std::to_string(found) + ", wanted " + std::to_string(wanted)),
          cls(cls), found(found), wanted(wanted) {}
    int cls;
    std::size_t found;
    std::size_t wanted;
};

// --- counterfactual search ---

struct NoActionableFeaturesError : InputError {
    using InputError::InputError;
};

struct AllSinglesFailedError : NoSolutionError {
    using NoSolutionError::NoSolutionError;
};

struct EmptyContrastClassError : NoSolutionError {
    using NoSolutionError::NoSolutionError;
};

struct TooFewPointsError : InputError {
    using InputError::InputError;
};

struct NoValidCandidateError : NoSolutionError {
    using NoSolutionError::NoSolutionError;
};

// --- metrics ---

struct LengthMismatchError : InputError {
    using InputError::InputError;
};

struct ZeroVarianceError : InputError {
    using InputError::InputError;
};

struct MissingItemError : InputError {
    using InputError::InputError;
};

// --- study / cli ---

struct ExhaustedSeedsError : ExhaustionError {
    ExhaustedSeedsError(std::size_t succeeded, std::size_t wanted)
        : ExhaustionError("exhausted eligible seeds: built " + std::to_string(succeeded) +
                          " of " + std::to_string(wanted) + " item sets"),
          succeeded(succeeded), wanted(wanted) {}
    std::size_t succeeded;
    std::size_t wanted;
};

struct InvalidCounterfactualError : InputError {
    using InputError::InputError;
};

struct SelectorNotFoundError : InputError {
    using InputError::InputError;
};

}  // namespace groupcf
