#pragma once

#include <stdexcept>
#include <string>

namespace crossim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// road geometry
struct DegenerateSpec : Error {
    using Error::Error;
};
struct GenerationExhausted : Error {
    using Error::Error;
};
struct MutationExhausted : Error {
    using Error::Error;
};

// search
struct EmptyPopulation : Error {
    using Error::Error;
};

// feature-map algebra
struct MismatchedBinning : Error {
    using Error::Error;
};
struct MismatchedTestSets : Error {
    using Error::Error;
};
struct MismatchedCells : Error {
    using Error::Error;
};

// statistics
struct EmptyDataset : Error {
    using Error::Error;
};
struct DegenerateVariance : Error {
    using Error::Error;
};
struct NoPositives : Error {
    using Error::Error;
};
struct NoNegatives : Error {
    using Error::Error;
};

// pipeline
struct ConfigError : Error {
    using Error::Error;
};
struct ManifestCorrupt : Error {
    using Error::Error;
};

}  // namespace crossim
