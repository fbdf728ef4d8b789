#pragma once

#include <stdexcept>
#include <string>

namespace mindprint {

// Base class for all engine errors so callers can catch one type at the CLI
// boundary and map to exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (bad JSON, wrong format tag, wrong types).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Input parsed but violates a schema or domain invariant.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// An estimator was asked to fit fewer observations than its stated floor.
class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};

// Filesystem failure (missing file, unwritable path).
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Append-only ledger is internally inconsistent; refuse to touch it.
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& msg) : Error(msg) {}
};

// Profiles cannot be compared (e.g. different battery versions).
class IncomparableProfilesError : public Error {
public:
    explicit IncomparableProfilesError(const std::string& msg) : Error(msg) {}
};

} // namespace mindprint
