#pragma once

#include <stdexcept>
#include <string>

namespace printmatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (manifest, PGM, PMFV1, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

/// An id referenced somewhere does not resolve.
class ReferenceError : public Error {
public:
    ReferenceError(const std::string& what, std::string id)
        : Error(what), id_(std::move(id)) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

/// A required per-item input (annotation, mask file, cached vector) is absent.
class MissingInputError : public ReferenceError {
public:
    using ReferenceError::ReferenceError;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace printmatch
