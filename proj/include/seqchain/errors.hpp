#pragma once

#include <stdexcept>
#include <string>

namespace seqchain {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ParameterOutOfRange : public Error {
public:
    using Error::Error;
};

/// Thrown when an operation requires an irreducible kernel and the
/// support digraph is not strongly connected.
class ReducibleChain : public Error {
public:
    using Error::Error;
};

/// Thrown when an entry distribution is requested but part of the
/// probability mass never reaches the target set.
class UnreachableSet : public Error {
public:
    using Error::Error;
};

class DegenerateInput : public Error {
public:
    using Error::Error;
};

class CertificateMismatch : public Error {
public:
    using Error::Error;
};

} // namespace seqchain
