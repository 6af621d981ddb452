#pragma once

#include <stdexcept>
#include <string>

namespace cota {

enum class ErrorKind {
    CycleDetected,
    UnknownParent,
    UnknownVariable,
    ValueOutOfDomain,
    InvalidModel,
    DomainTooLarge,
    PosetTooLarge,
    NotTotal,
    NotSurjective,
    NotOrderPreserving,
    SampleOutOfDomain,
    InvalidAlignment,
    NotComparable,
    ShapeMismatch,
    LengthMismatch,
    EmptyVector,
    NoConvergence,
    ZeroMassMarginal,
    SizeExceeded,
    EmptyList,
    DomainMismatch,
    InsufficientPairs,
    MissingColumn,
    EmptyClass,
    SchemaMismatch,
    EmptyFile,
    InvalidWeights,
    InvalidConfig,
    ParseError,
    Io,
};

const char* kind_name(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(std::string(kind_name(kind)) + ": " + msg), kind_(kind), message_(msg) {}
    ErrorKind kind() const { return kind_; }
    const std::string& message() const { return message_; }  // without the kind prefix

private:
    ErrorKind kind_;
    std::string message_;
};

}  // namespace cota
