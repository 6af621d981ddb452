#include "cota/error.hpp"

namespace cota {

const char* kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::CycleDetected: return "CycleDetected";
        case ErrorKind::UnknownParent: return "UnknownParent";
        case ErrorKind::UnknownVariable: return "UnknownVariable";
        case ErrorKind::ValueOutOfDomain: return "ValueOutOfDomain";
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::DomainTooLarge: return "DomainTooLarge";
        case ErrorKind::PosetTooLarge: return "PosetTooLarge";
        case ErrorKind::NotTotal: return "NotTotal";
        case ErrorKind::NotSurjective: return "NotSurjective";
        case ErrorKind::NotOrderPreserving: return "NotOrderPreserving";
        case ErrorKind::SampleOutOfDomain: return "SampleOutOfDomain";
        case ErrorKind::InvalidAlignment: return "InvalidAlignment";
        case ErrorKind::NotComparable: return "NotComparable";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::EmptyVector: return "EmptyVector";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::ZeroMassMarginal: return "ZeroMassMarginal";
        case ErrorKind::SizeExceeded: return "SizeExceeded";
        case ErrorKind::EmptyList: return "EmptyList";
        case ErrorKind::DomainMismatch: return "DomainMismatch";
        case ErrorKind::InsufficientPairs: return "InsufficientPairs";
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::EmptyClass: return "EmptyClass";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::EmptyFile: return "EmptyFile";
        case ErrorKind::InvalidWeights: return "InvalidWeights";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace cota
