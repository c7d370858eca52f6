#pragma once

#include <stdexcept>
#include <string>

namespace cwdmd {

/// Base class for every error raised by the library. Subclasses carry no
/// payload beyond the message; callers dispatch on type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// dynsys
struct NonFiniteState : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct UnsupportedDimension : Error { using Error::Error; };
struct SingularResolvent : Error { using Error::Error; };

// wavelet
struct ZeroScale : Error { using Error::Error; };
struct EmptyScales : Error { using Error::Error; };
struct SignalTooShort : Error { using Error::Error; };
struct NotAdmissible : Error { using Error::Error; };
struct OutOfWindow : Error { using Error::Error; };

// observables
struct LengthMismatch : Error { using Error::Error; };
struct DtNotOnGrid : Error { using Error::Error; };

// edmd
struct ShapeMismatch : Error { using Error::Error; };
struct AllSingularValuesTruncated : Error { using Error::Error; };
struct EigenFailure : Error { using Error::Error; };
struct EmptySpectrum : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct ColumnMappingMissing : Error { using Error::Error; };
struct ZeroAnchor : Error { using Error::Error; };

// resolvent
struct SchemeMismatch : Error { using Error::Error; };
struct InvalidSpectralPoint : Error { using Error::Error; };
struct ZeroFrequency : Error { using Error::Error; };

// cli / experiment orchestration
struct ConfigInvalid : Error { using Error::Error; };

} // namespace cwdmd
