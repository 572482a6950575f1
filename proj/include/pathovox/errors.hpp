#pragma once

#include <stdexcept>
#include <string>

namespace pathovox {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- audio ingestion ---
class MalformedHeader : public Error { public: using Error::Error; };
class UnsupportedFormat : public Error { public: using Error::Error; };
class EmptyAudio : public Error { public: using Error::Error; };
class InvalidLength : public Error { public: using Error::Error; };
class TooShort : public Error { public: using Error::Error; };

// --- engine ---
class ShapeMismatch : public Error { public: using Error::Error; };
class NonFinite : public Error { public: using Error::Error; };
class NonFiniteGradient : public NonFinite { public: using NonFinite::NonFinite; };

// --- configuration / datasets ---
class InvalidConfig : public Error { public: using Error::Error; };
class MalformedRow : public Error { public: using Error::Error; };
class UnknownLabel : public Error { public: using Error::Error; };
class EmptyClass : public Error { public: using Error::Error; };
class InsufficientHealthy : public Error { public: using Error::Error; };
class EmptyMatrix : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class CheckpointError : public Error { public: using Error::Error; };

/// Wraps failures from processing a particular corpus file; the message
/// always names the file that failed.
class IngestError : public Error { public: using Error::Error; };

}  // namespace pathovox
