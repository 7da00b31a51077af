#pragma once

#include <stdexcept>
#include <string>

namespace geofb {

// Every library failure derives from Error. The kind lets callers (the CLI
// in particular) map failures to exit codes without RTTI chains.
enum class ErrorKind {
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kUnknownDType,
  kTruncatedPayload,
  kPayloadMismatch,
  kDimension,
  kInvalidArgument,
  kDomain,
  kEmptyMask,
  kEmptyInput,
  kBatch,
  kPlacement,
  kHorizon,
  kNoLanes,
  kFit,
  kDegenerate,
  kRange,
  kParse,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define GEOFB_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

GEOFB_DEFINE_ERROR(BadMagicError, kBadMagic)
GEOFB_DEFINE_ERROR(UnsupportedVersionError, kUnsupportedVersion)
GEOFB_DEFINE_ERROR(UnknownDTypeError, kUnknownDType)
GEOFB_DEFINE_ERROR(TruncatedPayloadError, kTruncatedPayload)
GEOFB_DEFINE_ERROR(PayloadMismatchError, kPayloadMismatch)
GEOFB_DEFINE_ERROR(DimensionError, kDimension)
GEOFB_DEFINE_ERROR(InvalidArgumentError, kInvalidArgument)
GEOFB_DEFINE_ERROR(DomainError, kDomain)
GEOFB_DEFINE_ERROR(EmptyMaskError, kEmptyMask)
GEOFB_DEFINE_ERROR(EmptyInputError, kEmptyInput)
GEOFB_DEFINE_ERROR(BatchError, kBatch)
GEOFB_DEFINE_ERROR(PlacementError, kPlacement)
GEOFB_DEFINE_ERROR(HorizonError, kHorizon)
GEOFB_DEFINE_ERROR(NoLanesError, kNoLanes)
GEOFB_DEFINE_ERROR(FitError, kFit)
GEOFB_DEFINE_ERROR(DegenerateError, kDegenerate)
GEOFB_DEFINE_ERROR(RangeError, kRange)
GEOFB_DEFINE_ERROR(ParseError, kParse)

#undef GEOFB_DEFINE_ERROR

// I/O failures carry the offending path and the OS cause separately.
class IoError : public Error {
 public:
  IoError(std::string path, std::string cause)
      : Error(ErrorKind::kIo, path + ": " + cause),
        path_(std::move(path)),
        cause_(std::move(cause)) {}
  const std::string& path() const noexcept { return path_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  std::string path_;
  std::string cause_;
};

}  // namespace geofb
