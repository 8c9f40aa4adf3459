#pragma once

#include <stdexcept>
#include <string>

namespace sli {

// Base for all pipeline errors. CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

#define SLI_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

// feature files
SLI_DEFINE_ERROR(BadMagic);
SLI_DEFINE_ERROR(VersionUnsupported);
SLI_DEFINE_ERROR(ShapeMismatch);
SLI_DEFINE_ERROR(EmptyFeature);
SLI_DEFINE_ERROR(NonFiniteValue);
SLI_DEFINE_ERROR(ValueOutOfRange);
SLI_DEFINE_ERROR(IoFailure);
SLI_DEFINE_ERROR(FactorOutOfRange);

// catalog
SLI_DEFINE_ERROR(ParseError);
SLI_DEFINE_ERROR(DuplicateId);
SLI_DEFINE_ERROR(MissingFile);
SLI_DEFINE_ERROR(UnknownEnumValue);
SLI_DEFINE_ERROR(OverlappingAnnotations);
SLI_DEFINE_ERROR(NegativeDuration);

// backends
SLI_DEFINE_ERROR(TooShort);
SLI_DEFINE_ERROR(DegenerateProfile);
SLI_DEFINE_ERROR(LengthMismatch);
SLI_DEFINE_ERROR(DimensionMismatch);
SLI_DEFINE_ERROR(ZeroNorm);
SLI_DEFINE_ERROR(EmptyIndex);

// postprocess
SLI_DEFINE_ERROR(UnsortedInput);
SLI_DEFINE_ERROR(SingleClass);
SLI_DEFINE_ERROR(TooFewSamples);

// evaluation
SLI_DEFINE_ERROR(OverlappingSegments);
SLI_DEFINE_ERROR(UnknownConcert);

// synthesis
SLI_DEFINE_ERROR(DurationTooShort);
SLI_DEFINE_ERROR(CatalogTooSmall);

// pipeline
SLI_DEFINE_ERROR(EmptyCatalog);
SLI_DEFINE_ERROR(MissingResults);

#undef SLI_DEFINE_ERROR

} // namespace sli
