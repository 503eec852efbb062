#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pdkkit {

enum class ErrorKind {
    NotAVariant,
    UnknownExtension,
    InvalidExtensionSet,
    UnplaceableExtension,
    UnknownMnemonic,
    OperandOutOfRange,
    UnallocatedOpcode,
    MapFormat,
    SyntaxError,
    UndefinedSymbol,
    DuplicateSymbol,
    ProgramMemoryOverflow,
    ImageFormat,
    TooManyCores,
    ImageVariantMismatch,
    DataAddressOutOfRange,
    UnsupportedCombination,
    OverlappingRanges,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::NotAVariant: return "NotAVariant";
    case ErrorKind::UnknownExtension: return "UnknownExtension";
    case ErrorKind::InvalidExtensionSet: return "InvalidExtensionSet";
    case ErrorKind::UnplaceableExtension: return "UnplaceableExtension";
    case ErrorKind::UnknownMnemonic: return "UnknownMnemonic";
    case ErrorKind::OperandOutOfRange: return "OperandOutOfRange";
    case ErrorKind::UnallocatedOpcode: return "UnallocatedOpcode";
    case ErrorKind::MapFormat: return "MapFormat";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UndefinedSymbol: return "UndefinedSymbol";
    case ErrorKind::DuplicateSymbol: return "DuplicateSymbol";
    case ErrorKind::ProgramMemoryOverflow: return "ProgramMemoryOverflow";
    case ErrorKind::ImageFormat: return "ImageFormat";
    case ErrorKind::TooManyCores: return "TooManyCores";
    case ErrorKind::ImageVariantMismatch: return "ImageVariantMismatch";
    case ErrorKind::DataAddressOutOfRange: return "DataAddressOutOfRange";
    case ErrorKind::UnsupportedCombination: return "UnsupportedCombination";
    case ErrorKind::OverlappingRanges: return "OverlappingRanges";
    }
    return "Error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by build_map when no free run can host an extension.
class UnplaceableExtension : public Error {
public:
    UnplaceableExtension(std::string ext, std::uint32_t needed, std::uint32_t widest)
        : Error(ErrorKind::UnplaceableExtension,
                "cannot place extension " + ext + ": needs an aligned run of " +
                    std::to_string(needed) + " opcodes, widest gap is " + std::to_string(widest)),
          extension(std::move(ext)), needed_width(needed), widest_gap(widest) {}

    std::string extension;
    std::uint32_t needed_width;
    std::uint32_t widest_gap;
};

/// Assembler diagnostic; always carries the 1-based source line.
class SourceError : public Error {
public:
    SourceError(ErrorKind kind, int line, const std::string& reason)
        : Error(kind, "line " + std::to_string(line) + ": " + reason), line(line), reason(reason) {}

    int line;
    std::string reason;
};

} // namespace pdkkit
