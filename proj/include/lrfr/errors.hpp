#pragma once

#include <stdexcept>
#include <string>

namespace lrfr {

enum class Errc {
    NotSquare,
    NotFinite,
    NotSymmetric,
    NotPsd,
    EigFailure,
    ShapeMismatch,
    UnknownTask,
    InvalidArchitecture,
    SingularBatch,
    EmptyDataset,
    InvalidK,
    OutOfOrderTask,
    IncompleteMatrix,
    BadMagic,
    TruncatedFile,
    InsufficientClasses,
    InvalidSpec,
    InvalidConfig,
    IoError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

inline const char* errc_name(Errc code) {
    switch (code) {
        case Errc::NotSquare: return "NotSquare";
        case Errc::NotFinite: return "NotFinite";
        case Errc::NotSymmetric: return "NotSymmetric";
        case Errc::NotPsd: return "NotPsd";
        case Errc::EigFailure: return "EigFailure";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::UnknownTask: return "UnknownTask";
        case Errc::InvalidArchitecture: return "InvalidArchitecture";
        case Errc::SingularBatch: return "SingularBatch";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::InvalidK: return "InvalidK";
        case Errc::OutOfOrderTask: return "OutOfOrderTask";
        case Errc::IncompleteMatrix: return "IncompleteMatrix";
        case Errc::BadMagic: return "BadMagic";
        case Errc::TruncatedFile: return "TruncatedFile";
        case Errc::InsufficientClasses: return "InsufficientClasses";
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace lrfr
