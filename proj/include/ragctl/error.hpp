#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragctl {

enum class ErrorCode {
    // retrieval_index
    DuplicateId,
    EmptyCorpus,
    OrdinalOutOfRange,
    Io,
    FormatVersionMismatch,
    // generator_gateway
    BackendUnavailable,
    BackendRejected,
    ScriptExhausted,
    // planner_engine
    GeneratorFailure,
    EmptyQuery,
    BudgetExhausted,
    NotAtBudget,
    InvalidConfig,
    // metrics_suite
    EmptyReferences,
    EmptyRows,
    EmptyInput,
    // supervision_forge
    TeacherFailure,
    EmptyTeacherQuery,
    InconsistentKind,
    // reward_kernel
    EmptyReference,
    InvalidTarget,
    // harness
    IdMismatch,
    ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::OrdinalOutOfRange: return "OrdinalOutOfRange";
        case ErrorCode::Io: return "Io";
        case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::BackendRejected: return "BackendRejected";
        case ErrorCode::ScriptExhausted: return "ScriptExhausted";
        case ErrorCode::GeneratorFailure: return "GeneratorFailure";
        case ErrorCode::EmptyQuery: return "EmptyQuery";
        case ErrorCode::BudgetExhausted: return "BudgetExhausted";
        case ErrorCode::NotAtBudget: return "NotAtBudget";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::EmptyReferences: return "EmptyReferences";
        case ErrorCode::EmptyRows: return "EmptyRows";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::TeacherFailure: return "TeacherFailure";
        case ErrorCode::EmptyTeacherQuery: return "EmptyTeacherQuery";
        case ErrorCode::InconsistentKind: return "InconsistentKind";
        case ErrorCode::EmptyReference: return "EmptyReference";
        case ErrorCode::InvalidTarget: return "InvalidTarget";
        case ErrorCode::IdMismatch: return "IdMismatch";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ragctl
