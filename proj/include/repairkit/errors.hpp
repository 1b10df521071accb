#pragma once

#include <stdexcept>
#include <string>

namespace repairkit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// scenario_store
struct MissingManifest : Error { using Error::Error; };
struct DanglingSourceReference : Error { using Error::Error; };
struct OracleOutOfRange : Error { using Error::Error; };
struct MultiFilePatch : Error { using Error::Error; };
struct PatchDoesNotApply : Error { using Error::Error; };
struct EmptyPatch : Error { using Error::Error; };

// bug_ingest
struct MalformedReport : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct NoErrorHeader : Error { using Error::Error; };
struct NoFrameInTarget : Error { using Error::Error; };

// prompt_engine
struct SpanOutsideFile : Error { using Error::Error; };
struct UnsupportedCommentStyle : Error { using Error::Error; };
struct BlankCode : Error { using Error::Error; };

// context_reducer
struct CannotFit : Error { using Error::Error; };

// model_gateway
struct ProviderUnavailable : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct RateLimited : Error { using Error::Error; };

// patch_consolidator
struct EmptySuggestion : Error { using Error::Error; };

// evaluation_harness
struct SandboxSetupFailure : Error { using Error::Error; };
struct AnalyzerUnavailable : Error { using Error::Error; };

// cli
struct UsageError : Error { using Error::Error; };

}  // namespace repairkit
