#pragma once

#include <string>
#include <string_view>

namespace instructforge {

// Where a candidate text came from.
enum class SourceKind { original, rewriter, fusion };

std::string_view to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view text);

}  // namespace instructforge
