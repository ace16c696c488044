#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace roba {

// Writes to a sibling temporary file and renames it over path, so readers see
// either the old content or the complete new content. Throws Error(kIo).
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);

std::string ReadFile(const std::filesystem::path& path);

}  // namespace roba
