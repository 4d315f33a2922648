#pragma once

#include <string>

namespace mldf {

std::string read_file(const std::string& path);

// Writes to a sibling temp file, then renames over the target, so readers
// never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace mldf
