#pragma once

#include <string>
#include <string_view>

namespace sphereflow {

// Writes to a temporary sibling and renames, so readers never see a partial file.
void atomic_write(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

// Shortest decimal form that round-trips is not required; 17 significant
// digits always round-trips a double.
std::string format_double(double x);
double parse_double(std::string_view s);

std::string sha1_hex(std::string_view data);
// Content id in the style of git blob hashes.
std::string git_blob_id(std::string_view content);

}  // namespace sphereflow
