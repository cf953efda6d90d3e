#pragma once

#include <string>
#include <vector>

namespace evjrs {

// SHA-256 hex digest of a byte string.
std::string sha256_hex(const std::string& bytes);

// Digest of a file's contents. Throws Error(io) if unreadable.
std::string sha256_file(const std::string& path);

// Digest of a directory: sha256 over the sorted list of
// "<relative path>\0<file digest>\n" entries of all regular files.
std::string sha256_dir(const std::string& dir);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace evjrs
