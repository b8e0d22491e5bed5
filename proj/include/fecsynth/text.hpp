#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fecsynth::text {

/// ASCII-only lowercasing; bytes >= 0x80 pass through untouched.
std::string lowercase_ascii(std::string_view s);

std::string trim(std::string_view s);

/// Split on runs of ASCII whitespace.
std::vector<std::string> whitespace_tokens(std::string_view s);

/// Tokenization used by the edit metrics: every ASCII character that is
/// neither alphanumeric nor whitespace becomes a standalone token, ASCII
/// letters are lowercased, bytes >= 0x80 count as word characters, then the
/// result is split on whitespace.
std::vector<std::string> metric_tokens(std::string_view s);

/// Tokenization used by the retriever: lowercase ASCII letters, split on any
/// byte that is not an ASCII letter or digit.
std::vector<std::string> bm25_tokens(std::string_view s);

/// Unicode NFC normalization (ICU). Invalid UTF-8 is returned unchanged.
std::string nfc(std::string_view s);

/// Canonical form for the identity check: NFC, ASCII lowercase, whitespace
/// collapsed to single spaces, outer whitespace and any trailing run of ASCII
/// punctuation removed.
std::string identity_normalize(std::string_view s);

/// 2*LCS(a,b) / (|a|+|b|); 1.0 when both sequences are empty.
double lcs_ratio(const std::vector<std::string>& a, const std::vector<std::string>& b);

std::string sha256_hex(std::string_view data);

/// Digest of a file's raw bytes. Throws UnreadableFile.
std::string sha256_file_hex(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Write via a temp file in the same directory followed by an atomic rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace fecsynth::text
