#include "fecsynth/text.hpp"

#include "fecsynth/errors.hpp"

#include <openssl/evp.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

namespace fecsynth::text {

namespace {

bool ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool ascii_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::vector<std::string> split_spaces(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (c == ' ') {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

} // namespace

std::string lowercase_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u >= 'A' && u <= 'Z') c = static_cast<char>(u - 'A' + 'a');
    }
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && ascii_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (ascii_space(c)) {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> metric_tokens(std::string_view s) {
    std::string expanded;
    expanded.reserve(s.size() * 2);
    for (unsigned char c : s) {
        if (c >= 0x80) {
            expanded.push_back(static_cast<char>(c));
        } else if (ascii_alnum(c)) {
            expanded.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
        } else if (ascii_space(c)) {
            expanded.push_back(' ');
        } else {
            expanded.push_back(' ');
            expanded.push_back(static_cast<char>(c));
            expanded.push_back(' ');
        }
    }
    return split_spaces(expanded);
}

std::vector<std::string> bm25_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (ascii_alnum(c)) {
            cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
        } else {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string nfc(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const UNormalizer2* norm = unorm2_getNFCInstance(&status);
    if (U_FAILURE(status)) return std::string(s);

    std::vector<UChar> utf16(s.size() + 1);
    int32_t len16 = 0;
    status = U_ZERO_ERROR;
    u_strFromUTF8(utf16.data(), static_cast<int32_t>(utf16.size()), &len16, s.data(),
                  static_cast<int32_t>(s.size()), &status);
    if (U_FAILURE(status)) return std::string(s);

    std::vector<UChar> normed(static_cast<size_t>(len16) * 3 + 16);
    status = U_ZERO_ERROR;
    int32_t normed_len = unorm2_normalize(norm, utf16.data(), len16, normed.data(),
                                          static_cast<int32_t>(normed.size()), &status);
    if (U_FAILURE(status)) return std::string(s);

    std::string out(static_cast<size_t>(normed_len) * 4 + 16, '\0');
    int32_t len8 = 0;
    status = U_ZERO_ERROR;
    u_strToUTF8(out.data(), static_cast<int32_t>(out.size()), &len8, normed.data(), normed_len,
                &status);
    if (U_FAILURE(status)) return std::string(s);
    out.resize(static_cast<size_t>(len8));
    return out;
}

std::string identity_normalize(std::string_view s) {
    std::string canon = lowercase_ascii(nfc(s));
    std::string collapsed;
    collapsed.reserve(canon.size());
    bool in_space = true;
    for (unsigned char c : canon) {
        if (ascii_space(c)) {
            if (!in_space) collapsed.push_back(' ');
            in_space = true;
        } else {
            collapsed.push_back(static_cast<char>(c));
            in_space = false;
        }
    }
    while (!collapsed.empty()) {
        unsigned char back = static_cast<unsigned char>(collapsed.back());
        if (ascii_space(back) || (back < 0x80 && !ascii_alnum(back))) {
            collapsed.pop_back();
        } else {
            break;
        }
    }
    return collapsed;
}

double lcs_ratio(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    double lcs = static_cast<double>(prev[b.size()]);
    return 2.0 * lcs / static_cast<double>(a.size() + b.size());
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
    static const char* hexdig = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hexdig[digest[i] >> 4]);
        out.push_back(hexdig[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file_hex(const std::filesystem::path& path) {
    return sha256_hex(read_file(path));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UnreadableFile("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw UnreadableFile("error while reading file: " + path.string());
    return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw UnreadableFile("cannot open file for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw UnreadableFile("error while writing file: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace fecsynth::text
