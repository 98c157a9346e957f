#include "bwsq/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include "bwsq/error.hpp"

namespace bwsq::unicode {

namespace {

icu::UnicodeString from_utf8(std::string_view s) {
    return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string to_utf8(const icu::UnicodeString& s) {
    std::string out;
    s.toUTF8String(out);
    return out;
}

bool is_separator(UChar32 c) {
    return u_isUWhiteSpace(c) || u_ispunct(c);
}

}  // namespace

std::string trim(std::string_view utf8) {
    const auto s = from_utf8(utf8);
    int32_t begin = 0;
    int32_t end = s.length();
    while (begin < end) {
        const UChar32 c = s.char32At(begin);
        if (!u_isUWhiteSpace(c)) break;
        begin = s.moveIndex32(begin, 1);
    }
    while (end > begin) {
        const int32_t prev = s.moveIndex32(end, -1);
        if (!u_isUWhiteSpace(s.char32At(prev))) break;
        end = prev;
    }
    return to_utf8(s.tempSubStringBetween(begin, end));
}

std::string nfc(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
    const auto normalized = normalizer->normalize(from_utf8(utf8), status);
    if (U_FAILURE(status)) throw Error("NFC normalization failed");
    return to_utf8(normalized);
}

std::string lower(std::string_view utf8) {
    auto s = from_utf8(utf8);
    s.toLower(icu::Locale::getRoot());
    return to_utf8(s);
}

std::vector<std::string> tokenize(std::string_view utf8) {
    auto s = from_utf8(utf8);
    s.toLower(icu::Locale::getRoot());

    std::vector<std::string> tokens;
    int32_t start = -1;
    for (int32_t i = 0; i < s.length(); i = s.moveIndex32(i, 1)) {
        if (is_separator(s.char32At(i))) {
            if (start >= 0) tokens.push_back(to_utf8(s.tempSubStringBetween(start, i)));
            start = -1;
        } else if (start < 0) {
            start = i;
        }
    }
    if (start >= 0) tokens.push_back(to_utf8(s.tempSubStringBetween(start, s.length())));
    return tokens;
}

}  // namespace bwsq::unicode
