#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace motab {

// Counter-based generator: every draw is a pure function of the evolving
// state, so keyed streams are reproducible regardless of scheduling.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// The first word is avalanched before the second is folded in. Combining
// raw words with shift-xor collides for nearby (a, b) pairs, which made
// adjacent seeds share about half of their derived streams.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    SplitMix64 g(SplitMix64(a).next() ^ b);
    return g.next();
}

// Stream key for one generation step of one sample of one question.
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view question_id,
                                 int sample_index, int step_index) {
    std::uint64_t h = mix64(run_seed, fnv1a64(question_id));
    h = mix64(h, static_cast<std::uint64_t>(sample_index) + 0x51ed2701ULL);
    h = mix64(h, static_cast<std::uint64_t>(step_index) + 0x2545f491ULL);
    return h;
}

// 17 significant digits: enough to make double -> text -> double lossless.
inline std::string format_double17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string_view trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) ++i;
        size_t j = i;
        while (j < s.size() && !(s[j] == ' ' || s[j] == '\t' || s[j] == '\r' || s[j] == '\n')) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::vector<std::string> split_by(std::string_view text, std::string_view sep) {
    std::vector<std::string> out;
    if (sep.empty()) {
        out.emplace_back(text);
        return out;
    }
    size_t pos = 0;
    while (true) {
        size_t hit = text.find(sep, pos);
        if (hit == std::string_view::npos) {
            out.emplace_back(text.substr(pos));
            return out;
        }
        out.emplace_back(text.substr(pos, hit - pos));
        pos = hit + sep.size();
    }
}

inline size_t count_occurrences(std::string_view text, std::string_view needle) {
    if (needle.empty()) return 0;
    size_t n = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string_view::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

inline std::string to_hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace motab
