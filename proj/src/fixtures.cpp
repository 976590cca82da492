#include "motab/fixtures.hpp"

#include <cstdio>
#include <stdexcept>

namespace motab::fixtures {

namespace {

const std::vector<std::string> kStepVocab = {"q", "a", "b", "c", "d", "e",
                                             "f", "g", "n", "x", "%%", "<eot>"};
const std::vector<std::string> kRiskyVocab = {"q", "a", "b", "c", "z", "%%", "<eot>"};

TabularPolicy make_chain() {
    TabularPolicy p({"q", "a", "b", "c", "%%", "<eot>"}, 2, 0.0, "<eot>", "chain");
    p.set_rule({"q"}, {{"a", 1.0}});
    p.set_rule({"a"}, {{"%%", 1.0}});
    p.set_rule({"a", "%%"}, {{"b", 1.0}});
    p.set_rule({"b"}, {{"%%", 1.0}});
    p.set_rule({"b", "%%"}, {{"c", 1.0}});
    p.set_rule({"c"}, {{"<eot>", 1.0}});
    return p;
}

TabularPolicy make_delayed_student() {
    TabularPolicy p(kStepVocab, 2, 0.0, "<eot>", "delayed-error-student");
    p.set_rule({"q"}, {{"a", 1.0}});
    p.set_rule({"a"}, {{"%%", 1.0}});
    p.set_rule({"a", "%%"}, {{"b", 1.0}});
    p.set_rule({"b"}, {{"%%", 1.0}});
    p.set_rule({"b", "%%"}, {{"x", 1.0}});  // the weakly supported pick
    p.set_rule({"x"}, {{"%%", 1.0}});
    p.set_rule({"x", "%%"}, {{"d", 1.0}});
    p.set_rule({"d"}, {{"%%", 1.0}});
    p.set_rule({"d", "%%"}, {{"e", 1.0}});
    p.set_rule({"e"}, {{"%%", 1.0}});
    p.set_rule({"e", "%%"}, {{"f", 1.0}});
    p.set_rule({"f"}, {{"<eot>", 1.0}});
    return p;
}

// Step values along the student's path: 0.9, 0.9, 0.35, 0.4, then 0.1, with
// boundary entropies that keep steps 1-4 safe and fail step 5. The largest
// value drop is at step 3, so the correction restarts there (depth 2).
TabularPolicy make_delayed_teacher() {
    TabularPolicy p(kStepVocab, 2, 0.0, "<eot>", "delayed-error-teacher");
    p.set_rule({"q"}, {{"a", 0.9}, {"f", 0.05}, {"g", 0.05}});
    p.set_rule({"a"}, {{"%%", 1.0}});
    p.set_rule({"a", "%%"}, {{"b", 0.9}, {"f", 0.05}, {"g", 0.05}});
    p.set_rule({"b"}, {{"%%", 1.0}});
    p.set_rule({"b", "%%"}, {{"c", 0.6}, {"x", 0.35}, {"f", 0.05}});
    p.set_rule({"c"}, {{"%%", 1.0}});
    p.set_rule({"c", "%%"}, {{"n", 1.0}});
    p.set_rule({"x"}, {{"%%", 1.0}});
    p.set_rule({"x", "%%"}, {{"d", 0.4}, {"c", 0.2}, {"f", 0.2}, {"g", 0.2}});
    p.set_rule({"d"}, {{"%%", 1.0}});
    p.set_rule({"d", "%%"}, {{"f", 0.85}, {"e", 0.1}, {"g", 0.05}});
    p.set_rule({"e"}, {{"%%", 1.0}});
    p.set_rule({"n"}, {{"<eot>", 1.0}});
    return p;
}

TabularPolicy make_risky_student() {
    TabularPolicy p(kRiskyVocab, 2, 0.0, "<eot>", "risky-student");
    p.set_rule({"q"}, {{"a", 0.7}, {"z", 0.3}});
    p.set_rule({"a"}, {{"%%", 1.0}});
    p.set_rule({"a", "%%"}, {{"b", 1.0}});
    p.set_rule({"b"}, {{"%%", 1.0}});
    p.set_rule({"b", "%%"}, {{"c", 1.0}});
    p.set_rule({"c"}, {{"<eot>", 1.0}});
    p.set_rule({"z"}, {{"%%", 1.0}});
    p.set_rule({"z", "%%"}, {{"b", 1.0}});
    return p;
}

TabularPolicy make_risky_teacher() {
    TabularPolicy p(kRiskyVocab, 2, 0.0, "<eot>", "risky-teacher");
    p.set_rule({"q"}, {{"a", 0.95}, {"b", 0.04}, {"z", 0.01}});
    p.set_rule({"a"}, {{"%%", 1.0}});
    p.set_rule({"a", "%%"}, {{"b", 1.0}});
    p.set_rule({"b"}, {{"%%", 1.0}});
    p.set_rule({"b", "%%"}, {{"c", 1.0}});
    p.set_rule({"c"}, {{"<eot>", 1.0}});
    p.set_rule({"z"}, {{"%%", 1.0}});
    return p;
}

TabularPolicy make_lab_absorbing_student() {
    TabularPolicy p({"q", "g", "e"}, 1, 0.0, "", "lab-absorbing-student");
    p.set_rule({"q"}, {{"g", 1.0 - kAbsorbingErrorRate}, {"e", kAbsorbingErrorRate}});
    p.set_rule({"g"}, {{"g", 1.0 - kAbsorbingErrorRate}, {"e", kAbsorbingErrorRate}});
    p.set_rule({"e"}, {{"e", 1.0}});
    return p;
}

TabularPolicy make_lab_absorbing_teacher() {
    TabularPolicy p({"q", "g", "e"}, 1, 0.0, "", "lab-absorbing-teacher");
    p.set_rule({"q"}, {{"g", 1.0}});
    p.set_rule({"g"}, {{"g", 1.0}});
    p.set_rule({"e"}, {{"e", 1.0}});
    return p;
}

TabularPolicy make_lab_flawed_student() {
    TabularPolicy p({"q", "g", "h", "e"}, 1, 0.02, "", "lab-flawed-student");
    p.set_rule({"q"}, {{"g", 0.55}, {"h", 0.25}, {"e", 0.2}});
    p.set_rule({"g"}, {{"g", 0.6}, {"h", 0.3}, {"e", 0.1}});
    p.set_rule({"h"}, {{"g", 0.45}, {"h", 0.45}, {"e", 0.1}});
    p.set_rule({"e"}, {{"e", 1.0}});
    return p;
}

// No rule for context "e": the teacher has never seen the error token, so
// its next-token distribution there is the uniform fallback.
TabularPolicy make_lab_flawed_teacher() {
    TabularPolicy p({"q", "g", "h", "e"}, 1, 0.02, "", "lab-flawed-teacher");
    p.set_rule({"q"}, {{"g", 0.7}, {"h", 0.3}});
    p.set_rule({"g"}, {{"g", 0.7}, {"h", 0.3}});
    p.set_rule({"h"}, {{"g", 0.5}, {"h", 0.5}});
    return p;
}

const std::vector<std::string> kLabDelayedVocab = {"q", "a", "b", "c", "x",
                                                   "d", "e", "f", "g"};

TabularPolicy make_lab_delayed_student() {
    TabularPolicy p(kLabDelayedVocab, 1, 0.01, "", "lab-delayed-student");
    p.set_rule({"q"}, {{"a", 1.0}});
    p.set_rule({"a"}, {{"b", 1.0}});
    p.set_rule({"b"}, {{"x", 0.5}, {"c", 0.5}});
    p.set_rule({"c"}, {{"d", 1.0}});
    p.set_rule({"x"}, {{"d", 1.0}});
    p.set_rule({"d"}, {{"e", 0.8}, {"f", 0.2}});
    p.set_rule({"e"}, {{"f", 1.0}});
    p.set_rule({"f"}, {{"f", 1.0}});
    p.set_rule({"g"}, {{"g", 1.0}});
    return p;
}

TabularPolicy make_lab_delayed_teacher() {
    TabularPolicy p(kLabDelayedVocab, 1, 0.01, "", "lab-delayed-teacher");
    p.set_rule({"q"}, {{"a", 0.9}, {"f", 0.05}, {"g", 0.05}});
    p.set_rule({"a"}, {{"b", 0.9}, {"f", 0.05}, {"g", 0.05}});
    p.set_rule({"b"}, {{"c", 0.6}, {"x", 0.35}, {"f", 0.05}});
    p.set_rule({"c"}, {{"d", 1.0}});
    p.set_rule({"x"}, {{"d", 0.4}, {"c", 0.2}, {"f", 0.2}, {"g", 0.2}});
    p.set_rule({"d"}, {{"f", 0.85}, {"e", 0.1}, {"g", 0.05}});
    // Contexts e/f/g undefined: the breach lands the teacher fully OOD.
    return p;
}

TabularPolicy make_smoothed8_teacher() {
    TabularPolicy p({"q", "a", "b", "c", "d", "e", "f", "g"}, 1, 0.01, "", "smoothed8-teacher");
    p.set_rule({"q"}, {{"a", 1.0}});
    p.set_rule({"a"}, {{"b", 1.0}});
    p.set_rule({"b"}, {{"c", 1.0}});
    p.set_rule({"c"}, {{"d", 1.0}});
    p.set_rule({"d"}, {{"a", 1.0}});
    return p;
}

}  // namespace

TabularPolicy fixture(const std::string& name) {
    if (name == "chain") return make_chain();
    if (name == "delayed-error-student") return make_delayed_student();
    if (name == "delayed-error-teacher") return make_delayed_teacher();
    if (name == "risky-student") return make_risky_student();
    if (name == "risky-teacher") return make_risky_teacher();
    if (name == "lab-absorbing-student") return make_lab_absorbing_student();
    if (name == "lab-absorbing-teacher") return make_lab_absorbing_teacher();
    if (name == "lab-flawed-student") return make_lab_flawed_student();
    if (name == "lab-flawed-teacher") return make_lab_flawed_teacher();
    if (name == "lab-delayed-student") return make_lab_delayed_student();
    if (name == "lab-delayed-teacher") return make_lab_delayed_teacher();
    if (name == "smoothed8-teacher") return make_smoothed8_teacher();
    throw std::invalid_argument("unknown fixture: " + name);
}

std::vector<std::string> fixture_names() {
    return {"chain",
            "delayed-error-student",
            "delayed-error-teacher",
            "risky-student",
            "risky-teacher",
            "lab-absorbing-student",
            "lab-absorbing-teacher",
            "lab-flawed-student",
            "lab-flawed-teacher",
            "lab-delayed-student",
            "lab-delayed-teacher",
            "smoothed8-teacher"};
}

std::vector<Question> fixture_questions(int count) {
    std::vector<Question> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 1; i <= count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "q%06d", i);
        out.push_back({buf, "q ", {}});
    }
    return out;
}

}  // namespace motab::fixtures
