#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "draw3/sketch_text.hpp"
#include "oracles.hpp"

using draw3::ParseError;
using draw3::ParseErrorKind;
using draw3::ParsedDocument;
using draw3::ParserLimits;
using draw3::Sketch;
using draw3::WarningKind;

namespace {

ParsedDocument ok(const draw3::ParseResult& r) {
    REQUIRE(std::holds_alternative<ParsedDocument>(r));
    return std::get<ParsedDocument>(r);
}

ParseErrorKind err_kind(const draw3::ParseResult& r) {
    REQUIRE(std::holds_alternative<ParseError>(r));
    return std::get<ParseError>(r).kind;
}

bool same_sketch(const Sketch& a, const Sketch& b) {
    if (a.curve_count() != b.curve_count()) return false;
    for (std::size_t i = 0; i < a.curve_count(); ++i)
        for (int p = 0; p < 4; ++p)
            if (!(a.curves[i].control(p) == b.curves[i].control(p))) return false;
    return true;
}

const char* kOneCurve =
    "<curves>[[[0.1,0.2,0.3],[0.4,0.5,0.6],[-0.1,-0.2,-0.3],[0.0,0.0,0.7]]]</curves>";

}  // namespace

TEST_CASE("parses a minimal valid document and ignores surrounding prose") {
    std::string text = std::string("Sure, here you go:\n") + kOneCurve + "\nHope that helps!";
    const auto& doc = ok(draw3::parse(text));
    REQUIRE(doc.sketch.curve_count() == 1);
    CHECK(doc.sketch.curves[0].p0 == draw3::Point3{0.1, 0.2, 0.3});
    CHECK(doc.sketch.curves[0].p3 == draw3::Point3{0.0, 0.0, 0.7});
    CHECK(doc.warnings.empty());
}

TEST_CASE("whitespace and trailing commas are tolerated") {
    std::string text =
        "<curves>[\n  [ [0.1, 0.2, 0.3,], [0.4,0.5,0.6], [0.1,0.1,0.1], [0.2,0.2,0.2,] ],\n]"
        "</curves>";
    const auto& doc = ok(draw3::parse(text));
    CHECK(doc.sketch.curve_count() == 1);
}

TEST_CASE("error taxonomy") {
    CHECK(err_kind(draw3::parse("no block at all")) == ParseErrorKind::MissingDelimiter);
    CHECK(err_kind(draw3::parse("<curves>[[[0,0,0],[0,0,0],[0,0,0],[0,0,0]]]")) ==
          ParseErrorKind::MissingDelimiter);
    CHECK(err_kind(draw3::parse(std::string(kOneCurve) + kOneCurve)) ==
          ParseErrorKind::MultipleDelimiters);
    CHECK(err_kind(draw3::parse("<curves>[[[0,0,0],[0,0,0],[0,0,0],[0,0,0]]</curves>")) ==
          ParseErrorKind::BracketMismatch);
    CHECK(err_kind(draw3::parse("<curves>[[[0,0,0],[0,0,0],[0,0,0]]]</curves>")) ==
          ParseErrorKind::ArityError);
    CHECK(err_kind(draw3::parse("<curves>[[[0,0],[0,0,0],[0,0,0],[0,0,0]]]</curves>")) ==
          ParseErrorKind::ArityError);
    CHECK(err_kind(draw3::parse("<curves>[[[0,0,0,0],[0,0,0],[0,0,0],[0,0,0]]]</curves>")) ==
          ParseErrorKind::ArityError);
    CHECK(err_kind(draw3::parse("<curves>[[[0,0,1e],[0,0,0],[0,0,0],[0,0,0]]]</curves>")) ==
          ParseErrorKind::NonNumericToken);
    CHECK(err_kind(draw3::parse("<curves>[[[0,0,1e400],[0,0,0],[0,0,0],[0,0,0]]]</curves>")) ==
          ParseErrorKind::NonNumericToken);
    CHECK(err_kind(draw3::parse("<curves>[]</curves>")) == ParseErrorKind::EmptySketch);
    CHECK(err_kind(draw3::parse("<curves>x = [[0,0,0]]</curves>")) ==
          ParseErrorKind::ForbiddenContent);
    CHECK(err_kind(draw3::parse("<curves># comment\n[]</curves>")) ==
          ParseErrorKind::ForbiddenContent);
    ParserLimits strict;
    strict.strict = true;
    CHECK(err_kind(draw3::parse("<curves>[[[0,0,0.9],[0,0,0],[0,0,0],[0,0,0]]]</curves>",
                                strict)) == ParseErrorKind::OutOfRange);
}

TEST_CASE("lenient mode clamps out-of-range coordinates and warns") {
    const auto& doc =
        ok(draw3::parse("<curves>[[[0.95,0,0],[0.4,0,0],[-0.9,0,0],[0,0.2,0]]]</curves>"));
    CHECK(doc.sketch.curves[0].p0.x == 0.8);
    CHECK(doc.sketch.curves[0].p2.x == -0.8);
    REQUIRE(doc.warnings.size() == 1);
    CHECK(doc.warnings[0].kind == WarningKind::NearBoundary);
    CHECK(doc.warnings[0].curve_index == 0);
}

TEST_CASE("degenerate curves warn but still parse") {
    const auto& doc = ok(
        draw3::parse("<curves>[[[0.1,0.1,0.1],[0.1,0.1,0.1],[0.1,0.1,0.1],[0.1,0.1,0.1]],"
                     "[[0,0,0],[0.2,0,0],[0.4,0,0],[0.6,0,0]]]</curves>"));
    REQUIRE(doc.sketch.curve_count() == 2);
    REQUIRE(doc.warnings.size() == 1);
    CHECK(doc.warnings[0].kind == WarningKind::DegenerateCurve);
    CHECK(doc.warnings[0].curve_index == 0);
}

TEST_CASE("excessive curve counts warn past the configured limit") {
    ParserLimits limits;
    limits.max_curves = 2;
    std::string body;
    for (int i = 0; i < 3; ++i) {
        if (i) body += ',';
        body += "[[0,0,0],[0.1,0,0],[0.2,0,0],[0.3,0,0]]";
    }
    const auto& doc = ok(draw3::parse("<curves>[" + body + "]</curves>", limits));
    CHECK(doc.sketch.curve_count() == 3);
    REQUIRE(doc.warnings.size() == 1);
    CHECK(doc.warnings[0].kind == WarningKind::ExcessiveCurveCount);
}

TEST_CASE("serialize emits the canonical compact form") {
    Sketch s;
    s.curves.push_back({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, {-0.1, -0.2, -0.3}, {0, 0, 0.7}});
    CHECK(draw3::serialize(s) ==
          "<curves>[[[0.1000,0.2000,0.3000],[0.4000,0.5000,0.6000],"
          "[-0.1000,-0.2000,-0.3000],[0.0000,0.0000,0.7000]]]</curves>");
    CHECK(draw3::serialize(Sketch{}) == "<curves>[]</curves>");
    CHECK(draw3::serialize(s, 1) ==
          "<curves>[[[0.1,0.2,0.3],[0.4,0.5,0.6],[-0.1,-0.2,-0.3],[0.0,0.0,0.7]]]</curves>");
}

TEST_CASE("round trip is exact on 1000 random quantized sketches") {
    std::mt19937 rng(123);
    std::uniform_int_distribution<int> ncurves(1, 8);
    for (int iter = 0; iter < 1000; ++iter) {
        Sketch raw;
        int n = ncurves(rng);
        for (int i = 0; i < n; ++i) raw.curves.push_back(oracle::random_curve(rng));
        // First parse quantizes to the canonical 4-decimal grid.
        const auto& quantized = ok(draw3::parse(draw3::serialize(raw))).sketch;
        std::string text = draw3::serialize(quantized);
        const auto& reparsed = ok(draw3::parse(text)).sketch;
        CHECK(same_sketch(quantized, reparsed));
        CHECK(draw3::serialize(reparsed) == text);
    }
}

TEST_CASE("span covers the block content") {
    std::string text = std::string("prefix ") + kOneCurve;
    const auto& doc = ok(draw3::parse(text));
    std::string content = text.substr(doc.span_begin, doc.span_end - doc.span_begin);
    CHECK(content.front() == '[');
    CHECK(content.back() == ']');
}

TEST_CASE("fuzzer finds no crashes and every input gets exactly one outcome") {
    std::mt19937 rng(2024);
    std::string base = kOneCurve;
    std::uniform_int_distribution<int> pos_dist(0, static_cast<int>(base.size()) - 1);
    std::uniform_int_distribution<int> op_dist(0, 3);
    std::uniform_int_distribution<int> char_dist(32, 126);
    auto start = std::chrono::steady_clock::now();
    int parsed_count = 0, error_count = 0;
    for (int iter = 0; iter < 100000; ++iter) {
        std::string s = base;
        int edits = 1 + (iter % 4);
        for (int e = 0; e < edits; ++e) {
            int p = pos_dist(rng) % static_cast<int>(s.size() + 1);
            switch (op_dist(rng)) {
                case 0: s.insert(s.begin() + p, static_cast<char>(char_dist(rng))); break;
                case 1:
                    if (!s.empty()) s.erase(s.begin() + (p % s.size()));
                    break;
                case 2:
                    if (!s.empty()) s[p % s.size()] = static_cast<char>(char_dist(rng));
                    break;
                case 3: s.insert(p, "[0.1,"); break;
            }
        }
        auto result = draw3::parse(s);
        if (std::holds_alternative<ParsedDocument>(result))
            ++parsed_count;
        else
            ++error_count;
        // brackets_match must also be total on arbitrary input.
        draw3::brackets_match(s);
    }
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    CHECK(parsed_count + error_count == 100000);
    CHECK(parsed_count > 0);
    CHECK(error_count > 0);
    CHECK(elapsed.count() < 30.0);
}

TEST_CASE("bracket match rate counts block presence plus balance") {
    std::vector<std::string> sources = {
        kOneCurve,                                                    // matched
        "<curves>[[[0,0,0],[0,0],[0],[0,0,0]]]</curves>",             // arity error, still matched
        "<curves>[[[0,0,0],[0,0,0],[0,0,0],[0,0,0]]</curves>",        // unbalanced
        "no block here",                                              // missing
    };
    CHECK(draw3::bracket_match_rate(sources) == doctest::Approx(0.5));
    CHECK(draw3::brackets_match(sources[0]));
    CHECK(draw3::brackets_match(sources[1]));
    CHECK_FALSE(draw3::brackets_match(sources[2]));
    CHECK_FALSE(draw3::brackets_match(sources[3]));
}

TEST_CASE("error kind names are stable") {
    CHECK(std::string(draw3::to_string(ParseErrorKind::MissingDelimiter)) == "MissingDelimiter");
    CHECK(std::string(draw3::to_string(ParseErrorKind::BracketMismatch)) == "BracketMismatch");
    CHECK(std::string(draw3::to_string(WarningKind::DegenerateCurve)) == "DegenerateCurve");
}
