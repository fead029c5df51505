#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "draw3/geometry.hpp"

namespace draw3 {

enum class ParseErrorKind {
    MissingDelimiter,
    MultipleDelimiters,
    BracketMismatch,
    ArityError,
    NonNumericToken,
    OutOfRange,
    EmptySketch,
    ForbiddenContent,
};

const char* to_string(ParseErrorKind kind);

struct ParseError {
    ParseErrorKind kind;
    std::size_t position = 0;  // byte offset in the source text
    std::string detail;
};

enum class WarningKind {
    DegenerateCurve,
    ExcessiveCurveCount,
    NearBoundary,
};

const char* to_string(WarningKind kind);

struct Warning {
    WarningKind kind;
    std::size_t curve_index = 0;
};

struct ParserLimits {
    double bound = 0.8;        // coordinates must lie in [-bound, bound]
    std::size_t max_curves = 512;
    bool strict = false;       // strict: out-of-range is an error; lenient: clamp + warn
    double degeneracy_epsilon = kDefaultDegeneracyEpsilon;
};

struct ParsedDocument {
    Sketch sketch;
    std::size_t span_begin = 0;  // byte range of the delimiter content
    std::size_t span_end = 0;
    std::vector<Warning> warnings;
};

using ParseResult = std::variant<ParsedDocument, ParseError>;

// Parses a full LLM response. Prose outside the single <curves>...</curves>
// block is ignored; the block content must be a nested list literal of
// curves, each exactly 4 points of exactly 3 finite numbers.
ParseResult parse(std::string_view source, const ParserLimits& limits = {});

// Canonical delimiter-wrapped form, fixed decimal precision, no whitespace.
std::string serialize(const Sketch& sketch, int precision = 4);

// Fraction of sources whose delimiter block exists and has balanced brackets.
// Other error kinds (arity, non-numeric, range) still count as matched.
double bracket_match_rate(const std::vector<std::string>& sources);

// Bracket check for a single source, as used by bracket_match_rate.
bool brackets_match(std::string_view source);

}  // namespace draw3
