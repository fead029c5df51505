#include "draw3/sketch_text.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <stdexcept>

namespace draw3 {
namespace {

constexpr std::string_view kOpenTag = "<curves>";
constexpr std::string_view kCloseTag = "</curves>";

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t count = 0;
    std::size_t pos = text.find(needle);
    while (pos != std::string_view::npos) {
        ++count;
        pos = text.find(needle, pos + needle.size());
    }
    return count;
}

struct Block {
    std::size_t begin;  // content start
    std::size_t end;    // content end (exclusive)
};

// Locates the single <curves> block. Exactly one opening and one closing tag,
// in order, or an error.
std::variant<Block, ParseError> extract_block(std::string_view source) {
    std::size_t opens = count_occurrences(source, kOpenTag);
    std::size_t closes = count_occurrences(source, kCloseTag);
    if (opens == 0 || closes == 0)
        return ParseError{ParseErrorKind::MissingDelimiter, 0,
                          opens == 0 ? "no <curves> tag" : "no </curves> tag"};
    if (opens > 1 || closes > 1)
        return ParseError{ParseErrorKind::MultipleDelimiters, 0, "more than one <curves> block"};
    std::size_t open_pos = source.find(kOpenTag);
    std::size_t close_pos = source.find(kCloseTag);
    if (close_pos < open_pos)
        return ParseError{ParseErrorKind::MissingDelimiter, close_pos,
                          "</curves> appears before <curves>"};
    return Block{open_pos + kOpenTag.size(), close_pos};
}

struct Token {
    enum Type { LBracket, RBracket, Comma, Number } type;
    std::size_t pos;  // absolute byte offset
    double value = 0.0;
};

bool is_number_start(char c) {
    return (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
}

bool is_number_char(char c) {
    return is_number_start(c) || c == 'e' || c == 'E';
}

std::variant<std::vector<Token>, ParseError> tokenize(std::string_view source, const Block& block) {
    std::vector<Token> tokens;
    std::size_t i = block.begin;
    while (i < block.end) {
        char c = source[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
        } else if (c == '[') {
            tokens.push_back({Token::LBracket, i});
            ++i;
        } else if (c == ']') {
            tokens.push_back({Token::RBracket, i});
            ++i;
        } else if (c == ',') {
            tokens.push_back({Token::Comma, i});
            ++i;
        } else if (is_number_start(c)) {
            std::size_t start = i;
            while (i < block.end && is_number_char(source[i])) ++i;
            std::string text(source.substr(start, i - start));
            char* end = nullptr;
            double value = std::strtod(text.c_str(), &end);
            if (end != text.c_str() + text.size() || end == text.c_str())
                return ParseError{ParseErrorKind::NonNumericToken, start,
                                  "malformed number '" + text + "'"};
            if (!std::isfinite(value))
                return ParseError{ParseErrorKind::NonNumericToken, start,
                                  "non-finite number '" + text + "'"};
            tokens.push_back({Token::Number, start, value});
        } else {
            return ParseError{ParseErrorKind::ForbiddenContent, i,
                              std::string("forbidden character '") + c + "' inside block"};
        }
    }
    return tokens;
}

std::optional<ParseError> check_brackets(const std::vector<Token>& tokens, const Block& block) {
    long depth = 0;
    for (const Token& t : tokens) {
        if (t.type == Token::LBracket) ++depth;
        if (t.type == Token::RBracket) {
            --depth;
            if (depth < 0)
                return ParseError{ParseErrorKind::BracketMismatch, t.pos, "unmatched ']'"};
        }
    }
    if (depth != 0)
        return ParseError{ParseErrorKind::BracketMismatch, block.end,
                          std::to_string(depth) + " unclosed '['"};
    return std::nullopt;
}

// Nested list-literal value, depth-checked against the curve grammar later.
struct Value {
    bool is_number = false;
    double number = 0.0;
    std::size_t pos = 0;
    std::vector<Value> items;
};

struct TreeParser {
    const std::vector<Token>& tokens;
    std::size_t cursor = 0;

    const Token* peek() const { return cursor < tokens.size() ? &tokens[cursor] : nullptr; }

    std::variant<Value, ParseError> parse_value() {
        const Token* t = peek();
        if (!t) return ParseError{ParseErrorKind::ArityError, 0, "unexpected end of list"};
        if (t->type == Token::Number) {
            ++cursor;
            Value v;
            v.is_number = true;
            v.number = t->value;
            v.pos = t->pos;
            return v;
        }
        if (t->type == Token::LBracket) return parse_list();
        return ParseError{ParseErrorKind::ArityError, t->pos, "expected '[' or number"};
    }

    std::variant<Value, ParseError> parse_list() {
        Value list;
        list.pos = tokens[cursor].pos;
        ++cursor;  // consume '['
        bool expecting_item = true;
        while (true) {
            const Token* t = peek();
            if (!t) return ParseError{ParseErrorKind::ArityError, list.pos, "unterminated list"};
            if (t->type == Token::RBracket) {
                ++cursor;
                return list;
            }
            if (t->type == Token::Comma) {
                if (expecting_item && list.items.empty())
                    return ParseError{ParseErrorKind::ArityError, t->pos, "leading comma"};
                ++cursor;
                expecting_item = true;
                continue;
            }
            if (!expecting_item)
                return ParseError{ParseErrorKind::ArityError, t->pos, "missing comma between items"};
            auto item = parse_value();
            if (auto* err = std::get_if<ParseError>(&item)) return *err;
            list.items.push_back(std::move(std::get<Value>(item)));
            expecting_item = false;
        }
    }
};

}  // namespace

const char* to_string(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::MissingDelimiter: return "MissingDelimiter";
        case ParseErrorKind::MultipleDelimiters: return "MultipleDelimiters";
        case ParseErrorKind::BracketMismatch: return "BracketMismatch";
        case ParseErrorKind::ArityError: return "ArityError";
        case ParseErrorKind::NonNumericToken: return "NonNumericToken";
        case ParseErrorKind::OutOfRange: return "OutOfRange";
        case ParseErrorKind::EmptySketch: return "EmptySketch";
        case ParseErrorKind::ForbiddenContent: return "ForbiddenContent";
    }
    return "Unknown";
}

const char* to_string(WarningKind kind) {
    switch (kind) {
        case WarningKind::DegenerateCurve: return "DegenerateCurve";
        case WarningKind::ExcessiveCurveCount: return "ExcessiveCurveCount";
        case WarningKind::NearBoundary: return "NearBoundary";
    }
    return "Unknown";
}

ParseResult parse(std::string_view source, const ParserLimits& limits) {
    auto block_or = extract_block(source);
    if (auto* err = std::get_if<ParseError>(&block_or)) return *err;
    const Block block = std::get<Block>(block_or);

    auto tokens_or = tokenize(source, block);
    if (auto* err = std::get_if<ParseError>(&tokens_or)) return *err;
    const auto& tokens = std::get<std::vector<Token>>(tokens_or);

    if (tokens.empty())
        return ParseError{ParseErrorKind::ArityError, block.begin, "block is empty"};
    if (auto err = check_brackets(tokens, block)) return *err;
    if (tokens.front().type != Token::LBracket)
        return ParseError{ParseErrorKind::ArityError, tokens.front().pos,
                          "block content must be a list"};

    TreeParser tp{tokens};
    auto tree_or = tp.parse_list();
    if (auto* err = std::get_if<ParseError>(&tree_or)) return *err;
    const Value& top = std::get<Value>(tree_or);
    if (tp.cursor != tokens.size())
        return ParseError{ParseErrorKind::ForbiddenContent, tokens[tp.cursor].pos,
                          "content after top-level list"};

    if (top.items.empty())
        return ParseError{ParseErrorKind::EmptySketch, top.pos, "sketch has no curves"};

    ParsedDocument doc;
    doc.span_begin = block.begin;
    doc.span_end = block.end;

    for (std::size_t ci = 0; ci < top.items.size(); ++ci) {
        const Value& curve_node = top.items[ci];
        if (curve_node.is_number)
            return ParseError{ParseErrorKind::ArityError, curve_node.pos,
                              "expected a curve (list of 4 points)"};
        if (curve_node.items.size() != 4)
            return ParseError{ParseErrorKind::ArityError, curve_node.pos,
                              "curve has " + std::to_string(curve_node.items.size()) +
                                  " points, expected 4"};
        BezierCurve curve;
        bool clamped = false;
        for (int pi = 0; pi < 4; ++pi) {
            const Value& point_node = curve_node.items[static_cast<std::size_t>(pi)];
            if (point_node.is_number)
                return ParseError{ParseErrorKind::ArityError, point_node.pos,
                                  "expected a point (list of 3 numbers)"};
            if (point_node.items.size() != 3)
                return ParseError{ParseErrorKind::ArityError, point_node.pos,
                                  "point has " + std::to_string(point_node.items.size()) +
                                      " components, expected 3"};
            double comps[3];
            for (int k = 0; k < 3; ++k) {
                const Value& num = point_node.items[static_cast<std::size_t>(k)];
                if (!num.is_number)
                    return ParseError{ParseErrorKind::ArityError, num.pos,
                                      "nested list where a number was expected"};
                double v = num.number;
                if (v < -limits.bound || v > limits.bound) {
                    if (limits.strict)
                        return ParseError{ParseErrorKind::OutOfRange, num.pos,
                                          "coordinate outside [-" + std::to_string(limits.bound) +
                                              ", " + std::to_string(limits.bound) + "]"};
                    v = v < -limits.bound ? -limits.bound : limits.bound;
                    clamped = true;
                }
                comps[k] = v;
            }
            Point3 p{comps[0], comps[1], comps[2]};
            switch (pi) {
                case 0: curve.p0 = p; break;
                case 1: curve.p1 = p; break;
                case 2: curve.p2 = p; break;
                case 3: curve.p3 = p; break;
            }
        }
        if (clamped) doc.warnings.push_back({WarningKind::NearBoundary, ci});
        if (is_degenerate(curve, limits.degeneracy_epsilon))
            doc.warnings.push_back({WarningKind::DegenerateCurve, ci});
        doc.sketch.curves.push_back(curve);
    }

    if (doc.sketch.curve_count() > limits.max_curves)
        doc.warnings.push_back({WarningKind::ExcessiveCurveCount, limits.max_curves});

    return doc;
}

std::string serialize(const Sketch& sketch, int precision) {
    if (precision < 0 || precision > 17) throw std::invalid_argument("bad precision");
    std::string out;
    out.reserve(sketch.curve_count() * 120 + 32);
    out += kOpenTag;
    out += '[';
    char buf[64];
    for (std::size_t ci = 0; ci < sketch.curve_count(); ++ci) {
        if (ci) out += ',';
        out += '[';
        const BezierCurve& c = sketch.curves[ci];
        for (int pi = 0; pi < 4; ++pi) {
            if (pi) out += ',';
            const Point3& p = c.control(pi);
            const double comps[3] = {p.x, p.y, p.z};
            out += '[';
            for (int k = 0; k < 3; ++k) {
                if (k) out += ',';
                std::snprintf(buf, sizeof(buf), "%.*f", precision, comps[k]);
                out += buf;
            }
            out += ']';
        }
        out += ']';
    }
    out += ']';
    out += kCloseTag;
    return out;
}

bool brackets_match(std::string_view source) {
    auto block_or = extract_block(source);
    if (std::holds_alternative<ParseError>(block_or)) return false;
    const Block block = std::get<Block>(block_or);
    long depth = 0;
    for (std::size_t i = block.begin; i < block.end; ++i) {
        if (source[i] == '[') ++depth;
        if (source[i] == ']') {
            --depth;
            if (depth < 0) return false;
        }
    }
    return depth == 0;
}

double bracket_match_rate(const std::vector<std::string>& sources) {
    if (sources.empty()) throw std::invalid_argument("bracket_match_rate needs at least one source");
    std::size_t matched = 0;
    for (const auto& s : sources)
        if (brackets_match(s)) ++matched;
    return static_cast<double>(matched) / static_cast<double>(sources.size());
}

}  // namespace draw3
