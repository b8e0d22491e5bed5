#include "fecsynth/program_dsl.hpp"

#include "fecsynth/errors.hpp"

#include <algorithm>
#include <set>

namespace fecsynth::dsl {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r';
}

bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9') || c == '_';
}

bool is_reserved_word(std::string_view w) {
    return w == "and" || w == "or" || w == "not";
}

struct LineSpan {
    size_t begin;
    size_t end; // exclusive, excludes the newline
};

std::string_view line_view(std::string_view src, const LineSpan& ln) {
    return src.substr(ln.begin, ln.end - ln.begin);
}

std::string_view trimmed(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

bool is_def_header(std::string_view s) {
    std::string_view t = trimmed(s);
    if (!t.starts_with("def")) return false;
    size_t i = 3;
    if (i >= t.size() || !is_space(t[i])) return false;
    while (i < t.size() && is_space(t[i])) ++i;
    if (i >= t.size() || !is_ident_start(t[i])) return false;
    while (i < t.size() && is_ident_char(t[i])) ++i;
    while (i < t.size() && is_space(t[i])) ++i;
    if (i >= t.size() || t[i] != '(') return false;
    ++i;
    while (i < t.size() && is_space(t[i])) ++i;
    if (i >= t.size() || t[i] != ')') return false;
    ++i;
    while (i < t.size() && is_space(t[i])) ++i;
    if (i >= t.size() || t[i] != ':') return false;
    ++i;
    while (i < t.size() && is_space(t[i])) ++i;
    return i == t.size();
}

/// Character-level cursor over one statement line.
class LineParser {
public:
    LineParser(std::string_view src, LineSpan span, std::vector<ParseDiagnostic>& diags)
        : src_(src), begin_(span.begin), end_(span.end), pos_(span.begin), diags_(diags) {}

    bool parse_statement(const std::set<std::string>& bound, Step& out, bool& fatal);

private:
    void skip_ws() {
        while (pos_ < end_ && is_space(src_[pos_])) ++pos_;
    }

    bool at_end() {
        skip_ws();
        return pos_ >= end_;
    }

    char peek() const { return pos_ < end_ ? src_[pos_] : '\0'; }

    bool parse_ident(std::string& out, size_t& ident_begin) {
        skip_ws();
        ident_begin = pos_;
        if (pos_ >= end_ || !is_ident_start(src_[pos_])) return false;
        size_t b = pos_;
        while (pos_ < end_ && is_ident_char(src_[pos_])) ++pos_;
        out.assign(src_.substr(b, pos_ - b));
        return true;
    }

    bool expect(char c, const char* what) {
        skip_ws();
        if (pos_ < end_ && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        error(DiagKind::SyntaxError, pos_, std::min(pos_ + 1, end_),
              std::string("expected '") + c + "' " + what);
        return false;
    }

    void error(DiagKind kind, size_t b, size_t e, std::string msg) {
        diags_.push_back({kind, b, std::max(b, e), std::move(msg)});
    }

    bool parse_string(TemplateString& out, const std::set<std::string>& bound);
    bool parse_bool_expr(BoolExpr& out, const std::set<std::string>& bound);
    bool parse_or(BoolExpr& out, const std::set<std::string>& bound);
    bool parse_and(BoolExpr& out, const std::set<std::string>& bound);
    bool parse_unary(BoolExpr& out, const std::set<std::string>& bound);

    std::string_view src_;
    size_t begin_;
    size_t end_;
    size_t pos_;
    std::vector<ParseDiagnostic>& diags_;
};

bool LineParser::parse_string(TemplateString& out, const std::set<std::string>& bound) {
    skip_ws();
    out.interpolating = false;
    if (pos_ < end_ && (src_[pos_] == 'f' || src_[pos_] == 'F') && pos_ + 1 < end_ &&
        src_[pos_ + 1] == '"') {
        out.interpolating = true;
        ++pos_;
    }
    if (pos_ >= end_ || src_[pos_] != '"') {
        error(DiagKind::SyntaxError, pos_, std::min(pos_ + 1, end_),
              "expected a double-quoted string literal argument");
        return false;
    }
    size_t quote = pos_++;
    std::string text;
    bool closed = false;
    while (pos_ < end_) {
        char c = src_[pos_];
        if (c == '\\' && pos_ + 1 < end_ && (src_[pos_ + 1] == '"' || src_[pos_ + 1] == '\\')) {
            text.push_back(src_[pos_ + 1]);
            pos_ += 2;
            continue;
        }
        if (c == '"') {
            ++pos_;
            closed = true;
            break;
        }
        text.push_back(c);
        ++pos_;
    }
    if (!closed) {
        error(DiagKind::UnterminatedString, quote, end_, "string literal is not terminated");
        return false;
    }
    out.text = std::move(text);

    if (out.interpolating) {
        size_t i = 0;
        const std::string& t = out.text;
        while (i < t.size()) {
            if (t[i] != '{') {
                ++i;
                continue;
            }
            size_t close = t.find('}', i + 1);
            std::string name = close == std::string::npos ? "" : t.substr(i + 1, close - i - 1);
            bool valid = !name.empty() && is_ident_start(name[0]) &&
                         std::all_of(name.begin(), name.end(), is_ident_char);
            if (close == std::string::npos || !valid) {
                error(DiagKind::InvalidPlaceholder, quote, pos_,
                      "malformed placeholder in interpolating string");
                return false;
            }
            if (!bound.count(name)) {
                error(DiagKind::UnboundVariable, quote, pos_,
                      "placeholder references unbound variable '" + name + "'");
            }
            i = close + 1;
        }
    }
    return true;
}

bool LineParser::parse_bool_expr(BoolExpr& out, const std::set<std::string>& bound) {
    return parse_or(out, bound);
}

bool LineParser::parse_or(BoolExpr& out, const std::set<std::string>& bound) {
    if (!parse_and(out, bound)) return false;
    for (;;) {
        skip_ws();
        size_t save = pos_;
        std::string word;
        size_t wb = 0;
        if (parse_ident(word, wb) && word == "or") {
            BoolExpr rhs;
            if (!parse_and(rhs, bound)) return false;
            out = BoolExpr::disjunction(std::move(out), std::move(rhs));
        } else {
            pos_ = save;
            return true;
        }
    }
}

bool LineParser::parse_and(BoolExpr& out, const std::set<std::string>& bound) {
    if (!parse_unary(out, bound)) return false;
    for (;;) {
        skip_ws();
        size_t save = pos_;
        std::string word;
        size_t wb = 0;
        if (parse_ident(word, wb) && word == "and") {
            BoolExpr rhs;
            if (!parse_unary(rhs, bound)) return false;
            out = BoolExpr::conjunction(std::move(out), std::move(rhs));
        } else {
            pos_ = save;
            return true;
        }
    }
}

bool LineParser::parse_unary(BoolExpr& out, const std::set<std::string>& bound) {
    skip_ws();
    if (peek() == '(') {
        ++pos_;
        if (!parse_bool_expr(out, bound)) return false;
        return expect(')', "to close the grouped expression");
    }
    std::string word;
    size_t wb = 0;
    if (!parse_ident(word, wb)) {
        error(DiagKind::SyntaxError, pos_, std::min(pos_ + 1, end_),
              "expected a variable name in the Predict expression");
        return false;
    }
    if (word == "not") {
        BoolExpr inner;
        if (!parse_unary(inner, bound)) return false;
        out = BoolExpr::negation(std::move(inner));
        return true;
    }
    if (is_reserved_word(word)) {
        error(DiagKind::SyntaxError, wb, pos_, "unexpected keyword '" + word + "'");
        return false;
    }
    if (!bound.count(word)) {
        error(DiagKind::UnboundVariable, wb, pos_,
              "variable '" + word + "' is not bound by an earlier step");
    }
    out = BoolExpr::variable(std::move(word));
    return true;
}

bool LineParser::parse_statement(const std::set<std::string>& bound, Step& out, bool& fatal) {
    fatal = false;
    std::string binding;
    size_t bind_begin = 0;
    skip_ws();
    size_t stmt_begin = pos_;
    if (!parse_ident(binding, bind_begin)) {
        error(DiagKind::SyntaxError, stmt_begin, std::min(stmt_begin + 1, end_),
              "expected a statement of the form `name = Primitive(...)`");
        fatal = true;
        return false;
    }
    if (is_reserved_word(binding)) {
        error(DiagKind::SyntaxError, bind_begin, pos_,
              "'" + binding + "' cannot be used as a binding name");
        fatal = true;
        return false;
    }
    if (!expect('=', "after the binding name")) {
        fatal = true;
        return false;
    }
    std::string callee;
    size_t callee_begin = 0;
    if (!parse_ident(callee, callee_begin)) {
        error(DiagKind::SyntaxError, pos_, std::min(pos_ + 1, end_), "expected a primitive call");
        fatal = true;
        return false;
    }
    if (callee != "Question" && callee != "Verify" && callee != "Predict") {
        error(DiagKind::UnknownPrimitive, callee_begin, pos_,
              "unknown primitive '" + callee + "' (expected Question, Verify, or Predict)");
        fatal = true;
        return false;
    }
    if (!expect('(', "to open the argument list")) {
        fatal = true;
        return false;
    }

    if (callee == "Predict") {
        BoolExpr expr;
        if (!parse_bool_expr(expr, bound)) {
            fatal = true;
            return false;
        }
        if (!expect(')', "to close the argument list")) {
            fatal = true;
            return false;
        }
        if (!at_end()) {
            error(DiagKind::SyntaxError, pos_, end_, "unexpected text after the statement");
            fatal = true;
            return false;
        }
        out.variant = PredictStep{std::move(binding), std::move(expr)};
        return true;
    }

    TemplateString arg;
    if (!parse_string(arg, bound)) {
        fatal = true;
        return false;
    }
    skip_ws();
    if (peek() == ',') {
        error(DiagKind::SyntaxError, pos_, std::min(pos_ + 1, end_),
              callee + " takes exactly one argument");
        fatal = true;
        return false;
    }
    if (!expect(')', "to close the argument list")) {
        fatal = true;
        return false;
    }
    if (!at_end()) {
        error(DiagKind::SyntaxError, pos_, end_, "unexpected text after the statement");
        fatal = true;
        return false;
    }
    if (callee == "Question") {
        out.variant = QuestionStep{std::move(binding), std::move(arg)};
    } else {
        out.variant = VerifyStep{std::move(binding), std::move(arg)};
    }
    return true;
}

int expr_precedence(const BoolExpr& e) {
    switch (e.kind) {
    case BoolExpr::Kind::Or: return 1;
    case BoolExpr::Kind::And: return 2;
    case BoolExpr::Kind::Not: return 3;
    case BoolExpr::Kind::Var: return 4;
    }
    return 4;
}

void emit_expr(const BoolExpr& e, std::string& out) {
    switch (e.kind) {
    case BoolExpr::Kind::Var:
        out += e.var;
        return;
    case BoolExpr::Kind::Not: {
        out += "not ";
        const BoolExpr& c = e.children[0];
        bool parens = expr_precedence(c) < expr_precedence(e);
        if (parens) out += '(';
        emit_expr(c, out);
        if (parens) out += ')';
        return;
    }
    case BoolExpr::Kind::And:
    case BoolExpr::Kind::Or: {
        int prec = expr_precedence(e);
        const BoolExpr& l = e.children[0];
        const BoolExpr& r = e.children[1];
        bool lp = expr_precedence(l) < prec;
        bool rp = expr_precedence(r) <= prec;
        if (lp) out += '(';
        emit_expr(l, out);
        if (lp) out += ')';
        out += e.kind == BoolExpr::Kind::And ? " and " : " or ";
        if (rp) out += '(';
        emit_expr(r, out);
        if (rp) out += ')';
        return;
    }
    }
}

std::string escape_string(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        if (c == '\\' || c == '"') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

} // namespace

BoolExpr BoolExpr::variable(std::string name) {
    BoolExpr e;
    e.kind = Kind::Var;
    e.var = std::move(name);
    return e;
}

BoolExpr BoolExpr::negation(BoolExpr inner) {
    BoolExpr e;
    e.kind = Kind::Not;
    e.children.push_back(std::move(inner));
    return e;
}

BoolExpr BoolExpr::conjunction(BoolExpr lhs, BoolExpr rhs) {
    BoolExpr e;
    e.kind = Kind::And;
    e.children.push_back(std::move(lhs));
    e.children.push_back(std::move(rhs));
    return e;
}

BoolExpr BoolExpr::disjunction(BoolExpr lhs, BoolExpr rhs) {
    BoolExpr e;
    e.kind = Kind::Or;
    e.children.push_back(std::move(lhs));
    e.children.push_back(std::move(rhs));
    return e;
}

const std::string& Step::binding() const {
    return std::visit([](const auto& s) -> const std::string& { return s.binding; }, variant);
}

bool structurally_equal(const ReasoningProgram& a, const ReasoningProgram& b) {
    return a.steps == b.steps;
}

std::string_view diag_kind_name(DiagKind k) {
    switch (k) {
    case DiagKind::UnknownPrimitive: return "UnknownPrimitive";
    case DiagKind::UnboundVariable: return "UnboundVariable";
    case DiagKind::MissingLabel: return "MissingLabel";
    case DiagKind::UnterminatedString: return "UnterminatedString";
    case DiagKind::EmptyProgram: return "EmptyProgram";
    case DiagKind::SyntaxError: return "SyntaxError";
    case DiagKind::MisplacedPredict: return "MisplacedPredict";
    case DiagKind::InvalidPlaceholder: return "InvalidPlaceholder";
    case DiagKind::NoEvidenceStep: return "NoEvidenceStep";
    }
    return "Unknown";
}

ParseResult parse_program(std::string_view source) {
    ParseResult result;

    std::vector<LineSpan> lines;
    size_t pos = 0;
    while (pos <= source.size()) {
        size_t nl = source.find('\n', pos);
        size_t end = nl == std::string_view::npos ? source.size() : nl;
        lines.push_back({pos, end});
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }

    std::vector<LineSpan> stmts;
    bool seen_statement = false;
    for (const LineSpan& ln : lines) {
        std::string_view t = trimmed(line_view(source, ln));
        if (t.empty()) continue;
        if (t.starts_with("```")) continue;
        if (t.starts_with("#")) {
            if (!seen_statement) continue;
            continue; // full-line comments are skipped anywhere
        }
        if (is_def_header(t)) continue;
        stmts.push_back(ln);
        seen_statement = true;
    }

    if (stmts.empty()) {
        result.diagnostics.push_back(
            {DiagKind::EmptyProgram, 0, source.size(), "no statements found"});
        return result;
    }

    std::vector<Step> steps;
    std::set<std::string> bound;
    std::vector<size_t> predict_line_begins;
    for (size_t i = 0; i < stmts.size(); ++i) {
        LineParser lp(source, stmts[i], result.diagnostics);
        Step step;
        bool fatal = false;
        if (lp.parse_statement(bound, step, fatal)) {
            step.index = static_cast<int>(steps.size());
            if (std::holds_alternative<PredictStep>(step.variant)) {
                predict_line_begins.push_back(stmts[i].begin);
                if (i + 1 != stmts.size()) {
                    result.diagnostics.push_back({DiagKind::MisplacedPredict, stmts[i].begin,
                                                  stmts[i].end,
                                                  "Predict must be the final statement"});
                }
            }
            bound.insert(step.binding());
            steps.push_back(std::move(step));
        }
    }

    if (!steps.empty()) {
        const Step& last = steps.back();
        const auto* predict = std::get_if<PredictStep>(&last.variant);
        if (predict == nullptr || predict->binding != "label") {
            LineSpan ln = stmts.back();
            result.diagnostics.push_back(
                {DiagKind::MissingLabel, ln.begin, ln.end,
                 "the final statement must be `label = Predict(...)`"});
        }
        bool has_evidence_step = std::any_of(steps.begin(), steps.end(), [](const Step& s) {
            return !std::holds_alternative<PredictStep>(s.variant);
        });
        if (!has_evidence_step) {
            result.diagnostics.push_back({DiagKind::NoEvidenceStep, stmts.front().begin,
                                          stmts.back().end,
                                          "at least one Question or Verify step is required"});
        }
    }

    for (ParseDiagnostic& d : result.diagnostics) {
        d.begin = std::min(d.begin, source.size());
        d.end = std::min(std::max(d.end, d.begin), source.size());
    }

    if (result.diagnostics.empty()) {
        ReasoningProgram prog;
        prog.steps = std::move(steps);
        prog.source_text.assign(source);
        result.program = std::move(prog);
    }
    return result;
}

std::string serialize_program(const ReasoningProgram& p) {
    std::string out = "def program():\n";
    for (const Step& step : p.steps) {
        out += "    ";
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                out += s.binding;
                out += " = ";
                if constexpr (std::is_same_v<T, QuestionStep>) {
                    out += "Question(";
                    if (s.question.interpolating) out += 'f';
                    out += '"';
                    out += escape_string(s.question.text);
                    out += "\")";
                } else if constexpr (std::is_same_v<T, VerifyStep>) {
                    out += "Verify(";
                    if (s.statement.interpolating) out += 'f';
                    out += '"';
                    out += escape_string(s.statement.text);
                    out += "\")";
                } else {
                    out += "Predict(";
                    emit_expr(s.expr, out);
                    out += ')';
                }
            },
            step.variant);
        out += '\n';
    }
    return out;
}

int structural_hops(const ReasoningProgram& p) {
    int hops = 0;
    for (const Step& s : p.steps) {
        if (!std::holds_alternative<PredictStep>(s.variant)) ++hops;
    }
    return hops;
}

std::vector<std::string> placeholder_names(std::string_view t) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < t.size()) {
        if (t[i] != '{') {
            ++i;
            continue;
        }
        size_t close = t.find('}', i + 1);
        if (close == std::string_view::npos) break;
        std::string name(t.substr(i + 1, close - i - 1));
        bool valid = !name.empty() && is_ident_start(name[0]) &&
                     std::all_of(name.begin(), name.end(), is_ident_char);
        if (valid) {
            if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
            i = close + 1;
        } else {
            ++i;
        }
    }
    return out;
}

std::string resolve_placeholders(std::string_view t,
                                 const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(t.size());
    size_t i = 0;
    while (i < t.size()) {
        if (t[i] != '{') {
            out.push_back(t[i++]);
            continue;
        }
        size_t close = t.find('}', i + 1);
        std::string name =
            close == std::string_view::npos ? "" : std::string(t.substr(i + 1, close - i - 1));
        bool valid = !name.empty() && is_ident_start(name[0]) &&
                     std::all_of(name.begin(), name.end(), is_ident_char);
        if (!valid) {
            out.push_back(t[i++]);
            continue;
        }
        auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw MissingBinding("no binding for placeholder '" + name + "'");
        }
        out += it->second;
        i = close + 1;
    }
    return out;
}

} // namespace fecsynth::dsl
