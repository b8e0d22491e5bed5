#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fecsynth::dsl {

/// Argument text of a Question/Verify call. Escape sequences are already
/// decoded; `{var}` placeholder segments are kept verbatim and are only
/// meaningful when `interpolating` is set (the source used an f-string).
struct TemplateString {
    std::string text;
    bool interpolating = false;
    bool operator==(const TemplateString&) const = default;
};

struct BoolExpr {
    enum class Kind { Var, Not, And, Or };
    Kind kind = Kind::Var;
    std::string var;
    std::vector<BoolExpr> children;
    bool operator==(const BoolExpr&) const = default;

    static BoolExpr variable(std::string name);
    static BoolExpr negation(BoolExpr e);
    static BoolExpr conjunction(BoolExpr lhs, BoolExpr rhs);
    static BoolExpr disjunction(BoolExpr lhs, BoolExpr rhs);
};

struct QuestionStep {
    std::string binding;
    TemplateString question;
    bool operator==(const QuestionStep&) const = default;
};

struct VerifyStep {
    std::string binding;
    TemplateString statement;
    bool operator==(const VerifyStep&) const = default;
};

struct PredictStep {
    std::string binding;
    BoolExpr expr;
    bool operator==(const PredictStep&) const = default;
};

struct Step {
    std::variant<QuestionStep, VerifyStep, PredictStep> variant;
    int index = 0;
    bool operator==(const Step&) const = default;

    const std::string& binding() const;
};

struct ReasoningProgram {
    std::vector<Step> steps;
    std::string source_text;
};

/// Step-for-step equality; source_text is ignored.
bool structurally_equal(const ReasoningProgram& a, const ReasoningProgram& b);

enum class DiagKind {
    UnknownPrimitive,
    UnboundVariable,
    MissingLabel,
    UnterminatedString,
    EmptyProgram,
    SyntaxError,
    MisplacedPredict,
    InvalidPlaceholder,
    NoEvidenceStep,
};

std::string_view diag_kind_name(DiagKind k);

struct ParseDiagnostic {
    DiagKind kind;
    size_t begin = 0;
    size_t end = 0;
    std::string message;
};

struct ParseResult {
    std::optional<ReasoningProgram> program;
    std::vector<ParseDiagnostic> diagnostics;
    bool ok() const { return program.has_value(); }
};

/// Total over arbitrary byte input: returns a program or diagnostics, never
/// throws, never both. Code fences, leading `#` comment lines, and
/// `def program():` headers are tolerated and skipped; diagnostic spans index
/// the original input.
ParseResult parse_program(std::string_view source);

/// Canonical text: `def program():` header, one statement per line, 4-space
/// indent, double-quoted strings, f-prefix preserved. Re-parsing reproduces
/// the program step for step.
std::string serialize_program(const ReasoningProgram& p);

/// Number of Question plus Verify steps.
int structural_hops(const ReasoningProgram& p);

/// `{var}` placeholder names in order of first appearance.
std::vector<std::string> placeholder_names(std::string_view template_text);

/// Replace every `{var}` segment with bindings.at(var); other text is copied
/// byte for byte. Throws MissingBinding.
std::string resolve_placeholders(std::string_view template_text,
                                 const std::map<std::string, std::string>& bindings);

} // namespace fecsynth::dsl
