#pragma once

// =============================================================================
// Textual concrete syntax for patterns and model files (.ephs).
//
// Grammar (whitespace-insensitive, '#' line comments):
//   doc        := item*
//   item       := quantities | pattern | bindings | domain | sim | init
//   quantities := "quantities" "{" (IDENT ":" PLACEMENT ";")* "}"
//   pattern    := "pattern" IDENT "{" outer boxdecl* juncdecl* "}"
//   outer      := "outer" "{" portdecl* "}"
//   boxdecl    := "box" DOTTED ":" fill "{" portdecl* "}"
//   fill       := "storage" | "reversible" | "irreversible"
//               | "composite" "(" IDENT ")"
//   portdecl   := ("state" | "power" KIND | "boundary" "(" SIDE "," IDENT ")")
//                 IDENT "(" PLACEMENT ")" DOTTED ";"
//   juncdecl   := "junction" "{" portref ("," portref)* "}"
//   portref    := DOTTED                      (box resolved by longest prefix)
//   bindings   := "bindings" IDENT "{" (DOTTED "->" DOTTED params? ";")* "}"
//   domain     := "domain" "{" (IDENT "=" value ";")* "}"
//   sim        := "sim" "{" (IDENT "=" value ";")* "}"
//   init       := "init" "{" (IDENT ":" initspec ";")* "}"
//   initspec   := IDENT params? | "values" "(" NUMBER ("," NUMBER)* ")"
//   params     := "(" IDENT "=" NUMBER ("," IDENT "=" NUMBER)* ")"
//
// serialize() emits the canonical form: sections and entries sorted, boxes
// alphabetical, junctions ordered by smallest participant, one construct per
// line, 2-space indent, LF line endings.
// =============================================================================

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ephs/assembly.hpp"
#include "ephs/pattern.hpp"

namespace ephs {

struct Diagnostic {
    int line = 0;
    int column = 0;
    std::string message;
    std::string expected;  // expected-token set for syntax errors

    std::string str() const;
};

struct InitSpec {
    std::string preset;  // empty means inline values
    std::map<std::string, double> params;
    std::vector<double> values;
};

struct DomainSpec {
    double length = 1.0;
    long cells = 16;
    bool periodic = true;
};

struct BindingsSection {
    std::string pattern_name;
    std::map<std::string, BindingEntry> entries;
};

struct ModelDocument {
    std::map<std::string, Placement> quantities;  // extensions over the prelude
    std::vector<std::pair<std::string, Pattern>> patterns;
    bool has_bindings = false;
    BindingsSection bindings;
    bool has_domain = false;
    DomainSpec domain;
    bool has_sim = false;
    SimConfig sim;
    Environment env;
    std::map<std::string, InitSpec> init;

    const Pattern* find_pattern(const std::string& name) const;
    std::map<std::string, Pattern> pattern_library() const;
};

struct ParseResult {
    bool ok = false;
    ModelDocument doc;
    std::vector<Diagnostic> diagnostics;
};

// Never throws on malformed input; reports a positioned diagnostic instead.
ParseResult parse(std::string_view text);

std::string serialize(const ModelDocument& doc);
std::string serialize_pattern(const std::string& name, const Pattern& p);

}  // namespace ephs
