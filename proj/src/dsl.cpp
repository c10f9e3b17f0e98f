#include "ephs/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace ephs {

std::string Diagnostic::str() const {
    std::ostringstream os;
    os << line << ":" << column << ": " << message;
    if (!expected.empty()) os << " (expected " << expected << ")";
    return os.str();
}

const Pattern* ModelDocument::find_pattern(const std::string& name) const {
    for (const auto& [n, p] : patterns)
        if (n == name) return &p;
    return nullptr;
}

std::map<std::string, Pattern> ModelDocument::pattern_library() const {
    std::map<std::string, Pattern> lib;
    for (const auto& [n, p] : patterns) lib.emplace(n, p);
    return lib;
}

// =============================================================================
// Lexer
// =============================================================================

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int column = 1;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_ws();
        Token t;
        t.line = line_;
        t.column = column_;
        if (pos_ >= src_.size()) return t;
        const char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            t.kind = Tok::Ident;
            t.text = lex_ident();
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
            ((c == '-' || c == '+') && pos_ + 1 < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) ||
              src_[pos_ + 1] == '.'))) {
            t.kind = Tok::Number;
            t.text = lex_number();
            return t;
        }
        t.kind = Tok::Punct;
        if ((c == '-' || c == '=') && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
            t.text = std::string(1, c) + ">";
            advance();
            advance();
            return t;
        }
        t.text = std::string(1, c);
        advance();
        return t;
    }

  private:
    void advance() {
        if (pos_ < src_.size()) {
            if (src_[pos_] == '\n') {
                ++line_;
                column_ = 1;
            } else {
                ++column_;
            }
            ++pos_;
        }
    }

    void skip_ws() {
        for (;;) {
            while (pos_ < src_.size() &&
                   std::isspace(static_cast<unsigned char>(src_[pos_])))
                advance();
            if (pos_ < src_.size() && src_[pos_] == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                continue;
            }
            break;
        }
    }

    std::string lex_ident() {
        std::string s;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                s += c;
                advance();
            } else if (c == '-' && pos_ + 1 < src_.size() &&
                       (std::isalpha(static_cast<unsigned char>(src_[pos_ + 1])) ||
                        src_[pos_ + 1] == '_')) {
                // Hyphenated keywords such as node-field or gaussian-bump.
                s += c;
                advance();
            } else {
                break;
            }
        }
        return s;
    }

    std::string lex_number() {
        std::string s;
        auto take = [&] {
            s += src_[pos_];
            advance();
        };
        if (src_[pos_] == '-' || src_[pos_] == '+') take();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            take();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            take();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                take();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            const std::size_t mark = pos_;
            std::string exp;
            exp += src_[pos_];
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) {
                exp += src_[look];
                ++look;
            }
            bool any = false;
            while (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                exp += src_[look];
                ++look;
                any = true;
            }
            if (any) {
                for (std::size_t i = mark; i < look; ++i) advance();
                s += exp;
            }
        }
        return s;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

// =============================================================================
// Parser
// =============================================================================

struct parse_abort {};  // unwinds to parse() after the diagnostic is recorded

class Parser {
  public:
    Parser(std::string_view src, ParseResult& result) : lex_(src), out_(result) {
        cur_ = lex_.next();
    }

    void run() {
        while (cur_.kind != Tok::End) {
            if (cur_.kind != Tok::Ident)
                fail("top-level item", "'pattern', 'quantities', 'bindings', 'domain', "
                                       "'sim' or 'init'");
            const std::string word = cur_.text;
            if (word == "pattern")
                parse_pattern();
            else if (word == "quantities")
                parse_quantities();
            else if (word == "bindings")
                parse_bindings();
            else if (word == "domain")
                parse_domain();
            else if (word == "sim")
                parse_sim();
            else if (word == "init")
                parse_init();
            else
                fail("top-level item", "'pattern', 'quantities', 'bindings', 'domain', "
                                       "'sim' or 'init'");
        }
    }

  private:
    [[noreturn]] void fail(const std::string& what, const std::string& expected) {
        Diagnostic d;
        d.line = cur_.line;
        d.column = cur_.column;
        d.message = "syntax error at '" +
                    (cur_.kind == Tok::End ? std::string("end of input") : cur_.text) +
                    "' while reading " + what;
        d.expected = expected;
        out_.diagnostics.push_back(d);
        throw parse_abort{};
    }

    [[noreturn]] void semantic(const Token& at, const std::string& message) {
        Diagnostic d;
        d.line = at.line;
        d.column = at.column;
        d.message = message;
        out_.diagnostics.push_back(d);
        throw parse_abort{};
    }

    void bump() { cur_ = lex_.next(); }

    bool is_punct(const char* p) const { return cur_.kind == Tok::Punct && cur_.text == p; }
    bool is_ident(const char* w) const { return cur_.kind == Tok::Ident && cur_.text == w; }

    void expect_punct(const char* p, const std::string& what) {
        if (!is_punct(p)) fail(what, std::string("'") + p + "'");
        bump();
    }

    std::string expect_ident(const std::string& what) {
        if (cur_.kind != Tok::Ident) fail(what, "identifier");
        std::string s = cur_.text;
        bump();
        return s;
    }

    std::string expect_dotted(const std::string& what) {
        std::string s = expect_ident(what);
        while (is_punct(".")) {
            bump();
            s += "." + expect_ident(what);
        }
        return s;
    }

    double expect_number(const std::string& what) {
        if (cur_.kind != Tok::Number) fail(what, "number");
        double v = 0.0;
        const auto res = std::from_chars(cur_.text.data(), cur_.text.data() + cur_.text.size(), v);
        if (res.ec != std::errc{}) fail(what, "number");
        bump();
        return v;
    }

    Placement expect_placement() {
        const Token at = cur_;
        const std::string w = expect_ident("placement");
        if (w == "node-field") return Placement::NodeField;
        if (w == "cell-field") return Placement::CellField;
        if (w == "scalar-boundary-value") return Placement::ScalarBoundaryValue;
        semantic(at, "unknown placement keyword '" + w + "'");
    }

    Placement quantity_placement(const Token& at, const std::string& name) {
        auto bit = builtin_quantities().find(name);
        if (bit != builtin_quantities().end()) return bit->second;
        auto dit = out_.doc.quantities.find(name);
        if (dit != out_.doc.quantities.end()) return dit->second;
        semantic(at, "unknown quantity '" + name + "'");
    }

    std::map<std::string, double> parse_params() {
        std::map<std::string, double> params;
        if (!is_punct("(")) return params;
        bump();
        if (!is_punct(")")) {
            for (;;) {
                const Token at = cur_;
                const std::string name = expect_ident("parameter name");
                expect_punct("=", "parameter");
                const double v = expect_number("parameter value");
                if (!params.emplace(name, v).second)
                    semantic(at, "duplicate parameter '" + name + "'");
                if (is_punct(",")) {
                    bump();
                    continue;
                }
                break;
            }
        }
        expect_punct(")", "parameter list");
        return params;
    }

    PortAttribute parse_portdecl(std::string& name_out) {
        PortAttribute attr;
        const Token head = cur_;
        const std::string cls = expect_ident("port declaration");
        if (cls == "state") {
            attr.port_class = PortClass::State;
        } else if (cls == "power") {
            attr.port_class = PortClass::Power;
            const Token kt = cur_;
            const std::string k = expect_ident("power kind");
            if (k == "k")
                attr.kind = PowerKind::K;
            else if (k == "p")
                attr.kind = PowerKind::P;
            else if (k == "i")
                attr.kind = PowerKind::I;
            else
                semantic(kt, "unknown power kind '" + k + "'");
        } else if (cls == "boundary") {
            attr.port_class = PortClass::Boundary;
            expect_punct("(", "boundary attributes");
            const Token st = cur_;
            const std::string side = expect_ident("boundary side");
            if (side == "left")
                attr.side = Side::Left;
            else if (side == "right")
                attr.side = Side::Right;
            else if (side == "both")
                attr.side = Side::Both;
            else
                semantic(st, "unknown boundary side '" + side + "'");
            expect_punct(",", "boundary attributes");
            attr.splitting_tag = expect_ident("boundary splitting tag");
            expect_punct(")", "boundary attributes");
        } else {
            semantic(head, "unknown port class '" + cls + "'");
        }

        const Token qt = cur_;
        const std::string qname = expect_dotted("quantity");
        expect_punct("(", "quantity placement");
        const Placement stated = expect_placement();
        expect_punct(")", "quantity placement");
        if (attr.port_class == PortClass::Boundary) {
            if (stated != Placement::ScalarBoundaryValue)
                semantic(qt, "boundary port quantity must use scalar-boundary-value");
            quantity_placement(qt, qname);  // the base quantity must be known
            attr.quantity = {qname, Placement::ScalarBoundaryValue};
        } else {
            const Placement declared = quantity_placement(qt, qname);
            if (stated != declared)
                semantic(qt, "quantity '" + qname + "' is declared as " +
                                 std::string(to_string(declared)) + ", not " +
                                 to_string(stated));
            attr.quantity = {qname, declared};
        }
        name_out = expect_dotted("port name");
        expect_punct(";", "port declaration");
        return attr;
    }

    Interface parse_interface_body(const char* what) {
        Interface iface;
        expect_punct("{", what);
        while (!is_punct("}")) {
            const Token at = cur_;
            std::string name;
            PortAttribute attr = parse_portdecl(name);
            if (!iface.ports.emplace(name, attr).second)
                semantic(at, "duplicate port name '" + name + "'");
        }
        bump();
        return iface;
    }

    void parse_pattern() {
        bump();
        const Token name_tok = cur_;
        const std::string name = expect_ident("pattern name");
        if (out_.doc.find_pattern(name))
            semantic(name_tok, "duplicate pattern name '" + name + "'");
        Pattern p;
        expect_punct("{", "pattern body");
        if (!is_ident("outer")) fail("pattern body", "'outer'");
        bump();
        p.outer = parse_interface_body("outer interface");

        while (is_ident("box")) {
            bump();
            const Token bt = cur_;
            const std::string bname = expect_dotted("box name");
            expect_punct(":", "box declaration");
            Box box;
            box.span = {bt.line, bt.column};
            const Token ft = cur_;
            const std::string fill = expect_ident("box fill");
            if (fill == "storage")
                box.fill = Fill::Storage;
            else if (fill == "reversible")
                box.fill = Fill::Reversible;
            else if (fill == "irreversible")
                box.fill = Fill::Irreversible;
            else if (fill == "composite") {
                box.fill = Fill::Composite;
                expect_punct("(", "composite reference");
                box.composite_ref = expect_ident("composite pattern name");
                expect_punct(")", "composite reference");
            } else {
                semantic(ft, "unknown fill '" + fill + "'");
            }
            box.iface = parse_interface_body("box interface");
            if (!p.boxes.emplace(bname, box).second)
                semantic(bt, "duplicate box name '" + bname + "'");
        }

        while (is_ident("junction")) {
            const Token jt = cur_;
            bump();
            expect_punct("{", "junction");
            Junction junc;
            junc.span = {jt.line, jt.column};
            for (;;) {
                const std::string path = expect_dotted("port reference");
                junc.ports.push_back(resolve_ref(p, path));
                if (is_punct(",")) {
                    bump();
                    continue;
                }
                break;
            }
            expect_punct("}", "junction");
            p.junctions.push_back(std::move(junc));
        }
        expect_punct("}", "pattern body");
        out_.doc.patterns.emplace_back(name, std::move(p));
    }

    // The box part of a dotted reference is the longest declared box name
    // prefix ("outer" is reserved); unresolved paths split at the first dot so
    // that validation reports the dangling box.
    static PortRef resolve_ref(const Pattern& p, const std::string& path) {
        if (path.rfind("outer.", 0) == 0) return {"outer", path.substr(6)};
        std::string best;
        for (const auto& [bname, box] : p.boxes) {
            (void)box;
            if (path.size() > bname.size() && path.compare(0, bname.size(), bname) == 0 &&
                path[bname.size()] == '.' && bname.size() > best.size())
                best = bname;
        }
        if (!best.empty()) return {best, path.substr(best.size() + 1)};
        const std::size_t dot = path.find('.');
        if (dot == std::string::npos) return {path, ""};
        return {path.substr(0, dot), path.substr(dot + 1)};
    }

    void parse_quantities() {
        bump();
        expect_punct("{", "quantities section");
        while (!is_punct("}")) {
            const Token at = cur_;
            const std::string name = expect_ident("quantity name");
            expect_punct(":", "quantity declaration");
            const Placement pl = expect_placement();
            expect_punct(";", "quantity declaration");
            if (builtin_quantities().count(name) || !out_.doc.quantities.emplace(name, pl).second)
                semantic(at, "duplicate quantity '" + name + "'");
        }
        bump();
    }

    void parse_bindings() {
        const Token at = cur_;
        bump();
        if (out_.doc.has_bindings) semantic(at, "duplicate bindings section");
        out_.doc.has_bindings = true;
        out_.doc.bindings.pattern_name = expect_ident("bound pattern name");
        expect_punct("{", "bindings section");
        while (!is_punct("}")) {
            const Token bt = cur_;
            const std::string box = expect_dotted("box name");
            expect_punct("->", "binding");
            BindingEntry entry;
            entry.component_id = expect_dotted("component id");
            entry.params = parse_params();
            expect_punct(";", "binding");
            if (!out_.doc.bindings.entries.emplace(box, entry).second)
                semantic(bt, "duplicate binding for box '" + box + "'");
        }
        bump();
    }

    void parse_keyvals(const char* what, std::map<std::string, Token>& raw) {
        expect_punct("{", what);
        while (!is_punct("}")) {
            const Token at = cur_;
            const std::string name = expect_ident("key");
            expect_punct("=", what);
            Token value = cur_;
            if (cur_.kind != Tok::Number && cur_.kind != Tok::Ident) fail(what, "value");
            bump();
            expect_punct(";", what);
            if (!raw.emplace(name, value).second) semantic(at, "duplicate key '" + name + "'");
        }
        bump();
    }

    double as_number(const Token& t) {
        if (t.kind != Tok::Number) semantic(t, "expected a numeric value");
        double v = 0.0;
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        return v;
    }

    void parse_domain() {
        const Token at = cur_;
        bump();
        if (out_.doc.has_domain) semantic(at, "duplicate domain section");
        out_.doc.has_domain = true;
        std::map<std::string, Token> raw;
        parse_keyvals("domain section", raw);
        for (const auto& [k, v] : raw) {
            if (k == "length")
                out_.doc.domain.length = as_number(v);
            else if (k == "cells")
                out_.doc.domain.cells = static_cast<long>(as_number(v));
            else if (k == "periodic") {
                if (v.kind != Tok::Ident || (v.text != "true" && v.text != "false"))
                    semantic(v, "periodic must be true or false");
                out_.doc.domain.periodic = v.text == "true";
            } else {
                semantic(v, "unknown domain key '" + k + "'");
            }
        }
    }

    void parse_sim() {
        const Token at = cur_;
        bump();
        if (out_.doc.has_sim) semantic(at, "duplicate sim section");
        out_.doc.has_sim = true;
        std::map<std::string, Token> raw;
        parse_keyvals("sim section", raw);
        for (const auto& [k, v] : raw) {
            if (k == "t_end")
                out_.doc.sim.t_end = as_number(v);
            else if (k == "dt")
                out_.doc.sim.dt = as_number(v);
            else if (k == "output_every")
                out_.doc.sim.output_every = static_cast<int>(as_number(v));
            else if (k == "integrator") {
                if (v.kind != Tok::Ident || (v.text != "rk4" && v.text != "midpoint"))
                    semantic(v, "integrator must be rk4 or midpoint");
                out_.doc.sim.integrator = v.text;
            } else if (k == "midpoint_tol")
                out_.doc.sim.midpoint_tol = as_number(v);
            else if (k == "midpoint_max_iter")
                out_.doc.sim.midpoint_max_iter = static_cast<int>(as_number(v));
            else if (k == "theta0")
                out_.doc.env.theta0 = as_number(v);
            else if (k == "mu0")
                out_.doc.env.mu0 = as_number(v);
            else
                semantic(v, "unknown sim key '" + k + "'");
        }
    }

    void parse_init() {
        bump();
        expect_punct("{", "init section");
        while (!is_punct("}")) {
            const Token at = cur_;
            const std::string field = expect_ident("field name");
            expect_punct(":", "init entry");
            InitSpec spec;
            const std::string preset = expect_ident("preset name");
            if (preset == "values") {
                expect_punct("(", "inline values");
                for (;;) {
                    spec.values.push_back(expect_number("inline value"));
                    if (is_punct(",")) {
                        bump();
                        continue;
                    }
                    break;
                }
                expect_punct(")", "inline values");
            } else {
                spec.preset = preset;
                spec.params = parse_params();
            }
            expect_punct(";", "init entry");
            if (!out_.doc.init.emplace(field, spec).second)
                semantic(at, "duplicate init entry for '" + field + "'");
        }
        bump();
    }

    Lexer lex_;
    Token cur_;
    ParseResult& out_;
};

}  // namespace

ParseResult parse(std::string_view text) {
    ParseResult result;
    try {
        Parser p(text, result);
        p.run();
        result.ok = true;
    } catch (const parse_abort&) {
        result.ok = false;
    }
    return result;
}

// =============================================================================
// Canonical serializer
// =============================================================================

namespace {

std::string fmt_number(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string portdecl_text(const std::string& name, const PortAttribute& a) {
    std::ostringstream os;
    switch (a.port_class) {
        case PortClass::State: os << "state"; break;
        case PortClass::Power: os << "power " << to_string(a.kind); break;
        case PortClass::Boundary:
            os << "boundary(" << to_string(a.side) << ", " << a.splitting_tag << ")";
            break;
    }
    os << " " << a.quantity.name << "(" << to_string(a.quantity.placement) << ") " << name
       << ";";
    return os.str();
}

std::string iface_text(const Interface& iface) {
    if (iface.ports.empty()) return "{}";
    std::ostringstream os;
    os << "{";
    for (const auto& [name, attr] : iface.ports) os << " " << portdecl_text(name, attr);
    os << " }";
    return os.str();
}

std::string params_text(const std::map<std::string, double>& params) {
    if (params.empty()) return "";
    std::ostringstream os;
    os << "(";
    bool first = true;
    for (const auto& [k, v] : params) {
        if (!first) os << ", ";
        first = false;
        os << k << " = " << fmt_number(v);
    }
    os << ")";
    return os.str();
}

}  // namespace

std::string serialize_pattern(const std::string& name, const Pattern& pat) {
    const Pattern p = canonicalize(pat);
    std::ostringstream os;
    os << "pattern " << name << " {\n";
    os << "  outer " << iface_text(p.outer) << "\n";
    for (const auto& [bname, box] : p.boxes) {
        os << "  box " << bname << ": " << to_string(box.fill);
        if (box.fill == Fill::Composite) os << "(" << box.composite_ref << ")";
        os << " " << iface_text(box.iface) << "\n";
    }
    for (const auto& junc : p.junctions) {
        os << "  junction { ";
        for (std::size_t i = 0; i < junc.ports.size(); ++i) {
            if (i) os << ", ";
            os << junc.ports[i].str();
        }
        os << " }\n";
    }
    os << "}\n";
    return os.str();
}

std::string serialize(const ModelDocument& doc) {
    std::ostringstream os;
    if (!doc.quantities.empty()) {
        os << "quantities {\n";
        for (const auto& [name, pl] : doc.quantities)
            os << "  " << name << ": " << to_string(pl) << ";\n";
        os << "}\n";
    }
    std::vector<std::pair<std::string, const Pattern*>> pats;
    for (const auto& [n, p] : doc.patterns) pats.emplace_back(n, &p);
    std::sort(pats.begin(), pats.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [n, p] : pats) os << serialize_pattern(n, *p);
    if (doc.has_bindings) {
        os << "bindings " << doc.bindings.pattern_name << " {\n";
        for (const auto& [box, entry] : doc.bindings.entries)
            os << "  " << box << " -> " << entry.component_id << params_text(entry.params)
               << ";\n";
        os << "}\n";
    }
    if (doc.has_domain) {
        os << "domain {\n";
        os << "  cells = " << doc.domain.cells << ";\n";
        os << "  length = " << fmt_number(doc.domain.length) << ";\n";
        os << "  periodic = " << (doc.domain.periodic ? "true" : "false") << ";\n";
        os << "}\n";
    }
    if (doc.has_sim) {
        os << "sim {\n";
        os << "  dt = " << fmt_number(doc.sim.dt) << ";\n";
        os << "  integrator = " << doc.sim.integrator << ";\n";
        if (doc.sim.integrator == "midpoint") {
            os << "  midpoint_max_iter = " << doc.sim.midpoint_max_iter << ";\n";
            os << "  midpoint_tol = " << fmt_number(doc.sim.midpoint_tol) << ";\n";
        }
        if (doc.env.mu0 != 0.0) os << "  mu0 = " << fmt_number(doc.env.mu0) << ";\n";
        os << "  output_every = " << doc.sim.output_every << ";\n";
        os << "  t_end = " << fmt_number(doc.sim.t_end) << ";\n";
        if (doc.env.theta0 != 1.0) os << "  theta0 = " << fmt_number(doc.env.theta0) << ";\n";
        os << "}\n";
    }
    if (!doc.init.empty()) {
        os << "init {\n";
        for (const auto& [field, spec] : doc.init) {
            os << "  " << field << ": ";
            if (spec.preset.empty()) {
                os << "values(";
                for (std::size_t i = 0; i < spec.values.size(); ++i) {
                    if (i) os << ", ";
                    os << fmt_number(spec.values[i]);
                }
                os << ")";
            } else {
                os << spec.preset << params_text(spec.params);
            }
            os << ";\n";
        }
        os << "}\n";
    }
    return os.str();
}

}  // namespace ephs
