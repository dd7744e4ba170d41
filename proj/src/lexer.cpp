#include "lx/lexer.hpp"

#include <cctype>

#include "lx/value.hpp"

namespace lx {
namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

const char* kPuncts[] = {"==>", "===", "!==", "...", "==", "!=", "<=", ">=", "&&", "||", "=>", "??", "@@", "::",
                         "{",   "}",   "(",   ")",   "[",  "]",  "<",  ">",  ",",  ";",  ":",  ".",  "=",  "+",
                         "-",   "*",   "/",   "%",   "!",  "?",  "@",  "&",  "|"};

class Lexer {
public:
    Lexer(const std::string& src, const std::string& file) : src_(src), file_(file) {}

    std::vector<Token> run() {
        while (true) {
            skip_trivia();
            if (i_ >= src_.size()) break;
            lex_one();
        }
        if (diags_.has_errors()) throw CompileError(diags_);
        Token end;
        end.kind = TokKind::End;
        end.pos = here();
        out_.push_back(end);
        return out_;
    }

private:
    const std::string& src_;
    std::string file_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
    std::vector<Token> out_;
    Diagnostics diags_;

    SourcePos here() const { return SourcePos{file_, line_, col_}; }
    char peek(std::size_t k = 0) const { return i_ + k < src_.size() ? src_[i_ + k] : '\0'; }

    void advance(std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i_ < src_.size(); ++k) {
            char c = src_[i_++];
            if (c == '\n') {
                ++line_;
                col_ = 1;
            } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
                ++col_;
            }
        }
    }

    void skip_trivia() {
        while (i_ < src_.size()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && peek(1) == '/') {
                while (i_ < src_.size() && peek() != '\n') advance();
            } else if (c == '/' && peek(1) == '*') {
                SourcePos start = here();
                advance(2);
                while (i_ < src_.size() && !(peek() == '*' && peek(1) == '/')) advance();
                if (i_ >= src_.size()) {
                    diags_.error(start, "unterminated block comment");
                    return;
                }
                advance(2);
            } else {
                break;
            }
        }
    }

    bool prev_is(std::size_t back, TokKind k, const char* text) const {
        if (out_.size() < back) return false;
        const Token& t = out_[out_.size() - back];
        return t.kind == k && t.text == text;
    }

    bool regex_allowed() const {
        return out_.size() >= 3 && prev_is(1, TokKind::Punct, "=") && out_[out_.size() - 2].kind == TokKind::Ident &&
               prev_is(3, TokKind::Ident, "typedecl");
    }

    void push(TokKind k, std::string text, std::string suffix, SourcePos pos) {
        out_.push_back(Token{k, std::move(text), std::move(suffix), std::move(pos)});
    }

    std::string read_ident() {
        std::size_t s = i_;
        while (i_ < src_.size() && ident_char(peek())) advance();
        return src_.substr(s, i_ - s);
    }

    void lex_one() {
        SourcePos pos = here();
        char c = peek();
        if (ident_start(c)) {
            push(TokKind::Ident, read_ident(), "", pos);
            return;
        }
        if (c == '$') {
            advance();
            std::string name = ident_start(peek()) ? read_ident() : "";
            push(TokKind::Dollar, name, "", pos);
            return;
        }
        if (digit(c)) {
            lex_number(pos);
            return;
        }
        if (c == '"') {
            lex_string(pos);
            return;
        }
        if (c == '/' && regex_allowed()) {
            advance();
            std::string body;
            while (i_ < src_.size() && peek() != '/' && peek() != '\n') {
                if (peek() == '\\' && peek(1) == '/') {
                    body += "\\/";
                    advance(2);
                    continue;
                }
                body += peek();
                advance();
            }
            if (peek() != '/') {
                diags_.error(pos, "unterminated regex literal");
                return;
            }
            advance();
            push(TokKind::Regex, body, "", pos);
            return;
        }
        for (const char* p : kPuncts) {
            std::size_t n = std::char_traits<char>::length(p);
            if (src_.compare(i_, n, p) == 0) {
                advance(n);
                push(TokKind::Punct, p, "", pos);
                return;
            }
        }
        diags_.error(pos, std::string("unknown character '") + c + "'");
        advance();
    }

    void lex_number(const SourcePos& pos) {
        std::size_t s = i_;
        while (digit(peek())) advance();
        bool after_dot = !out_.empty() && out_.back().kind == TokKind::Punct && out_.back().text == ".";
        if (after_dot) {
            push(TokKind::Number, src_.substr(s, i_ - s), "", pos);
            return;
        }
        if (peek() == '/' && digit(peek(1))) {
            std::size_t k = 1;
            while (digit(peek(k))) ++k;
            if (peek(k) == 'R' && !ident_char(peek(k + 1))) {
                advance(k + 1);
                push(TokKind::Rational, src_.substr(s, i_ - s - 1), "R", pos);
                return;
            }
        }
        bool frac = false;
        if (peek() == '.' && digit(peek(1))) {
            frac = true;
            advance();
            while (digit(peek())) advance();
        }
        std::string text = src_.substr(s, i_ - s);
        std::string suffix;
        char c = peek();
        if (c == 'i' || c == 'n' || c == 'I' || c == 'N' || c == 'f' || c == 'd') {
            if (!ident_char(peek(1)) || peek(1) == '_') {
                suffix = std::string(1, c);
                advance();
            }
        }
        if (peek() == '_' && ident_start(peek(1)) && peek(1) != '_') {
            advance();
            std::string name = read_ident();
            push(TokKind::TypedNumber, text + suffix, name, pos);
            return;
        }
        if (ident_char(peek())) {
            diags_.error(pos, "malformed numeric literal suffix '" + read_ident() + "'");
            return;
        }
        if (frac && (suffix == "i" || suffix == "n" || suffix == "I" || suffix == "N")) {
            diags_.error(pos, "integer suffix on a fractional literal");
            return;
        }
        push(TokKind::Number, text, suffix, pos);
    }

    void lex_string(const SourcePos& pos) {
        advance();
        std::string out;
        while (true) {
            if (i_ >= src_.size() || peek() == '\n') {
                diags_.error(pos, "unterminated string literal");
                return;
            }
            char c = peek();
            if (c == '"') {
                advance();
                break;
            }
            if (c == '\\') {
                char e = peek(1);
                advance(2);
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    case '\\': out += '\\'; break;
                    case '"': out += '"'; break;
                    case 'u': {
                        if (peek() != '{') {
                            diags_.error(pos, "malformed unicode escape");
                            return;
                        }
                        advance();
                        std::string hex;
                        while (std::isxdigit(static_cast<unsigned char>(peek()))) {
                            hex += peek();
                            advance();
                        }
                        if (peek() != '}' || hex.empty() || hex.size() > 6) {
                            diags_.error(pos, "malformed unicode escape");
                            return;
                        }
                        advance();
                        out += utf8_encode({static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16))});
                        break;
                    }
                    default:
                        diags_.error(pos, std::string("unknown escape '\\") + e + "'");
                        return;
                }
                continue;
            }
            out += c;
            advance();
        }
        if (ident_start(peek())) {
            std::string name = read_ident();
            push(TokKind::TypedString, out, name, pos);
            return;
        }
        push(TokKind::String, out, "", pos);
    }
};

}  // namespace

std::vector<Token> tokenize(const std::string& source, const std::string& file) { return Lexer(source, file).run(); }

std::string escape_string(const std::string& utf8) {
    std::string out = "\"";
    for (auto cp : utf8_decode(utf8)) {
        switch (cp) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (cp < 0x20 || cp == 0x7F) {
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "\\u{%x}", cp);
                    out += buf;
                } else {
                    out += utf8_encode({cp});
                }
        }
    }
    return out + "\"";
}

}  // namespace lx
