//! Minimal Java tokenizer for metric extraction. Sources need not compile;
//! the lexer only has to classify tokens and strip comments. String and char
//! literal bodies are collapsed to fixed placeholder tokens, so every string
//! literal counts as the same operand symbol (likewise char literals).

use crate::error::{Error, Result};

/// The 50 reserved words of the language (including the unused `const` and
/// `goto`). `true`, `false` and `null` lex as literals.
pub const RESERVED_WORDS: [&str; 50] = [
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

pub const STRING_PLACEHOLDER: &str = "\"<str>\"";
pub const CHAR_PLACEHOLDER: &str = "'<char>'";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Literal,
    Operator,
    Separator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
}

const OPS3: [&str; 3] = [">>>", "<<=", ">>="];
const OPS2: [&str; 20] = [
    "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "&=", "|=", "^=",
    "%=", "<<", ">>", "->", "::",
];

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn slice_from(&self, start: usize) -> String {
        self.chars[start..self.pos].iter().collect()
    }

    fn starts_with(&self, pat: &str) -> bool {
        pat.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c))
    }
}

pub fn tokenize_java(source: &str) -> Result<Vec<Token>> {
    let mut lx = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = lx.peek() {
        if c.is_whitespace() {
            lx.bump();
            continue;
        }

        // comments
        if lx.starts_with("//") {
            while let Some(c) = lx.peek() {
                if c == '\n' {
                    break;
                }
                lx.bump();
            }
            continue;
        }
        if lx.starts_with("/*") {
            let open_line = lx.line;
            lx.bump();
            lx.bump();
            loop {
                if lx.starts_with("*/") {
                    lx.bump();
                    lx.bump();
                    break;
                }
                if lx.bump().is_none() {
                    return Err(Error::UnterminatedBlockComment { line: open_line });
                }
            }
            continue;
        }

        // string and char literals collapse to placeholders
        if c == '"' || c == '\'' {
            let open_line = lx.line;
            let quote = c;
            lx.bump();
            loop {
                match lx.peek() {
                    None | Some('\n') => {
                        return Err(if quote == '"' {
                            Error::UnterminatedStringLiteral { line: open_line }
                        } else {
                            Error::UnterminatedCharLiteral { line: open_line }
                        });
                    }
                    Some('\\') => {
                        lx.bump();
                        if lx.bump().is_none() {
                            return Err(if quote == '"' {
                                Error::UnterminatedStringLiteral { line: open_line }
                            } else {
                                Error::UnterminatedCharLiteral { line: open_line }
                            });
                        }
                    }
                    Some(q) if q == quote => {
                        lx.bump();
                        break;
                    }
                    Some(_) => {
                        lx.bump();
                    }
                }
            }
            tokens.push(Token {
                kind: TokenKind::Literal,
                text: if quote == '"' {
                    STRING_PLACEHOLDER.to_string()
                } else {
                    CHAR_PLACEHOLDER.to_string()
                },
                line: open_line,
            });
            continue;
        }

        // numbers (including `.5`, hex, exponents with signs)
        let next_is_digit = lx.peek_at(1).is_some_and(|c| c.is_ascii_digit());
        if c.is_ascii_digit() || (c == '.' && next_is_digit) {
            let line = lx.line;
            let start = lx.pos;
            let mut prev = '\0';
            while let Some(c) = lx.peek() {
                let exp_sign =
                    (c == '+' || c == '-') && matches!(prev, 'e' | 'E' | 'p' | 'P');
                if c.is_ascii_alphanumeric() || c == '_' || c == '.' || exp_sign {
                    prev = c;
                    lx.bump();
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Literal,
                text: lx.slice_from(start),
                line,
            });
            continue;
        }

        // words: reserved, value literals, identifiers
        if is_ident_start(c) {
            let line = lx.line;
            let start = lx.pos;
            while lx.peek().is_some_and(is_ident_continue) {
                lx.bump();
            }
            let text = lx.slice_from(start);
            let kind = if RESERVED_WORDS.contains(&text.as_str()) {
                TokenKind::Keyword
            } else if matches!(text.as_str(), "true" | "false" | "null") {
                TokenKind::Literal
            } else {
                TokenKind::Identifier
            };
            tokens.push(Token { kind, text, line });
            continue;
        }

        // separators
        if matches!(c, '(' | ')' | '{' | '}' | '[' | ']' | ';' | ',') {
            let line = lx.line;
            lx.bump();
            tokens.push(Token {
                kind: TokenKind::Separator,
                text: c.to_string(),
                line,
            });
            continue;
        }

        // operators, greedy longest match
        let line = lx.line;
        if lx.starts_with(">>>=") {
            for _ in 0..4 {
                lx.bump();
            }
            tokens.push(Token {
                kind: TokenKind::Operator,
                text: ">>>=".to_string(),
                line,
            });
            continue;
        }
        if let Some(op) = OPS3.iter().find(|op| lx.starts_with(op)) {
            for _ in 0..3 {
                lx.bump();
            }
            tokens.push(Token {
                kind: TokenKind::Operator,
                text: (*op).to_string(),
                line,
            });
            continue;
        }
        if let Some(op) = OPS2.iter().find(|op| lx.starts_with(op)) {
            for _ in 0..2 {
                lx.bump();
            }
            tokens.push(Token {
                kind: TokenKind::Operator,
                text: (*op).to_string(),
                line,
            });
            continue;
        }
        // single char operator; anything unrecognized also lands here
        lx.bump();
        tokens.push(Token {
            kind: TokenKind::Operator,
            text: c.to_string(),
            line,
        });
    }

    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn test_comment_only_input() {
        let toks = tokenize_java("// nothing\n/* still\nnothing */\n").unwrap();
        assert!(toks.is_empty());
    }

    #[test]
    fn test_simple_statement() {
        let toks = tokenize_java("if (x) { return; }").unwrap();
        assert_eq!(texts(&toks), vec!["if", "(", "x", ")", "{", "return", ";", "}"]);
        assert_eq!(toks[0].kind, TokenKind::Keyword);
        assert_eq!(toks[2].kind, TokenKind::Identifier);
        assert_eq!(toks[4].kind, TokenKind::Separator);
    }

    #[test]
    fn test_string_contents_do_not_leak_keywords() {
        let toks = tokenize_java("String s = \"if while for\";").unwrap();
        assert_eq!(
            texts(&toks),
            vec!["String", "s", "=", STRING_PLACEHOLDER, ";"]
        );
        assert!(!toks.iter().any(|t| t.kind == TokenKind::Keyword));
    }

    #[test]
    fn test_escaped_quote_inside_string() {
        let toks = tokenize_java(r#"a = "x\"y";"#).unwrap();
        assert_eq!(texts(&toks), vec!["a", "=", STRING_PLACEHOLDER, ";"]);
    }

    #[test]
    fn test_char_literal() {
        let toks = tokenize_java(r"char c = '\n';").unwrap();
        assert_eq!(texts(&toks), vec!["char", "c", "=", CHAR_PLACEHOLDER, ";"]);
    }

    #[test]
    fn test_unterminated_block_comment_line() {
        let err = tokenize_java("int a;\n/* open\nmore").unwrap_err();
        assert!(matches!(err, Error::UnterminatedBlockComment { line: 2 }));
    }

    #[test]
    fn test_unterminated_string_line() {
        let err = tokenize_java("int a;\nString s = \"oops\nint b;").unwrap_err();
        assert!(matches!(err, Error::UnterminatedStringLiteral { line: 2 }));
    }

    #[test]
    fn test_numeric_literals_single_tokens() {
        let toks = tokenize_java("x = 0x1F + 1.5e-3 + .5 + 10_000L;").unwrap();
        assert_eq!(
            texts(&toks),
            vec!["x", "=", "0x1F", "+", "1.5e-3", "+", ".5", "+", "10_000L", ";"]
        );
        assert!(toks
            .iter()
            .filter(|t| t.text != "x" && t.text != "=" && t.text != "+" && t.text != ";")
            .all(|t| t.kind == TokenKind::Literal));
    }

    #[test]
    fn test_greedy_operator_match() {
        let toks = tokenize_java("a >>>= b >>> c >> d > e").unwrap();
        assert_eq!(
            texts(&toks),
            vec!["a", ">>>=", "b", ">>>", "c", ">>", "d", ">", "e"]
        );
        let toks = tokenize_java("a<=b; a<b; x&&y; p->q; A::m").unwrap();
        assert!(texts(&toks).contains(&"<="));
        assert!(texts(&toks).contains(&"&&"));
        assert!(texts(&toks).contains(&"->"));
        assert!(texts(&toks).contains(&"::"));
    }

    #[test]
    fn test_value_words_are_literals() {
        let toks = tokenize_java("boolean b = true; Object o = null;").unwrap();
        let lits: Vec<&Token> = toks.iter().filter(|t| t.kind == TokenKind::Literal).collect();
        assert_eq!(lits.len(), 2);
        assert_eq!(lits[0].text, "true");
        assert_eq!(lits[1].text, "null");
    }

    #[test]
    fn test_line_numbers() {
        let toks = tokenize_java("int a;\nint b;\n\nint c;").unwrap();
        let lines: Vec<usize> = toks.iter().map(|t| t.line).collect();
        assert_eq!(lines, vec![1, 1, 1, 2, 2, 2, 4, 4, 4]);
    }

    #[test]
    fn test_division_is_not_a_comment() {
        let toks = tokenize_java("x = a / b;").unwrap();
        assert_eq!(texts(&toks), vec!["x", "=", "a", "/", "b", ";"]);
    }
}
