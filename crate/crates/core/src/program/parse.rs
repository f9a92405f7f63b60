//! Program text: parenthesised prefix expressions.
//!
//! Standard individuals are a single expression. Extended individuals are
//! written `main: <expr> adf: <expr>`.

use super::{FunctionSet, Individual, NodeKind, ProgramError, Tree};

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Label(&'a str),
    Word(&'a str),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token<'_>)>, ProgramError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'(' {
            out.push((i, Token::Open));
            i += 1;
        } else if c == b')' {
            out.push((i, Token::Close));
            i += 1;
        } else if c == b';' {
            // comment to end of line
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if c.is_ascii_alphanumeric() || c == b'-' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b':' {
                out.push((start, Token::Label(&text[start..i])));
                i += 1;
            } else {
                out.push((start, Token::Word(&text[start..i])));
            }
        } else {
            return Err(ProgramError::Syntax {
                pos: i,
                message: format!("unexpected character {:?}", text[i..].chars().next().unwrap()),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
    text_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(usize, Token<'a>)> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.text_len, |t| t.0)
    }

    fn word(&self, at: usize, w: &str, set: FunctionSet) -> Result<NodeKind, ProgramError> {
        let lower = w.to_ascii_lowercase();
        let kind = NodeKind::from_token(&lower).ok_or_else(|| ProgramError::Syntax {
            pos: at,
            message: format!("unknown token {w:?}"),
        })?;
        if !set.contains(kind) {
            return Err(ProgramError::MixedFunctionSet {
                kind: kind.token(),
                set,
            });
        }
        Ok(kind)
    }

    fn expr(&mut self, set: FunctionSet, out: &mut Vec<NodeKind>) -> Result<(), ProgramError> {
        let Some((at, tok)) = self.peek().cloned() else {
            return Err(ProgramError::Syntax {
                pos: self.text_len,
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok {
            Token::Word(w) => {
                let kind = self.word(at, w, set)?;
                if kind.arity() != 0 {
                    return Err(ProgramError::Arity {
                        pos: at,
                        op: kind.token(),
                        expected: kind.arity(),
                        found: 0,
                    });
                }
                out.push(kind);
                Ok(())
            }
            Token::Open => {
                let (op_at, op) = match self.peek().cloned() {
                    Some((p, Token::Word(w))) => (p, w),
                    _ => {
                        return Err(ProgramError::Syntax {
                            pos: self.here(),
                            message: "expected an operator after '('".into(),
                        })
                    }
                };
                self.pos += 1;
                let kind = self.word(op_at, op, set)?;
                out.push(kind);
                let mut found = 0;
                loop {
                    match self.peek() {
                        Some((_, Token::Close)) => {
                            self.pos += 1;
                            break;
                        }
                        None => {
                            return Err(ProgramError::Syntax {
                                pos: self.text_len,
                                message: "unclosed '('".into(),
                            })
                        }
                        _ => {
                            self.expr(set, out)?;
                            found += 1;
                        }
                    }
                }
                if found != kind.arity() {
                    return Err(ProgramError::Arity {
                        pos: at,
                        op: kind.token(),
                        expected: kind.arity(),
                        found,
                    });
                }
                Ok(())
            }
            Token::Close => Err(ProgramError::Syntax {
                pos: at,
                message: "unexpected ')'".into(),
            }),
            Token::Label(l) => Err(ProgramError::Syntax {
                pos: at,
                message: format!("unexpected label {l:?}"),
            }),
        }
    }

    fn tree(&mut self, set: FunctionSet) -> Result<Tree, ProgramError> {
        let mut nodes = Vec::new();
        self.expr(set, &mut nodes)?;
        Tree::from_prefix(nodes)
    }

    fn expect_label(&mut self, name: &str) -> Result<(), ProgramError> {
        match self.peek() {
            Some((_, Token::Label(l))) if l.eq_ignore_ascii_case(name) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ProgramError::Syntax {
                pos: self.here(),
                message: format!("expected '{name}:'"),
            }),
        }
    }

    fn finish(&self) -> Result<(), ProgramError> {
        match self.peek() {
            None => Ok(()),
            Some((p, _)) => Err(ProgramError::Syntax {
                pos: *p,
                message: "trailing input after program".into(),
            }),
        }
    }
}

/// Parses program text into an individual.
pub fn parse_program(text: &str) -> Result<Individual, ProgramError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        text_len: text.len(),
    };
    let individual = if matches!(p.peek(), Some((_, Token::Label(_)))) {
        p.expect_label("main")?;
        let main = p.tree(FunctionSet::ExtendedMain)?;
        p.expect_label("adf")?;
        let adf = p.tree(FunctionSet::ExtendedAdf)?;
        Individual::extended(main, adf)?
    } else {
        Individual::standard(p.tree(FunctionSet::Standard)?)?
    };
    p.finish()?;
    Ok(individual)
}

fn write_node(tree: &Tree, idx: usize, out: &mut String) {
    let kind = tree.kind(idx);
    if kind.is_leaf() {
        out.push_str(kind.token());
        return;
    }
    out.push('(');
    out.push_str(kind.token());
    for c in tree.children(idx) {
        out.push(' ');
        write_node(tree, c, out);
    }
    out.push(')');
}

/// Canonical text of a single tree.
pub fn format_tree(tree: &Tree) -> String {
    let mut out = String::new();
    write_node(tree, 0, &mut out);
    out
}

/// Canonical lowercase program text.
pub fn format_program(individual: &Individual) -> String {
    match individual.adf() {
        None => format_tree(individual.main()),
        Some(adf) => format!(
            "main: {} adf: {}",
            format_tree(individual.main()),
            format_tree(adf)
        ),
    }
}
