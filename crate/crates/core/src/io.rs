//! Text formats for instances and move sequences.
//!
//! Instance files: the first line is `S B` (stack count, block count),
//! followed by one line per stack, `n p1 ... pn`, listed bottom to top.
//! Move files: one move per line, `R b from to` or `T b from`, with stacks
//! numbered from 1.

use std::fmt::Write as _;

use thiserror::Error;

use crate::config::{Block, ConfigError, Configuration};
use crate::moves::{Move, MoveSequence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("input is empty")]
    Empty,
    #[error("expected an integer, found {0:?}")]
    NotAnInteger(String),
    #[error("header must be `stacks blocks`")]
    BadHeader,
    #[error("stack line declares {declared} blocks but lists {found}")]
    StackLength { declared: usize, found: usize },
    #[error("header declares {declared} stacks but the file has {found}")]
    StackCount { declared: usize, found: usize },
    #[error("header declares {declared} blocks but the stacks hold {found}")]
    BlockCount { declared: usize, found: usize },
    #[error("duplicate priority {0}")]
    DuplicatePriority(Block),
    #[error("priorities must be positive")]
    ZeroPriority,
    #[error("priorities must be exactly 1..={0}; use renumbering to relabel them")]
    NotCanonical(usize),
    #[error("unknown move kind {0:?}; expected R or T")]
    UnknownMove(String),
    #[error("wrong number of fields for a {0} move")]
    MoveArity(char),
    #[error("stack numbers start at 1")]
    ZeroStack,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Relabel arbitrary distinct priorities as `1..=B` instead of rejecting them.
    pub renumber: bool,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn int<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, ParseError> {
    tok.parse()
        .map_err(|_| err(line, ParseErrorKind::NotAnInteger(tok.to_string())))
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_instance(text: &str) -> Result<Configuration, ParseError> {
    parse_instance_with(text, ParseOptions::default())
}

pub fn parse_instance_with(text: &str, opts: ParseOptions) -> Result<Configuration, ParseError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(err(1, ParseErrorKind::Empty))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(err(hline, ParseErrorKind::BadHeader));
    }
    let n_stacks: usize = int(head[0], hline)?;
    let n_blocks: usize = int(head[1], hline)?;

    let mut stacks = Vec::with_capacity(n_stacks);
    let mut last_line = hline;
    for (lno, line) in lines {
        last_line = lno;
        if stacks.len() == n_stacks {
            return Err(err(
                lno,
                ParseErrorKind::StackCount {
                    declared: n_stacks,
                    found: stacks.len() + 1,
                },
            ));
        }
        let mut toks = line.split_whitespace();
        let declared: usize = int(toks.next().unwrap(), lno)?;
        let blocks = toks
            .map(|t| int::<Block>(t, lno))
            .collect::<Result<Vec<_>, _>>()?;
        if blocks.len() != declared {
            return Err(err(
                lno,
                ParseErrorKind::StackLength {
                    declared,
                    found: blocks.len(),
                },
            ));
        }
        if let Err(e) = Configuration::new(stacks.iter().cloned().chain([blocks.clone()]).collect()) {
            let kind = match e {
                ConfigError::DuplicatePriority(b) => ParseErrorKind::DuplicatePriority(b),
                _ => ParseErrorKind::ZeroPriority,
            };
            return Err(err(lno, kind));
        }
        stacks.push(blocks);
    }
    if stacks.len() != n_stacks {
        return Err(err(
            last_line,
            ParseErrorKind::StackCount {
                declared: n_stacks,
                found: stacks.len(),
            },
        ));
    }
    let found: usize = stacks.iter().map(Vec::len).sum();
    if found != n_blocks {
        return Err(err(
            hline,
            ParseErrorKind::BlockCount {
                declared: n_blocks,
                found,
            },
        ));
    }
    let c = Configuration::new(stacks).expect("validated line by line");
    if c.is_canonical() {
        Ok(c)
    } else if opts.renumber {
        Ok(c.renumbered())
    } else {
        Err(err(hline, ParseErrorKind::NotCanonical(n_blocks)))
    }
}

/// Writes the instance format. The height limit and retrieval counter are not
/// part of the file.
pub fn serialize_instance(c: &Configuration) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", c.num_stacks(), c.num_blocks()).unwrap();
    for st in c.stacks() {
        write!(out, "{}", st.len()).unwrap();
        for b in st {
            write!(out, " {b}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_moves(text: &str) -> Result<MoveSequence, ParseError> {
    let mut seq = MoveSequence::default();
    for (lno, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let stack = |tok: &str| -> Result<usize, ParseError> {
            let s: usize = int(tok, lno)?;
            s.checked_sub(1).ok_or(err(lno, ParseErrorKind::ZeroStack))
        };
        let m = match toks[0] {
            "R" | "r" => {
                if toks.len() != 4 {
                    return Err(err(lno, ParseErrorKind::MoveArity('R')));
                }
                Move::Relocate {
                    block: int(toks[1], lno)?,
                    from: stack(toks[2])?,
                    to: stack(toks[3])?,
                }
            }
            "T" | "t" => {
                if toks.len() != 3 {
                    return Err(err(lno, ParseErrorKind::MoveArity('T')));
                }
                Move::Retrieve {
                    block: int(toks[1], lno)?,
                    from: stack(toks[2])?,
                }
            }
            other => return Err(err(lno, ParseErrorKind::UnknownMove(other.to_string()))),
        };
        seq.push(m);
    }
    Ok(seq)
}

pub fn serialize_moves(seq: &MoveSequence) -> String {
    seq.moves().iter().map(|m| format!("{m}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_small_instance() {
        let c = parse_instance("2 3\n2 1 2\n1 3\n").unwrap();
        assert_eq!(c.stacks(), &[vec![1, 2], vec![3]]);
        assert_eq!(c.height_limit(), None);
    }

    #[test]
    fn single_stack_with_well_placed_top() {
        let c = parse_instance("1 2\n2 2 1\n").unwrap();
        assert_eq!(c.top(0), Some(1));
        assert!(c.bp_set().is_empty());
    }

    #[test]
    fn figure_a_top_layer() {
        let c = parse_instance(fixtures::FIGURE_A).unwrap();
        let top: Vec<_> = (0..4).map(|s| c.top(s).unwrap()).collect();
        assert_eq!(top, vec![7, 2, 3, 5]);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_instance("2 3\n2 1 2\n1 2\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.kind, ParseErrorKind::DuplicatePriority(2));

        let e = parse_instance("2 3\n2 1 x\n1 3\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(e.kind, ParseErrorKind::NotAnInteger(_)));

        let e = parse_instance("3 3\n2 1 2\n1 3\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::StackCount { declared: 3, found: 2 }));

        let e = parse_instance("2 4\n2 1 2\n1 3\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::BlockCount { declared: 4, found: 3 }));

        let e = parse_instance("2 3\n3 1 2\n1 3\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::StackLength { declared: 3, found: 2 }));

        assert_eq!(parse_instance("").unwrap_err().kind, ParseErrorKind::Empty);
    }

    #[test]
    fn renumber_on_load() {
        let text = "2 3\n2 10 30\n1 20\n";
        assert!(matches!(
            parse_instance(text).unwrap_err().kind,
            ParseErrorKind::NotCanonical(3)
        ));
        let c = parse_instance_with(text, ParseOptions { renumber: true }).unwrap();
        assert_eq!(c.stacks(), &[vec![1, 3], vec![2]]);
    }

    #[test]
    fn empty_stacks_allowed() {
        let c = parse_instance("3 2\n2 2 1\n0\n0\n").unwrap();
        assert_eq!(c.num_stacks(), 3);
        assert_eq!(serialize_instance(&c), "3 2\n2 2 1\n0\n0\n");
    }

    #[test]
    fn move_file_round_trip() {
        let text = "R 2 1 2\nT 1 1\nT 2 2\n";
        let seq = parse_moves(text).unwrap();
        assert_eq!(
            seq.moves()[0],
            Move::Relocate {
                block: 2,
                from: 0,
                to: 1
            }
        );
        assert_eq!(serialize_moves(&seq), text);
        assert!(parse_moves("X 1 1\n").is_err());
        assert!(parse_moves("T 1 0\n").is_err());
    }
}
