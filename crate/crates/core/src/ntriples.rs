//! Line-oriented N-Triples reader and writer.
//!
//! Supported term forms: `<iri>`, `_:label`, and `"literal"` with an optional
//! `^^<datatype>` or language tag. Language tags are accepted and discarded;
//! such literals are typed `rdfs:Literal` like any other plain literal.
//! Literal escapes are limited to `\"`, `\\`, `\n`, and `\t`.
//!
//! Literals are interned by their canonical token (re-escaped value plus
//! compacted datatype), so equal values with equal datatypes collapse to one
//! term regardless of source spelling.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::graph::{Graph, GraphBuilder, Triple};
use crate::term::KindSet;

#[derive(Debug, Error)]
pub enum NtError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl NtError {
    fn syntax(line: usize, reason: impl Into<String>) -> NtError {
        NtError::Syntax {
            line,
            reason: reason.into(),
        }
    }
}

/// How to react to lines that fail to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// First bad line aborts the read.
    Strict,
    /// Bad lines are counted and skipped.
    Lenient,
}

/// A parsed term, before interning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal {
        value: String,
        datatype: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTriple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

/// Parses one line. Returns `Ok(None)` for blank lines and comments.
pub fn parse_line(line: &str, line_no: usize) -> Result<Option<ParsedTriple>, NtError> {
    let mut scan = Scanner {
        rest: line,
        line_no,
    };
    scan.skip_ws();
    if scan.rest.is_empty() || scan.rest.starts_with('#') {
        return Ok(None);
    }

    let subject = scan.term()?;
    if matches!(subject, Term::Literal { .. }) {
        return Err(NtError::syntax(line_no, "literal in subject position"));
    }
    scan.require_ws("after subject")?;
    let predicate = scan.term()?;
    if !matches!(predicate, Term::Iri(_)) {
        return Err(NtError::syntax(line_no, "predicate must be an IRI"));
    }
    scan.require_ws("after predicate")?;
    let object = scan.term()?;
    scan.skip_ws();
    if !scan.rest.starts_with('.') {
        return Err(NtError::syntax(line_no, "expected `.` after object"));
    }
    scan.rest = &scan.rest[1..];
    scan.skip_ws();
    if !scan.rest.is_empty() && !scan.rest.starts_with('#') {
        return Err(NtError::syntax(
            line_no,
            format!("unexpected trailing content `{}`", scan.rest.trim_end()),
        ));
    }
    Ok(Some(ParsedTriple {
        subject,
        predicate,
        object,
    }))
}

struct Scanner<'a> {
    rest: &'a str,
    line_no: usize,
}

impl<'a> Scanner<'a> {
    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn require_ws(&mut self, what: &str) -> Result<(), NtError> {
        if !self.rest.starts_with([' ', '\t']) {
            return Err(NtError::syntax(
                self.line_no,
                format!("expected whitespace {what}"),
            ));
        }
        self.skip_ws();
        Ok(())
    }

    fn term(&mut self) -> Result<Term, NtError> {
        match self.rest.chars().next() {
            Some('<') => self.iri().map(Term::Iri),
            Some('_') => self.blank(),
            Some('"') => self.literal(),
            Some(c) => Err(NtError::syntax(
                self.line_no,
                format!("unexpected character `{c}` where a term was expected"),
            )),
            None => Err(NtError::syntax(self.line_no, "unexpected end of line")),
        }
    }

    fn iri(&mut self) -> Result<String, NtError> {
        let body = &self.rest[1..];
        match body.find('>') {
            Some(end) => {
                let iri = &body[..end];
                self.rest = &body[end + 1..];
                if iri.is_empty() {
                    return Err(NtError::syntax(self.line_no, "empty IRI"));
                }
                Ok(iri.to_owned())
            }
            None => Err(NtError::syntax(self.line_no, "unterminated IRI")),
        }
    }

    fn blank(&mut self) -> Result<Term, NtError> {
        let body = match self.rest.strip_prefix("_:") {
            Some(b) => b,
            None => {
                return Err(NtError::syntax(
                    self.line_no,
                    "blank node label must start with `_:`",
                ))
            }
        };
        let end = body
            .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '-'))
            .unwrap_or(body.len());
        if end == 0 {
            return Err(NtError::syntax(self.line_no, "empty blank node label"));
        }
        let label = body[..end].to_owned();
        self.rest = &body[end..];
        Ok(Term::Blank(label))
    }

    fn literal(&mut self) -> Result<Term, NtError> {
        let mut value = String::new();
        let mut chars = self.rest[1..].char_indices();
        let after_quote;
        loop {
            match chars.next() {
                Some((i, '"')) => {
                    after_quote = i + 1;
                    break;
                }
                Some((_, '\\')) => match chars.next() {
                    Some((_, '"')) => value.push('"'),
                    Some((_, '\\')) => value.push('\\'),
                    Some((_, 'n')) => value.push('\n'),
                    Some((_, 't')) => value.push('\t'),
                    Some((_, c)) => {
                        return Err(NtError::syntax(
                            self.line_no,
                            format!("unsupported escape `\\{c}`"),
                        ))
                    }
                    None => {
                        return Err(NtError::syntax(self.line_no, "unterminated literal"));
                    }
                },
                Some((_, c)) => value.push(c),
                None => return Err(NtError::syntax(self.line_no, "unterminated literal")),
            }
        }
        self.rest = &self.rest[1 + after_quote..];

        if let Some(body) = self.rest.strip_prefix("^^") {
            self.rest = body;
            if !self.rest.starts_with('<') {
                return Err(NtError::syntax(self.line_no, "datatype must be an IRI"));
            }
            let datatype = self.iri()?;
            return Ok(Term::Literal {
                value,
                datatype: Some(datatype),
            });
        }
        if let Some(body) = self.rest.strip_prefix('@') {
            // Language tags carry no typing information here; drop them.
            let end = body
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(body.len());
            if end == 0 {
                return Err(NtError::syntax(self.line_no, "empty language tag"));
            }
            self.rest = &body[end..];
        }
        Ok(Term::Literal {
            value,
            datatype: None,
        })
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ReadStats {
    pub triples: usize,
    pub skipped_lines: usize,
}

/// Reads one N-Triples stream into `builder`. In lenient mode bad lines are
/// skipped and counted; in strict mode the first bad line aborts.
pub fn read_into<R: BufRead>(
    builder: &mut GraphBuilder,
    reader: R,
    mode: ParseMode,
) -> Result<ReadStats, NtError> {
    let mut stats = ReadStats::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                let err = NtError::syntax(line_no, "invalid UTF-8");
                match mode {
                    ParseMode::Strict => return Err(err),
                    ParseMode::Lenient => {
                        stats.skipped_lines += 1;
                        continue;
                    }
                }
            }
            Err(e) => return Err(NtError::Io(e)),
        };
        match parse_line(&line, line_no) {
            Ok(Some(parsed)) => {
                let t = intern_parsed(builder, parsed);
                builder.insert(t);
                stats.triples += 1;
            }
            Ok(None) => {}
            Err(e) => match mode {
                ParseMode::Strict => return Err(e),
                ParseMode::Lenient => stats.skipped_lines += 1,
            },
        }
    }
    Ok(stats)
}

fn intern_parsed(builder: &mut GraphBuilder, parsed: ParsedTriple) -> Triple {
    let s = intern_term(builder, parsed.subject);
    let p = intern_term(builder, parsed.predicate);
    let o = intern_term(builder, parsed.object);
    Triple::new(s, p, o)
}

fn intern_term(builder: &mut GraphBuilder, term: Term) -> crate::term::TermId {
    match term {
        Term::Iri(iri) => builder.intern(&iri, KindSet::EMPTY),
        Term::Blank(label) => builder.intern(&format!("_:{label}"), KindSet::EMPTY),
        Term::Literal { value, datatype } => {
            let token = literal_token(&value, datatype.as_deref());
            builder.intern_literal(&token, datatype.as_deref())
        }
    }
}

/// Resolves a parsed term against an existing graph's term table.
pub fn lookup_term(g: &Graph, term: &Term) -> Option<crate::term::TermId> {
    match term {
        Term::Iri(iri) => g.lookup(iri),
        Term::Blank(label) => g.lookup(&format!("_:{label}")),
        Term::Literal { value, datatype } => {
            g.lookup(&literal_token(value, datatype.as_deref()))
        }
    }
}

/// One component of a triple pattern: a term or a named variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Variable(String),
    Term(Term),
}

/// Parses a triple-pattern string such as `?x <p> "v"^^<dt>`, with an
/// optional trailing `.`. Variables are `?` followed by word characters.
pub fn parse_pattern(input: &str) -> Result<[PatternTerm; 3], NtError> {
    let mut scan = Scanner { rest: input, line_no: 0 };
    let mut parts = Vec::with_capacity(3);
    for i in 0..3 {
        if i == 0 {
            scan.skip_ws();
        } else {
            scan.require_ws("between pattern components")?;
        }
        if let Some(body) = scan.rest.strip_prefix('?') {
            let end = body
                .find(|c: char| !(c.is_alphanumeric() || c == '_'))
                .unwrap_or(body.len());
            if end == 0 {
                return Err(NtError::syntax(0, "empty variable name"));
            }
            parts.push(PatternTerm::Variable(body[..end].to_owned()));
            scan.rest = &body[end..];
        } else {
            parts.push(PatternTerm::Term(scan.term()?));
        }
    }
    scan.skip_ws();
    if let Some(rest) = scan.rest.strip_prefix('.') {
        scan.rest = rest;
        scan.skip_ws();
    }
    if !scan.rest.is_empty() {
        return Err(NtError::syntax(
            0,
            format!("unexpected trailing content `{}`", scan.rest.trim_end()),
        ));
    }
    if let PatternTerm::Term(Term::Literal { .. }) = parts[0] {
        return Err(NtError::syntax(0, "literal in subject position"));
    }
    if matches!(parts[1], PatternTerm::Term(ref t) if !matches!(t, Term::Iri(_))) {
        return Err(NtError::syntax(0, "bound predicate must be an IRI"));
    }
    let mut it = parts.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

/// Canonical token for a literal: re-escaped value, compacted datatype.
pub(crate) fn literal_token(value: &str, datatype: Option<&str>) -> String {
    let mut token = String::with_capacity(value.len() + 2);
    token.push('"');
    for c in value.chars() {
        match c {
            '"' => token.push_str("\\\""),
            '\\' => token.push_str("\\\\"),
            '\n' => token.push_str("\\n"),
            '\t' => token.push_str("\\t"),
            c => token.push(c),
        }
    }
    token.push('"');
    if let Some(dt) = datatype {
        let compact = crate::term::vocab::compact_iri(dt);
        token.push_str("^^<");
        token.push_str(compact.as_deref().unwrap_or(dt));
        token.push('>');
    }
    token
}

/// Parses a whole string as one graph. Convenience wrapper over [`read_into`].
pub fn parse_graph(input: &str, mode: ParseMode) -> Result<Graph, NtError> {
    let mut builder = GraphBuilder::new();
    read_into(&mut builder, input.as_bytes(), mode)?;
    builder
        .classify()
        .map_err(|e| NtError::syntax(0, e.to_string()))
}

/// Writes the graph back out, one triple per line, in insertion order.
pub fn serialize<W: Write>(g: &Graph, mut w: W) -> io::Result<()> {
    for &t in g.triples() {
        writeln!(
            w,
            "{} {} {} .",
            term_token(g, t.s),
            term_token(g, t.p),
            term_token(g, t.o)
        )?;
    }
    Ok(())
}

/// N-Triples token for one interned term.
pub fn term_token(g: &Graph, id: crate::term::TermId) -> String {
    let lexical = g.lexical(id);
    if g.is_literal(id) || lexical.starts_with("_:") {
        lexical.to_owned()
    } else {
        format!("<{lexical}>")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(line: &str) -> ParsedTriple {
        parse_line(line, 1).unwrap().expect("expected a triple")
    }

    #[test]
    fn parses_iri_triple() {
        let t = one("<plato> <wasBornIn> <athens> .");
        assert_eq!(t.subject, Term::Iri("plato".into()));
        assert_eq!(t.predicate, Term::Iri("wasBornIn".into()));
        assert_eq!(t.object, Term::Iri("athens".into()));
    }

    #[test]
    fn parses_typed_literal_object() {
        let t = one("<plato> <hasAge> \"80\"^^<xsd:integer> .");
        assert_eq!(
            t.object,
            Term::Literal {
                value: "80".into(),
                datatype: Some("xsd:integer".into())
            }
        );
    }

    #[test]
    fn language_tag_is_discarded() {
        let t = one("<athens> <label> \"Athens\"@en .");
        assert_eq!(
            t.object,
            Term::Literal {
                value: "Athens".into(),
                datatype: None
            }
        );
    }

    #[test]
    fn parses_blank_nodes_and_comments() {
        let t = one("_:b1 <knows> _:b2 . # trailing note");
        assert_eq!(t.subject, Term::Blank("b1".into()));
        assert_eq!(t.object, Term::Blank("b2".into()));
        assert!(parse_line("# only a comment", 1).unwrap().is_none());
        assert!(parse_line("   ", 1).unwrap().is_none());
    }

    #[test]
    fn escapes_round_trip() {
        let t = one(r#"<x> <says> "a\"b\\c\nd\te" ."#);
        assert_eq!(
            t.object,
            Term::Literal {
                value: "a\"b\\c\nd\te".into(),
                datatype: None
            }
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        let cases = [
            ("<a> <b> <c>", "missing dot"),
            ("<a> <b> .", "missing object"),
            ("\"lit\" <b> <c> .", "literal subject"),
            ("<a> _:b <c> .", "blank predicate"),
            ("<a> <b> \"open .", "unterminated literal"),
            ("<a> <b <c> .", "unterminated IRI"),
            (r#"<a> <b> "bad\q" ."#, "unsupported escape"),
            ("<a> <b> <c> . junk", "trailing content"),
        ];
        for (line, what) in cases {
            let res = parse_line(line, 7);
            match res {
                Err(NtError::Syntax { line: 7, .. }) => {}
                other => panic!("case `{what}`: expected syntax error at line 7, got {other:?}"),
            }
        }
    }

    #[test]
    fn lenient_mode_skips_bad_lines() {
        let input = "<a> <p> <b> .\nthis is not a triple\n<b> <p> <c> .\n";
        let mut builder = GraphBuilder::new();
        let stats = read_into(&mut builder, input.as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(stats.triples, 2);
        assert_eq!(stats.skipped_lines, 1);

        let mut builder = GraphBuilder::new();
        let err = read_into(&mut builder, input.as_bytes(), ParseMode::Strict).unwrap_err();
        assert!(matches!(err, NtError::Syntax { line: 2, .. }));
    }

    #[test]
    fn serialize_then_parse_reconstructs_the_graph() {
        let input = concat!(
            "<plato> <rdf:type> <philosopher> .\n",
            "<plato> <hasAge> \"80\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
            "_:b <note> \"a\\n\\\"quoted\\\"\"@en .\n",
        );
        let g = parse_graph(input, ParseMode::Strict).unwrap();
        let mut out = Vec::new();
        serialize(&g, &mut out).unwrap();
        let g2 = parse_graph(std::str::from_utf8(&out).unwrap(), ParseMode::Strict).unwrap();

        let render = |g: &Graph| {
            let mut lines: Vec<String> = g.triples().iter().map(|&t| g.format_triple(t)).collect();
            lines.sort();
            lines
        };
        assert_eq!(render(&g), render(&g2));
        // The datatype IRI is compacted, so both spellings share one term.
        assert!(g.lookup("\"80\"^^<xsd:integer>").is_some());
    }
}
