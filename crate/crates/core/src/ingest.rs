//! Reader and writer for the CoNLL-2012 style column format.
//!
//! One token per line with whitespace separated columns:
//!
//! ```text
//! doc-id  part  token-index  token  POS  NE  coref
//! ```
//!
//! `token-index` restarts at 0 for every sentence and sentences are separated
//! by blank lines. The NE column uses the OntoNotes bracket notation
//! (`(PERSON*`, `*`, `*)`, `(PERSON)` / `(PERSON*)`) and the coreference column
//! uses `-` or `|`-joined `(id`, `id)` and `(id)` items. `#begin document` and
//! `#end document` lines are accepted and ignored; a change of the
//! `(doc-id, part)` pair starts a new document. Full OntoNotes rows (12 or more
//! columns) are also accepted, reading the NE column from position 11 and the
//! coreference column from the last position.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub text: String,
    pub sentence: usize,
    #[serde(default)]
    pub pos: String,
}

/// Inclusive token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MentionSpan {
    pub start: usize,
    pub end: usize,
    pub chain: Option<String>,
}

impl MentionSpan {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedEntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl NamedEntitySpan {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }

    pub fn is_person(&self) -> bool {
        self.label == "PERSON"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub id: String,
    #[serde(default)]
    pub part: u32,
    pub tokens: Vec<Token>,
    pub mentions: Vec<MentionSpan>,
    /// chain id -> indices into `mentions`
    pub chains: BTreeMap<String, Vec<usize>>,
    pub entities: Vec<NamedEntitySpan>,
}

impl AnnotatedDocument {
    /// Corpus-unique key: the document id, suffixed with the part when it is not 0.
    pub fn key(&self) -> String {
        if self.part == 0 {
            self.id.clone()
        } else {
            format!("{}#{:03}", self.id, self.part)
        }
    }

    /// Documents without any PERSON span are kept but cannot produce inputs.
    pub fn is_eligible(&self) -> bool {
        self.entities.iter().any(|e| e.is_person())
    }

    pub fn sentence_count(&self) -> usize {
        self.tokens.last().map_or(0, |t| t.sentence + 1)
    }

    /// Token texts grouped by sentence.
    pub fn sentences(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = vec![Vec::new(); self.sentence_count()];
        for t in &self.tokens {
            out[t.sentence].push(t.text.clone());
        }
        out
    }

    pub fn texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    pub fn span_text(&self, span: Span) -> Vec<&str> {
        self.tokens[span.start..=span.end]
            .iter()
            .map(|t| t.text.as_str())
            .collect()
    }

    /// Builds a document from parts, sorting mentions and rebuilding the chain map.
    pub fn from_parts(
        id: impl Into<String>,
        part: u32,
        tokens: Vec<Token>,
        mut mentions: Vec<MentionSpan>,
        mut entities: Vec<NamedEntitySpan>,
    ) -> AnnotatedDocument {
        mentions.sort_by(|a, b| {
            a.start
                .cmp(&b.start)
                .then(b.end.cmp(&a.end))
                .then(a.chain.cmp(&b.chain))
        });
        entities.sort_by(|a, b| a.start.cmp(&b.start).then(a.end.cmp(&b.end)));
        let mut chains: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, m) in mentions.iter().enumerate() {
            if let Some(c) = &m.chain {
                chains.entry(c.clone()).or_default().push(i);
            }
        }
        AnnotatedDocument {
            id: id.into(),
            part,
            tokens,
            mentions,
            chains,
            entities,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    TokenIndex,
    SentenceOrder,
    SpanOrder,
    SpanOutOfRange,
    CrossSentenceMention,
    EmptyChain,
    DanglingChainMention,
    UnchainedMention,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("document {doc}: {message}")]
    Integrity { doc: String, message: String },
}

/// Lists every invariant violation in `doc`; an empty list means valid.
pub fn validate_document(doc: &AnnotatedDocument) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |kind, message: String| out.push(Diagnostic { kind, message });
    let n = doc.tokens.len();

    for (i, t) in doc.tokens.iter().enumerate() {
        if t.index != i {
            push(
                DiagnosticKind::TokenIndex,
                format!("token at position {i} has index {}", t.index),
            );
        }
        if i > 0 && t.sentence < doc.tokens[i - 1].sentence {
            push(
                DiagnosticKind::SentenceOrder,
                format!("sentence index decreases at token {i}"),
            );
        }
    }

    let check_span = |what: &str, start: usize, end: usize, push: &mut dyn FnMut(DiagnosticKind, String)| -> bool {
        if start > end {
            push(
                DiagnosticKind::SpanOrder,
                format!("{what} {start}-{end} has start after end"),
            );
            return false;
        }
        if end >= n {
            push(
                DiagnosticKind::SpanOutOfRange,
                format!("{what} {start}-{end} exceeds {n} tokens"),
            );
            return false;
        }
        true
    };

    for m in &doc.mentions {
        if check_span("mention", m.start, m.end, &mut push)
            && doc.tokens[m.start].sentence != doc.tokens[m.end].sentence
        {
            push(
                DiagnosticKind::CrossSentenceMention,
                format!("mention {}-{} crosses a sentence boundary", m.start, m.end),
            );
        }
    }
    for e in &doc.entities {
        check_span(&format!("{} entity", e.label), e.start, e.end, &mut push);
    }

    let mut referenced = HashSet::new();
    for (chain, members) in &doc.chains {
        if members.is_empty() {
            push(DiagnosticKind::EmptyChain, format!("chain {chain} has no mentions"));
        }
        for &idx in members {
            match doc.mentions.get(idx) {
                Some(m) if m.chain.as_deref() == Some(chain.as_str()) => {
                    referenced.insert(idx);
                }
                _ => push(
                    DiagnosticKind::DanglingChainMention,
                    format!("chain {chain} references missing mention {idx}"),
                ),
            }
        }
    }
    for (i, m) in doc.mentions.iter().enumerate() {
        if m.chain.is_some() && !referenced.contains(&i) {
            push(
                DiagnosticKind::UnchainedMention,
                format!("mention {}-{} is not listed in its chain", m.start, m.end),
            );
        }
    }
    out
}

pub fn read_conll_corpus(path: &Path) -> Result<Vec<AnnotatedDocument>, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_conll_corpus(&text)
}

struct DocBuilder {
    id: String,
    part: u32,
    tokens: Vec<Token>,
    sentence: usize,
    sentence_pos: usize,
    mentions: Vec<MentionSpan>,
    open_mentions: HashMap<String, Vec<usize>>,
    entities: Vec<NamedEntitySpan>,
    open_entity: Option<(usize, String, usize)>,
}

impl DocBuilder {
    fn new(id: &str, part: u32) -> DocBuilder {
        DocBuilder {
            id: id.to_string(),
            part,
            tokens: Vec::new(),
            sentence: 0,
            sentence_pos: 0,
            mentions: Vec::new(),
            open_mentions: HashMap::new(),
            entities: Vec::new(),
            open_entity: None,
        }
    }

    fn break_sentence(&mut self) {
        if self.sentence_pos > 0 {
            self.sentence += 1;
            self.sentence_pos = 0;
        }
    }

    fn integrity(&self, message: String) -> IngestError {
        IngestError::Integrity {
            doc: self.id.clone(),
            message,
        }
    }

    fn finish(self) -> Result<AnnotatedDocument, IngestError> {
        if let Some((start, label, line)) = &self.open_entity {
            return Err(self.integrity(format!(
                "{label} entity opened at token {start} (line {line}) is never closed"
            )));
        }
        let mut unclosed: Vec<_> = self
            .open_mentions
            .iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(c, s)| format!("({c} at token {}", s[0]))
            .collect();
        if !unclosed.is_empty() {
            unclosed.sort();
            return Err(self.integrity(format!(
                "unbalanced coreference brackets: {}",
                unclosed.join(", ")
            )));
        }
        let doc =
            AnnotatedDocument::from_parts(self.id, self.part, self.tokens, self.mentions, self.entities);
        let diags = validate_document(&doc);
        if let Some(first) = diags.first() {
            return Err(IngestError::Integrity {
                doc: doc.key(),
                message: first.to_string(),
            });
        }
        Ok(doc)
    }
}

/// Parses a whole corpus; documents come back in file order.
pub fn parse_conll_corpus(text: &str) -> Result<Vec<AnnotatedDocument>, IngestError> {
    let mut docs: Vec<AnnotatedDocument> = Vec::new();
    let mut seen: HashSet<(String, u32)> = HashSet::new();
    let mut current: Option<DocBuilder> = None;

    let mut flush = |b: DocBuilder, docs: &mut Vec<AnnotatedDocument>| -> Result<(), IngestError> {
        if !seen.insert((b.id.clone(), b.part)) {
            return Err(b.integrity("duplicate document id".to_string()));
        }
        docs.push(b.finish()?);
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            if let Some(b) = current.as_mut() {
                b.break_sentence();
            }
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let (ne_col, coref_col) = match cols.len() {
            7 => (cols[5], cols[6]),
            n if n >= 12 => (cols[10], cols[n - 1]),
            n => {
                return Err(IngestError::Parse {
                    line: line_no,
                    message: format!("expected 7 columns (or a 12+ column OntoNotes row), found {n}"),
                })
            }
        };
        let part: u32 = cols[1].parse().map_err(|_| IngestError::Parse {
            line: line_no,
            message: format!("part `{}` is not a number", cols[1]),
        })?;
        let same_doc = current
            .as_ref()
            .is_some_and(|b| b.id == cols[0] && b.part == part);
        if !same_doc {
            if let Some(b) = current.take() {
                flush(b, &mut docs)?;
            }
            current = Some(DocBuilder::new(cols[0], part));
        }
        let b = current.as_mut().expect("builder present");

        let word_index: usize = cols[2].parse().map_err(|_| IngestError::Parse {
            line: line_no,
            message: format!("token index `{}` is not a number", cols[2]),
        })?;
        if word_index != b.sentence_pos {
            return Err(IngestError::Parse {
                line: line_no,
                message: format!(
                    "token index {word_index} out of sequence (expected {})",
                    b.sentence_pos
                ),
            });
        }
        let index = b.tokens.len();
        b.tokens.push(Token {
            index,
            text: cols[3].to_string(),
            sentence: b.sentence,
            pos: if cols[4] == "-" { String::new() } else { cols[4].to_string() },
        });
        b.sentence_pos += 1;

        parse_ne_field(b, ne_col, index, line_no)?;
        parse_coref_field(b, coref_col, index, line_no)?;
    }
    if let Some(b) = current.take() {
        flush(b, &mut docs)?;
    }
    Ok(docs)
}

fn parse_ne_field(b: &mut DocBuilder, field: &str, index: usize, line: usize) -> Result<(), IngestError> {
    if field == "*" || field == "-" {
        return Ok(());
    }
    let bad = || IngestError::Parse {
        line,
        message: format!("malformed NE field `{field}`"),
    };
    let mut rest = field;
    if let Some(stripped) = rest.strip_prefix('(') {
        let label_end = stripped.find(['*', ')']).ok_or_else(bad)?;
        let label = &stripped[..label_end];
        if label.is_empty() {
            return Err(bad());
        }
        if let Some((open, l, _)) = &b.open_entity {
            return Err(b.integrity(format!(
                "nested NE {label} at token {index} inside {l} opened at {open}"
            )));
        }
        b.open_entity = Some((index, label.to_string(), line));
        rest = &stripped[label_end..];
    }
    let rest = rest.strip_prefix('*').unwrap_or(rest);
    match rest {
        "" => Ok(()),
        ")" => {
            let (start, label, _) = b.open_entity.take().ok_or_else(|| {
                b.integrity(format!("NE closed at token {index} without an opening bracket"))
            })?;
            b.entities.push(NamedEntitySpan {
                start,
                end: index,
                label,
            });
            Ok(())
        }
        _ => Err(bad()),
    }
}

fn parse_coref_field(b: &mut DocBuilder, field: &str, index: usize, line: usize) -> Result<(), IngestError> {
    if field == "-" {
        return Ok(());
    }
    for item in field.split('|') {
        let opens = item.starts_with('(');
        let closes = item.ends_with(')');
        let id = item.trim_start_matches('(').trim_end_matches(')');
        if id.is_empty() || (!opens && !closes) || id.contains(['(', ')']) {
            return Err(IngestError::Parse {
                line,
                message: format!("malformed coreference item `{item}`"),
            });
        }
        if opens && closes {
            b.mentions.push(MentionSpan {
                start: index,
                end: index,
                chain: Some(id.to_string()),
            });
        } else if opens {
            b.open_mentions.entry(id.to_string()).or_default().push(index);
        } else {
            let start = b
                .open_mentions
                .get_mut(id)
                .and_then(|s| s.pop())
                .ok_or_else(|| {
                    b.integrity(format!(
                        "unbalanced coreference brackets: `{id})` at token {index} has no opening"
                    ))
                })?;
            b.mentions.push(MentionSpan {
                start,
                end: index,
                chain: Some(id.to_string()),
            });
        }
    }
    Ok(())
}

/// Writes documents back into the 7-column layout read by [`parse_conll_corpus`].
pub fn write_conll(docs: &[AnnotatedDocument]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&format!("#begin document ({}); part {:03}\n", doc.id, doc.part));
        let n = doc.tokens.len();
        let mut ne = vec![String::from("*"); n];
        for e in &doc.entities {
            if e.start == e.end {
                ne[e.start] = format!("({})", e.label);
            } else {
                ne[e.start] = format!("({}*", e.label);
                ne[e.end] = "*)".to_string();
            }
        }
        let mut coref: Vec<Vec<String>> = vec![Vec::new(); n];
        let chained: Vec<&MentionSpan> = doc.mentions.iter().filter(|m| m.chain.is_some()).collect();
        for i in 0..n {
            let mut closes: Vec<&&MentionSpan> = chained
                .iter()
                .filter(|m| m.end == i && m.start < i)
                .collect();
            closes.sort_by(|a, b| b.start.cmp(&a.start));
            let mut opens: Vec<&&MentionSpan> = chained
                .iter()
                .filter(|m| m.start == i && m.end > i)
                .collect();
            opens.sort_by(|a, b| b.end.cmp(&a.end));
            let singles = chained.iter().filter(|m| m.start == i && m.end == i);
            let field = &mut coref[i];
            for m in closes {
                field.push(format!("{})", m.chain.as_deref().unwrap_or_default()));
            }
            for m in opens {
                field.push(format!("({}", m.chain.as_deref().unwrap_or_default()));
            }
            for m in singles {
                field.push(format!("({})", m.chain.as_deref().unwrap_or_default()));
            }
        }
        let mut pos_in_sentence = 0;
        for (i, t) in doc.tokens.iter().enumerate() {
            if i > 0 && t.sentence != doc.tokens[i - 1].sentence {
                out.push('\n');
                pos_in_sentence = 0;
            }
            let pos = if t.pos.is_empty() { "-" } else { t.pos.as_str() };
            let cf = if coref[i].is_empty() {
                "-".to_string()
            } else {
                coref[i].join("|")
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                doc.id, doc.part, pos_in_sentence, t.text, pos, ne[i], cf
            ));
            pos_in_sentence += 1;
        }
        out.push_str("\n#end document\n");
    }
    out
}
