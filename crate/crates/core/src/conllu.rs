//! Universal Dependencies annotations and the CoNLL-U text format.
//!
//! Blocks are validated on the way in: integer ids and heads, a single root
//! carrying the `root` relation, heads that point at existing tokens, and no
//! cycles. A block that breaks any of these is reported and skipped so a
//! noisy parse never reaches the filters.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Universal part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Upos {
    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Adv => "ADV",
            Upos::Aux => "AUX",
            Upos::Cconj => "CCONJ",
            Upos::Det => "DET",
            Upos::Intj => "INTJ",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Part => "PART",
            Upos::Pron => "PRON",
            Upos::Propn => "PROPN",
            Upos::Punct => "PUNCT",
            Upos::Sconj => "SCONJ",
            Upos::Sym => "SYM",
            Upos::Verb => "VERB",
            Upos::X => "X",
        }
    }
}

impl FromStr for Upos {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "ADJ" => Upos::Adj,
            "ADP" => Upos::Adp,
            "ADV" => Upos::Adv,
            "AUX" => Upos::Aux,
            "CCONJ" => Upos::Cconj,
            "DET" => Upos::Det,
            "INTJ" => Upos::Intj,
            "NOUN" => Upos::Noun,
            "NUM" => Upos::Num,
            "PART" => Upos::Part,
            "PRON" => Upos::Pron,
            "PROPN" => Upos::Propn,
            "PUNCT" => Upos::Punct,
            "SCONJ" => Upos::Sconj,
            "SYM" => Upos::Sym,
            "VERB" => Upos::Verb,
            "X" => Upos::X,
            _ => return Err(()),
        })
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Morphological features, kept sorted by name as CoNLL-U requires.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feats(BTreeMap<String, String>);

impl Feats {
    pub fn new() -> Self {
        Feats::default()
    }

    /// Parses a FEATS column: `_` or `Name=Value|Name=Value`.
    pub fn parse(column: &str) -> Option<Self> {
        let mut map = BTreeMap::new();
        if column != "_" {
            for pair in column.split('|') {
                let (k, v) = pair.split_once('=')?;
                if k.is_empty() || v.is_empty() {
                    return None;
                }
                map.insert(k.to_string(), v.to_string());
            }
        }
        Some(Feats(map))
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(String::as_str)
    }

    /// True when feature `name` is present with exactly `value`.
    pub fn has(&self, name: &str, value: &str) -> bool {
        self.get(name) == Some(value)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.0.insert(name.into(), value.into());
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Feats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Feats {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Feats(
            iter.into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: u32,
    pub form: String,
    pub lemma: String,
    pub upos: Upos,
    pub feats: Feats,
    /// Index of the governing token, 0 for the root.
    pub head: u32,
    pub deprel: String,
}

impl Token {
    /// Relation without its subtype (`nsubj:pass` -> `nsubj`).
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }
}

/// Nouns and proper nouns marked `Number=Plur`.
pub fn is_plural_noun(tok: &Token) -> bool {
    matches!(tok.upos, Upos::Noun | Upos::Propn) && tok.feats.has("Number", "Plur")
}

/// Identifies the sentence a parse belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpanRef {
    pub doc_id: String,
    pub sent_index: u32,
}

impl SpanRef {
    pub fn new(doc_id: impl Into<String>, sent_index: u32) -> Self {
        SpanRef {
            doc_id: doc_id.into(),
            sent_index,
        }
    }
}

/// A dependency-parsed sentence. Construct through [`ParsedSentence::new`] or
/// the CoNLL-U reader so the tree invariants hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSentence {
    pub span_ref: SpanRef,
    /// Value of the `# text = ...` comment, when present.
    pub text: Option<String>,
    tokens: Vec<Token>,
    root: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "kebab-case")]
pub enum BlockErrorKind {
    #[error("block has no tokens")]
    Empty,
    #[error("line does not have 10 tab-separated columns")]
    BadColumns,
    #[error("token id is not a positive integer or ids are not consecutive")]
    BadIndex,
    #[error("head is not an integer")]
    BadHead,
    #[error("unknown part-of-speech tag")]
    BadUpos,
    #[error("malformed FEATS column")]
    BadFeats,
    #[error("head points at a token that does not exist")]
    DanglingHead,
    #[error("token is its own head")]
    SelfHead,
    #[error("no root token")]
    NoRoot,
    #[error("more than one root token")]
    MultipleRoots,
    #[error("root relation does not match head 0")]
    RootRelation,
    #[error("head links form a cycle")]
    Cycle,
    #[error("missing doc_id or sent_index comment")]
    MissingMetadata,
}

impl BlockErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockErrorKind::Empty => "empty",
            BlockErrorKind::BadColumns => "bad-columns",
            BlockErrorKind::BadIndex => "bad-index",
            BlockErrorKind::BadHead => "bad-head",
            BlockErrorKind::BadUpos => "bad-upos",
            BlockErrorKind::BadFeats => "bad-feats",
            BlockErrorKind::DanglingHead => "dangling-head",
            BlockErrorKind::SelfHead => "self-head",
            BlockErrorKind::NoRoot => "no-root",
            BlockErrorKind::MultipleRoots => "multiple-roots",
            BlockErrorKind::RootRelation => "root-relation",
            BlockErrorKind::Cycle => "cycle",
            BlockErrorKind::MissingMetadata => "missing-metadata",
        }
    }
}

/// A rejected CoNLL-U block. `line` is the 1-based line where it starts.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("block at line {line}: {reason}")]
pub struct BlockError {
    pub line: usize,
    pub reason: BlockErrorKind,
}

impl ParsedSentence {
    /// Validates the tree and builds the sentence.
    pub fn new(
        span_ref: SpanRef,
        text: Option<String>,
        tokens: Vec<Token>,
    ) -> Result<Self, BlockErrorKind> {
        if tokens.is_empty() {
            return Err(BlockErrorKind::Empty);
        }
        let n = tokens.len() as u32;
        let mut root = None;
        for (i, tok) in tokens.iter().enumerate() {
            if tok.index != i as u32 + 1 {
                return Err(BlockErrorKind::BadIndex);
            }
            if tok.head == tok.index {
                return Err(BlockErrorKind::SelfHead);
            }
            if tok.head > n {
                return Err(BlockErrorKind::DanglingHead);
            }
            if (tok.head == 0) != (tok.deprel == "root") {
                return Err(BlockErrorKind::RootRelation);
            }
            if tok.head == 0 {
                if root.is_some() {
                    return Err(BlockErrorKind::MultipleRoots);
                }
                root = Some(tok.index);
            }
        }
        let root = root.ok_or(BlockErrorKind::NoRoot)?;
        // Every walk up the head chain must reach 0 within n steps.
        for tok in &tokens {
            let mut cur = tok.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(BlockErrorKind::Cycle);
                }
                cur = tokens[cur as usize - 1].head;
            }
        }
        Ok(ParsedSentence {
            span_ref,
            text,
            tokens,
            root,
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based index.
    pub fn token(&self, index: u32) -> Option<&Token> {
        index
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i as usize))
    }

    pub fn root(&self) -> &Token {
        &self.tokens[self.root as usize - 1]
    }

    /// Direct dependents of `index`, left to right.
    pub fn children(&self, index: u32) -> impl Iterator<Item = &Token> + '_ {
        self.tokens.iter().filter(move |t| t.head == index)
    }

    /// Space-joined token forms.
    pub fn surface(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.form);
        }
        out
    }

    /// Serializes as one CoNLL-U block, including the trailing blank line.
    /// XPOS, DEPS and MISC are written as `_`.
    pub fn to_conllu(&self) -> String {
        let mut out = format!(
            "# doc_id = {}\n# sent_index = {}\n",
            self.span_ref.doc_id, self.span_ref.sent_index
        );
        if let Some(text) = &self.text {
            out.push_str("# text = ");
            out.push_str(text);
            out.push('\n');
        }
        for t in &self.tokens {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t_\t{}\t{}\t{}\t_\t_\n",
                t.index, t.form, t.lemma, t.upos, t.feats, t.head, t.deprel
            ));
        }
        out.push('\n');
        out
    }
}

/// Reader options.
#[derive(Debug, Clone, Copy)]
pub struct ReadOptions {
    /// Reject blocks without `# doc_id` / `# sent_index` comments. Off for
    /// annotation-service responses, whose reference is known to the caller.
    pub require_metadata: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            require_metadata: true,
        }
    }
}

/// Iterator over the blocks of a CoNLL-U document.
pub struct Blocks<'a> {
    lines: core::iter::Peekable<core::iter::Enumerate<core::str::Lines<'a>>>,
    options: ReadOptions,
}

/// Reads every block of `input`, yielding one result per block.
pub fn read_blocks(input: &str, options: ReadOptions) -> Blocks<'_> {
    Blocks {
        lines: input.lines().enumerate().peekable(),
        options,
    }
}

impl<'a> Iterator for Blocks<'a> {
    type Item = Result<ParsedSentence, BlockError>;

    fn next(&mut self) -> Option<Self::Item> {
        while self.lines.peek().is_some_and(|(_, l)| l.trim().is_empty()) {
            self.lines.next();
        }
        let (first, _) = *self.lines.peek()?;
        let mut block = Vec::new();
        while let Some((_, line)) = self.lines.peek() {
            if line.trim().is_empty() {
                break;
            }
            block.push(*line);
            self.lines.next();
        }
        Some(
            parse_block(&block, self.options, None).map_err(|reason| BlockError {
                line: first + 1,
                reason,
            }),
        )
    }
}

/// Parses one block given as lines. `span_ref`, when given, is used if the
/// block carries no metadata comments.
pub fn parse_block(
    lines: &[&str],
    options: ReadOptions,
    span_ref: Option<&SpanRef>,
) -> Result<ParsedSentence, BlockErrorKind> {
    let mut doc_id = None;
    let mut sent_index = None;
    let mut text = None;
    let mut tokens = Vec::new();
    for line in lines {
        let line = line.trim_end_matches('\r');
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "doc_id" => doc_id = Some(value.to_string()),
                    "sent_index" => sent_index = value.parse::<u32>().ok(),
                    "text" => text = Some(value.to_string()),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(BlockErrorKind::BadColumns);
        }
        // Multiword ranges and empty nodes are not syntactic words.
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index = cols[0]
            .parse::<u32>()
            .map_err(|_| BlockErrorKind::BadIndex)?;
        let upos = cols[3]
            .parse::<Upos>()
            .map_err(|_| BlockErrorKind::BadUpos)?;
        let feats = Feats::parse(cols[5]).ok_or(BlockErrorKind::BadFeats)?;
        let head = cols[6]
            .parse::<u32>()
            .map_err(|_| BlockErrorKind::BadHead)?;
        tokens.push(Token {
            index,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos,
            feats,
            head,
            deprel: cols[7].to_string(),
        });
    }
    let span_ref = match (doc_id, sent_index, span_ref) {
        (Some(d), Some(s), _) => SpanRef::new(d, s),
        (_, _, Some(r)) => r.clone(),
        _ if !options.require_metadata => SpanRef::new("", 0),
        _ => return Err(BlockErrorKind::MissingMetadata),
    };
    ParsedSentence::new(span_ref, text, tokens)
}

/// Parses a single block given as text, e.g. one element of an annotation
/// service response.
pub fn parse_block_text(block: &str, span_ref: &SpanRef) -> Result<ParsedSentence, BlockErrorKind> {
    let lines: Vec<&str> = block.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut parsed = parse_block(
        &lines,
        ReadOptions {
            require_metadata: false,
        },
        Some(span_ref),
    )?;
    parsed.span_ref = span_ref.clone();
    Ok(parsed)
}
