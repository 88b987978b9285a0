//! Candidate selection: the prefilter over the first words of a sentence, the
//! bare-plural dependency check and quantifier labeling.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conllu::{is_plural_noun, ParsedSentence, Token, Upos};
use crate::text::normalize_word;

/// The eleven quantifiers, in inventory order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    All,
    Most,
    Many,
    Some,
    Few,
    No,
    Often,
    Generally,
    Typically,
    Usually,
    Normally,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantifierKind {
    /// Occupies the determiner slot of the subject: "most ravens".
    Determiner,
    /// Adverb modifying the main predicate: "tigers are normally striped".
    Adverbial,
}

impl Quantifier {
    pub const ALL: [Quantifier; 11] = [
        Quantifier::All,
        Quantifier::Most,
        Quantifier::Many,
        Quantifier::Some,
        Quantifier::Few,
        Quantifier::No,
        Quantifier::Often,
        Quantifier::Generally,
        Quantifier::Typically,
        Quantifier::Usually,
        Quantifier::Normally,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Quantifier::All => "all",
            Quantifier::Most => "most",
            Quantifier::Many => "many",
            Quantifier::Some => "some",
            Quantifier::Few => "few",
            Quantifier::No => "no",
            Quantifier::Often => "often",
            Quantifier::Generally => "generally",
            Quantifier::Typically => "typically",
            Quantifier::Usually => "usually",
            Quantifier::Normally => "normally",
        }
    }

    pub fn kind(self) -> QuantifierKind {
        match self {
            Quantifier::All
            | Quantifier::Most
            | Quantifier::Many
            | Quantifier::Some
            | Quantifier::Few
            | Quantifier::No => QuantifierKind::Determiner,
            _ => QuantifierKind::Adverbial,
        }
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a quantifier in the inventory")]
pub struct UnknownQuantifier;

impl FromStr for Quantifier {
    type Err = UnknownQuantifier;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Quantifier::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or(UnknownQuantifier)
    }
}

/// Lookup over the eleven quantifiers. Matching is on lowercased words.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuantifierInventory;

impl QuantifierInventory {
    pub fn standard() -> Self {
        QuantifierInventory
    }

    pub fn entries(&self) -> &'static [Quantifier; 11] {
        &Quantifier::ALL
    }

    /// The quantifier spelled by `word`, compared case-insensitively.
    pub fn lookup(&self, word: &str) -> Option<Quantifier> {
        if word.len() > 9 {
            return None;
        }
        let mut buf = [0u8; 9];
        for (b, c) in buf.iter_mut().zip(word.bytes()) {
            *b = c.to_ascii_lowercase();
        }
        let lower = core::str::from_utf8(&buf[..word.len()]).ok()?;
        lower.parse().ok()
    }

    pub fn adverbials(&self) -> impl Iterator<Item = Quantifier> {
        Quantifier::ALL
            .into_iter()
            .filter(|q| q.kind() == QuantifierKind::Adverbial)
    }

    pub fn determiners(&self) -> impl Iterator<Item = Quantifier> {
        Quantifier::ALL
            .into_iter()
            .filter(|q| q.kind() == QuantifierKind::Determiner)
    }
}

/// Outcome of the cheap first-words check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrefilterOutcome {
    QuantifierInitial(Quantifier),
    /// 1-based position (at most 4) of the first plural noun.
    PluralEarly(u8),
    Reject,
}

impl PrefilterOutcome {
    pub fn is_candidate(self) -> bool {
        !matches!(self, PrefilterOutcome::Reject)
    }
}

/// How many leading words the prefilter looks at.
pub const PREFILTER_WINDOW: usize = 4;

/// Selects sentences that start with a quantifier or have a plural noun among
/// their first four words. Only `words[..4]` is ever read.
pub fn prefilter(words: &[Token], inventory: &QuantifierInventory) -> PrefilterOutcome {
    let window = &words[..words.len().min(PREFILTER_WINDOW)];
    let Some(first) = window.first() else {
        return PrefilterOutcome::Reject;
    };
    if let Some(q) = inventory.lookup(&normalize_word(&first.form)) {
        // Discourse "No, ..." is not a quantifier.
        let comma_follows =
            first.form.trim_end().ends_with(',') || window.get(1).is_some_and(|t| t.form == ",");
        if q == Quantifier::No && comma_follows {
            return PrefilterOutcome::Reject;
        }
        return PrefilterOutcome::QuantifierInitial(q);
    }
    window
        .iter()
        .position(is_plural_noun)
        .map_or(PrefilterOutcome::Reject, |p| {
            PrefilterOutcome::PluralEarly(p as u8 + 1)
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "kebab-case")]
pub enum FailReason {
    #[error("no plural nominal subject attached to the root")]
    NoPluralSubject,
    #[error("root is not a verb or auxiliary and has no copula or passive auxiliary")]
    BadRoot,
    #[error("verb is not present indicative third person plural")]
    BadVerbFeats,
}

impl FailReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailReason::NoPluralSubject => "no-plural-subject",
            FailReason::BadRoot => "bad-root",
            FailReason::BadVerbFeats => "bad-verb-feats",
        }
    }
}

/// Result of the three-condition bare-plural check. Token indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarePluralCheck {
    Passed { subject: u32, verb: u32 },
    Failed(FailReason),
}

impl BarePluralCheck {
    pub fn passed(&self) -> bool {
        matches!(self, BarePluralCheck::Passed { .. })
    }

    pub fn subject_index(&self) -> Option<u32> {
        match *self {
            BarePluralCheck::Passed { subject, .. } => Some(subject),
            BarePluralCheck::Failed(_) => None,
        }
    }

    pub fn verb_index(&self) -> Option<u32> {
        match *self {
            BarePluralCheck::Passed { verb, .. } => Some(verb),
            BarePluralCheck::Failed(_) => None,
        }
    }

    pub fn fail_reason(&self) -> Option<FailReason> {
        match *self {
            BarePluralCheck::Passed { .. } => None,
            BarePluralCheck::Failed(r) => Some(r),
        }
    }
}

/// Leftmost `nsubj`/`nsubj:pass` dependent of the root that is a plural noun.
pub fn plural_subject(parsed: &ParsedSentence) -> Option<&Token> {
    let root = parsed.root().index;
    parsed
        .children(root)
        .find(|t| (t.deprel == "nsubj" || t.deprel == "nsubj:pass") && is_plural_noun(t))
}

/// The token that carries finiteness for the main clause: a copula or
/// passive auxiliary attached to the root when there is one, otherwise the
/// root itself when it is a verb or auxiliary.
pub fn main_verb(parsed: &ParsedSentence) -> Option<&Token> {
    let root = parsed.root();
    parsed
        .children(root.index)
        .find(|t| t.deprel == "cop" || t.deprel == "aux:pass")
        .or_else(|| matches!(root.upos, Upos::Verb | Upos::Aux).then_some(root))
}

/// Present tense, indicative mood, plural number, third person.
pub fn has_generic_verb_feats(tok: &Token) -> bool {
    let f = &tok.feats;
    f.has("Tense", "Pres")
        && f.has("Mood", "Ind")
        && f.has("Number", "Plur")
        && f.has("Person", "3")
}

/// Checks that the sentence is a bare-plural clause: a plural nominal subject
/// of the root, a verbal root (or copula / passive auxiliary), and a present
/// indicative third-person plural verb.
pub fn is_bare_plural(parsed: &ParsedSentence) -> BarePluralCheck {
    let Some(subject) = plural_subject(parsed) else {
        return BarePluralCheck::Failed(FailReason::NoPluralSubject);
    };
    let Some(verb) = main_verb(parsed) else {
        return BarePluralCheck::Failed(FailReason::BadRoot);
    };
    if !has_generic_verb_feats(verb) {
        return BarePluralCheck::Failed(FailReason::BadVerbFeats);
    }
    BarePluralCheck::Passed {
        subject: subject.index,
        verb: verb.index,
    }
}

/// Where the quantifier sits in the sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantifierPosition {
    Initial,
    PreVerbal,
    PostVerbal,
}

impl QuantifierPosition {
    pub fn as_str(self) -> &'static str {
        match self {
            QuantifierPosition::Initial => "initial",
            QuantifierPosition::PreVerbal => "pre-verbal",
            QuantifierPosition::PostVerbal => "post-verbal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenLabel {
    Generic,
    Quantified {
        quantifier: Quantifier,
        position: QuantifierPosition,
    },
}

impl GenLabel {
    pub fn quantifier(&self) -> Option<Quantifier> {
        match *self {
            GenLabel::Generic => None,
            GenLabel::Quantified { quantifier, .. } => Some(quantifier),
        }
    }
}

/// Labels a bare-plural sentence as generic or quantified.
///
/// Sentence-initial quantifiers come from the prefilter. Otherwise the
/// leftmost adverbial quantifier whose head is the root or the main verb
/// labels the sentence; its position is taken relative to the root, the
/// lexical predicate. Quantifiers inside subordinate clauses do not count.
pub fn detect_label(
    parsed: &ParsedSentence,
    prefilter: PrefilterOutcome,
    inventory: &QuantifierInventory,
) -> GenLabel {
    if let PrefilterOutcome::QuantifierInitial(quantifier) = prefilter {
        return GenLabel::Quantified {
            quantifier,
            position: QuantifierPosition::Initial,
        };
    }
    let root = parsed.root().index;
    let verb = main_verb(parsed).map(|t| t.index);
    parsed
        .tokens()
        .iter()
        .filter(|t| t.head == root || Some(t.head) == verb)
        .find_map(|t| {
            let q = inventory.lookup(&t.form)?;
            (q.kind() == QuantifierKind::Adverbial).then_some((t.index, q))
        })
        .map_or(GenLabel::Generic, |(index, quantifier)| {
            GenLabel::Quantified {
                quantifier,
                position: if index < root {
                    QuantifierPosition::PreVerbal
                } else {
                    QuantifierPosition::PostVerbal
                },
            }
        })
}
