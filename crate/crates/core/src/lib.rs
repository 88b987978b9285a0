//! Core algorithms for mining bare-plural generic sentences and explicitly
//! quantified sentences from document corpora.
//!
//! Everything in this crate is pure computation over in-memory values and
//! builds without `std` (only `alloc` is required). File formats, HTTP
//! clients, the annotation service and the command-line driver live in the
//! companion `genmine` crate.
//!
//! The stages, in pipeline order:
//!
//! * [`document`]: documents, source tags and the rule-based sentence segmenter.
//! * [`conllu`]: Universal Dependencies tokens and sentences, CoNLL-U reading
//!   and writing, structural validation.
//! * [`filters`]: the quantifier inventory, the cheap prefilter, the
//!   three-condition bare-plural check and quantifier labeling.
//! * [`scoring`]: quantifier stripping, the scorer interface, the heuristic
//!   baseline scorer and threshold acceptance.
//! * [`dataset`]: mined records and the candidate/generalization tally.
//! * [`analysis`]: sentence-length statistics, common words and the three
//!   diversity measures.
//! * [`agreement`]: human annotation labels, batch sampling and agreement.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod agreement;
pub mod analysis;
pub mod conllu;
pub mod dataset;
pub mod document;
pub mod filters;
pub mod scoring;
pub mod text;

pub use agreement::{AgreementReport, Judgment, LabelBook, LabelKind};
pub use conllu::{ParsedSentence, SpanRef, Token, Upos};
pub use dataset::{CountsTable, LabelKey, MGenRecord};
pub use document::{Document, RuleSegmenter, Segmenter, SentenceSpan, SourceTag};
pub use filters::{BarePluralCheck, GenLabel, PrefilterOutcome, Quantifier, QuantifierInventory};
pub use scoring::{GenericityScore, HeuristicScorer, Scorer, ScorerConfig};
