//! Sentence-level semantic text watermarking anchored in AMR graph
//! structure: a secret bank of abstracted template graphs drives
//! rejection-sampled generation, and detection scores parsed sentences
//! against the bank followed by a one-proportion z-test per paragraph.
//!
//! Module map:
//! - [`amr`]: graph model, Penman parsing/serialization, triples,
//!   canonical form, corpus ingestion
//! - [`matcher`]: S2match similarity (hill-climb and exact-oracle
//!   alignment search)
//! - [`bank`]: template abstraction and the secret bank file
//! - [`clients`]: LLM/parser/paraphraser interfaces, HTTP implementations,
//!   and deterministic stubs
//! - [`injector`]: rejection-sampling watermark injection
//! - [`detector`]: sentence segmentation, bank matching, z-test
//! - [`evalkit`]: ROC/AUC metrics, attack driver, simulations, LLM judge

pub mod amr;
pub mod bank;
pub mod clients;
pub mod detector;
pub mod evalkit;
pub mod injector;
pub mod matcher;

pub use amr::{
    canonicalize, concept_node_count, parse_penman, serialize_penman, to_triples, AmrGraph,
    AmrGraphBuilder, Constant, NodeId, NodeRef, PenmanError, Triple,
};
pub use bank::{
    abstract_template, build_bank, load_bank, save_bank, AbstractionRules, BankError, BankParams,
    BankTemplate, TemplateBank,
};
pub use clients::{AmrParser, ClientError, LlmClient, LlmRequest, Paraphraser, ParserResult};
pub use detector::{
    detect, score_document, segment_sentences, z_score, Decision, DetectConfig, DetectError,
    DetectionReport,
};
pub use evalkit::{roc, simulate_detection, trial_histogram, EvalError, QualityScore, RocResult};
pub use injector::{inject, InjectError, InjectionConfig, InjectionSession};
pub use matcher::{
    best_bank_score, s2match, Alignment, ConceptSimilarity, MatchConfig, MatchError, MatchMode,
    MatchScore,
};
