//! Prefix-to-prefix simultaneous translation toolkit.
//!
//! * [`corpus`]: token sequences, parallel corpora, the toy language pair.
//! * [`gateway`]: forced-prefix translation models (toy, scripted, external).
//! * [`extract`]: pseudo prefix-pair extraction and joint-corpus export.
//! * [`policy`]: READ policies (wait-k, threshold, scripted, heuristic).
//! * [`simulate`]: the streaming READ/WRITE loop and trace rendering.
//! * [`metrics`]: corpus BLEU, Average Lagging and quality/latency sweeps.
//!
//! ```
//! use std::sync::Arc;
//! use simt::corpus::{SentencePair, ToyLexicon};
//! use simt::extract::{extract_prefix_pairs, ExtractionConfig};
//! use simt::gateway::{Gateway, ToyModel};
//!
//! let lexicon = ToyLexicon::monotone([("a", "A"), ("b", "B")]);
//! let gateway = Gateway::new(Arc::new(ToyModel::new(lexicon, false)?));
//! let pair = SentencePair::new("0", "a b".into(), "A B".into())?;
//! let pairs = extract_prefix_pairs(&pair, &gateway, &ExtractionConfig::default())?;
//! assert_eq!(pairs[0].source_line(), "a [fw] b");
//! assert_eq!(pairs[0].tgt_prefix.join(), "A");
//! # Ok::<(), simt::Error>(())
//! ```

pub mod corpus;
mod error;
pub mod extract;
pub mod gateway;
pub mod metrics;
pub mod policy;
pub mod pool;
pub mod simulate;

pub use error::{Error, Result};
