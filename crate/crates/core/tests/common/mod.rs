#![allow(dead_code)]

use std::sync::Arc;

use simt::corpus::ToyLexicon;
use simt::gateway::{Gateway, ToyModel};

/// Lexicon with swap markers (`p`, `q`), multi-token entries (`f`, `g`) and
/// a synonym slot (`a`).
pub fn rich_lexicon() -> ToyLexicon {
    let mut lex = ToyLexicon::monotone([("a", "A"), ("b", "B"), ("c", "C"), ("p", "P"), ("q", "of")]);
    lex.entries.insert("f".into(), vec!["F1".into(), "F2".into()]);
    lex.entries.insert("g".into(), vec!["G1".into(), "G2".into(), "G3".into()]);
    lex.swap_markers.extend(["p".to_owned(), "q".to_owned()]);
    lex.synonym_slots.insert("a".into(), "A2".into());
    lex
}

/// Lexicon without swap markers; every prefix translation is final.
pub fn monotone_lexicon() -> ToyLexicon {
    let mut lex = ToyLexicon::monotone([("a", "A"), ("b", "B"), ("c", "C")]);
    lex.entries.insert("f".into(), vec!["F1".into(), "F2".into()]);
    lex
}

pub fn gateway(lex: &ToyLexicon, variants: bool) -> Gateway {
    Gateway::new(Arc::new(ToyModel::new(lex.clone(), variants).unwrap()))
}
