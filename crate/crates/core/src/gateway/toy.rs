use crate::corpus::{toy_units, TokenSeq, ToyLexicon, ToyUnit, FW_TOKEN};
use crate::error::Result;

use super::{Candidate, CandidateSet, TranslateRequest, Translator};

/// Deterministic model over the toy language.
///
/// Candidate 1 extends the forced prefix with the toy translation of the
/// source. When the forced prefix is not a prefix of that translation, the
/// model skips as many whole units as the forced prefix covers and appends
/// the translation of the rest.
///
/// Sources of the form `prefix [fw] future...` translate `prefix` only; the
/// future words let the model hold back a trailing swap marker instead of
/// emitting the placeholder.
///
/// With `variants` on, a source containing a synonym-slot token also yields a
/// second candidate using the slot's alternative target token.
#[derive(Clone, Debug)]
pub struct ToyModel {
    lexicon: ToyLexicon,
    variants: bool,
}

impl ToyModel {
    pub fn new(lexicon: ToyLexicon, variants: bool) -> Result<Self> {
        lexicon.validate()?;
        Ok(ToyModel { lexicon, variants })
    }

    pub fn lexicon(&self) -> &ToyLexicon {
        &self.lexicon
    }

    fn units(&self, src: &TokenSeq) -> Result<Vec<ToyUnit>> {
        let toks = src.tokens();
        let (context, future) = match toks.iter().position(|t| t == FW_TOKEN) {
            Some(i) => (&toks[..i], &toks[i + 1..]),
            None => (toks, &toks[toks.len()..]),
        };
        // Future words are context only but must still be known tokens.
        for tok in future {
            if !self.lexicon.entries.contains_key(tok) {
                return Err(crate::Error::OutOfVocabulary(tok.clone()));
            }
        }
        let mut units = toy_units(&self.lexicon, context)?;
        if !future.is_empty() && units.last().is_some_and(|u| u.dangling) {
            units.pop();
        }
        Ok(units)
    }

    /// Units with the first synonym slot rendered with its alternative.
    fn variant_units(&self, src: &TokenSeq, units: &[ToyUnit]) -> Option<Vec<ToyUnit>> {
        let toks = src.tokens();
        let mut out = units.to_vec();
        for unit in out.iter_mut().filter(|u| !u.dangling) {
            let covered = &toks[unit.start..unit.start + unit.consumed];
            // A swap unit renders its second token first.
            let order: Vec<&String> = covered.iter().rev().collect();
            if !order.iter().any(|t| self.lexicon.synonym_slots.contains_key(*t)) {
                continue;
            }
            let mut output = Vec::with_capacity(unit.output.len());
            let mut swapped = false;
            for tok in order {
                match self.lexicon.synonym_slots.get(tok) {
                    Some(alt) if !swapped => {
                        output.push(alt.clone());
                        swapped = true;
                    }
                    _ => output.extend_from_slice(&self.lexicon.entries[tok]),
                }
            }
            unit.output = output;
            return Some(out);
        }
        None
    }
}

fn continue_forced(units: &[ToyUnit], forced: &TokenSeq) -> TokenSeq {
    let full: Vec<String> = units.iter().flat_map(|u| u.output.iter().cloned()).collect();
    if full.starts_with(forced.tokens()) {
        return TokenSeq::new(full).expect("lexicon tokens are valid");
    }
    let mut covered = 0;
    let mut skip = 0;
    for unit in units {
        if covered + unit.output.len() > forced.len() {
            break;
        }
        covered += unit.output.len();
        skip += 1;
    }
    let mut out = forced.clone();
    for tok in units[skip..].iter().flat_map(|u| &u.output) {
        out.push(tok.clone());
    }
    out
}

impl Translator for ToyModel {
    fn translate(&self, request: &TranslateRequest) -> Result<CandidateSet> {
        request.validate()?;
        let units = self.units(&request.src)?;
        let best = continue_forced(&units, &request.forced_tgt);
        let mut candidates = vec![Candidate {
            hypothesis: best,
            score: 0.0,
        }];
        if self.variants && request.beam_size > 1 {
            if let Some(alt_units) = self.variant_units(&request.src, &units) {
                let alt = continue_forced(&alt_units, &request.forced_tgt);
                if alt != candidates[0].hypothesis {
                    candidates.push(Candidate {
                        hypothesis: alt,
                        score: -1.0,
                    });
                }
            }
        }
        CandidateSet::new(candidates, request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::sample_lexicon;
    use crate::corpus::{toy_translate, PEND_TOKEN};
    use crate::Error;

    fn req(src: &str, forced: &str, beam: usize) -> TranslateRequest {
        TranslateRequest::new(src.into(), forced.into(), beam).unwrap()
    }

    #[test]
    fn unforced_monotone() {
        let model = ToyModel::new(ToyLexicon::monotone([("a", "A"), ("b", "B")]), false).unwrap();
        let set = model.translate(&req("a b", "", 10)).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.best(), &TokenSeq::from("A B"));
    }

    #[test]
    fn forced_prefix_continues() {
        let model = ToyModel::new(ToyLexicon::monotone([("a", "A"), ("b", "B")]), false).unwrap();
        let set = model.translate(&req("a b", "A", 10)).unwrap();
        assert_eq!(set.best(), &TokenSeq::from("A B"));
    }

    #[test]
    fn best_effort_continuation() {
        let model = ToyModel::new(sample_lexicon(), false).unwrap();
        // [A ‹pend›] is not a prefix of [A B S]; one unit is covered.
        let forced = TokenSeq::new(["A", PEND_TOKEN]).unwrap();
        let request = TranslateRequest::new("a s b".into(), forced.clone(), 10).unwrap();
        let set = model.translate(&request).unwrap();
        assert_eq!(set.best(), &forced.concat(&"B S".into()));
        // A forced prefix splitting a fertility unit skips the whole unit.
        let set = model.translate(&req("d a", "d1 d2", 10)).unwrap();
        assert_eq!(set.best(), &TokenSeq::from("d1 d2 d3 A"));
        let set = model.translate(&req("a d", "X", 10)).unwrap();
        // X stands in for the one-token unit `a`.
        assert_eq!(set.best(), &TokenSeq::from("X d1 d2 d3"));
    }

    #[test]
    fn future_words_hold_back_markers() {
        let model = ToyModel::new(sample_lexicon(), false).unwrap();
        let set = model.translate(&req("a s [fw] b", "", 10)).unwrap();
        assert_eq!(set.best(), &TokenSeq::from("A"));
        let set = model.translate(&req("a [fw] b", "", 10)).unwrap();
        assert_eq!(set.best(), &TokenSeq::from("A"));
        let set = model.translate(&req("a s", "", 10)).unwrap();
        assert_eq!(set.best(), &TokenSeq::new(["A", PEND_TOKEN]).unwrap());
        assert!(matches!(
            model.translate(&req("a [fw] zz", "", 10)),
            Err(Error::OutOfVocabulary(_))
        ));
    }

    #[test]
    fn synonym_variants() {
        let model = ToyModel::new(sample_lexicon(), true).unwrap();
        let set = model.translate(&req("a n b", "", 10)).unwrap();
        let hyps: Vec<_> = set.hypotheses().map(TokenSeq::join).collect();
        assert_eq!(hyps, ["A N B", "A N2 B"]);
        // Swap unit: `s n` renders N S, variant N2 S.
        let set = model.translate(&req("s n", "", 10)).unwrap();
        let hyps: Vec<_> = set.hypotheses().map(TokenSeq::join).collect();
        assert_eq!(hyps, ["N S", "N2 S"]);
        // The variant is dropped when it contradicts the forced prefix.
        let set = model.translate(&req("a n b", "A N", 10)).unwrap();
        assert_eq!(set.len(), 1);
        // Beam 1 keeps only the best.
        assert_eq!(model.translate(&req("a n b", "", 1)).unwrap().len(), 1);
    }

    #[test]
    fn oov_is_reported() {
        let model = ToyModel::new(sample_lexicon(), false).unwrap();
        assert!(matches!(
            model.translate(&req("a q", "", 10)),
            Err(Error::OutOfVocabulary(t)) if t == "q"
        ));
    }

    #[test]
    fn agrees_with_reference_translation() {
        let lex = sample_lexicon();
        let model = ToyModel::new(lex.clone(), false).unwrap();
        for src in ["a s b", "d s d c", "s a", "n n s"] {
            let src = TokenSeq::from(src);
            let set = model
                .translate(&TranslateRequest::new(src.clone(), TokenSeq::empty(), 10).unwrap())
                .unwrap();
            assert_eq!(set.best(), &toy_translate(&lex, &src).unwrap());
        }
    }
}
