use std::collections::HashMap;

use crate::index::counts::{ordered_pairs, window_pairs};
use crate::index::{DocNum, PositionalIndex, TermId};
use crate::scope::TermShape;

/// What a scoring function needs to know about one document.
pub trait DocView {
    fn shape(&self) -> TermShape;
    fn tf(&self, term: TermId) -> u32;
    fn ordered(&self, first: TermId, second: TermId) -> u32;
    fn window(&self, first: TermId, second: TermId, span: u32) -> u32;

    fn length(&self) -> u32 {
        self.shape().length
    }
}

/// A document stored in the index; counts come from its postings.
#[derive(Clone, Copy)]
pub struct IndexedDoc<'a> {
    pub index: &'a PositionalIndex,
    pub num: DocNum,
}

impl DocView for IndexedDoc<'_> {
    fn shape(&self) -> TermShape {
        *self.index.shape(self.num)
    }

    fn tf(&self, term: TermId) -> u32 {
        self.index.tf(term, self.num)
    }

    fn ordered(&self, first: TermId, second: TermId) -> u32 {
        ordered_pairs(
            self.index.positions(first, self.num),
            self.index.positions(second, self.num),
        )
    }

    fn window(&self, first: TermId, second: TermId, span: u32) -> u32 {
        window_pairs(
            self.index.positions(first, self.num),
            self.index.positions(second, self.num),
            span,
            first == second,
        )
    }
}

/// A free-standing token sequence, e.g. a perturbed copy of a document that
/// is scored against a fixed collection. Terms unknown to the collection may
/// use ids past the end of the vocabulary.
#[derive(Debug, Clone)]
pub struct TokenDoc {
    shape: TermShape,
    positions: HashMap<TermId, Vec<u32>>,
}

impl TokenDoc {
    pub fn new(tokens: &[TermId]) -> Self {
        let mut positions: HashMap<TermId, Vec<u32>> = HashMap::new();
        for (i, &t) in tokens.iter().enumerate() {
            positions.entry(t).or_default().push(i as u32 + 1);
        }
        let freqs: Vec<u32> = positions.values().map(|p| p.len() as u32).collect();
        TokenDoc {
            shape: TermShape::from_counts(&freqs),
            positions,
        }
    }

    fn pos(&self, t: TermId) -> &[u32] {
        self.positions.get(&t).map_or(&[], Vec::as_slice)
    }
}

impl DocView for TokenDoc {
    fn shape(&self) -> TermShape {
        self.shape
    }

    fn tf(&self, term: TermId) -> u32 {
        self.pos(term).len() as u32
    }

    fn ordered(&self, first: TermId, second: TermId) -> u32 {
        ordered_pairs(self.pos(first), self.pos(second))
    }

    fn window(&self, first: TermId, second: TermId, span: u32) -> u32 {
        window_pairs(self.pos(first), self.pos(second), span, first == second)
    }
}
