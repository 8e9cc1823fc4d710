//! Training sample order.

use rand::seq::SliceRandom;

use super::{LabeledDataset, Label};
use crate::rng::{substream, Stream};

/// Random permutation of the merged set, reshuffled on every pass.
///
/// Yields `(label, index within class)`. Epoch `e` is shuffled with its own
/// substream of the seed, so consecutive epochs differ but a run is
/// reproducible.
#[derive(Debug, Clone)]
pub struct PermutedStream {
    order: Vec<(Label, usize)>,
    pos: usize,
    epoch: u64,
    seed: u64,
}

impl PermutedStream {
    pub fn new(data: &LabeledDataset, seed: u64) -> Self {
        let mut order: Vec<(Label, usize)> = (0..data.n1())
            .map(|i| (Label::One, i))
            .chain((0..data.n2()).map(|i| (Label::Two, i)))
            .collect();
        order.shuffle(&mut substream(seed, Stream::Permutation, 0));
        Self {
            order,
            pos: 0,
            epoch: 0,
            seed,
        }
    }

    /// Number of completed passes.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn epoch_len(&self) -> usize {
        self.order.len()
    }
}

impl Iterator for PermutedStream {
    type Item = (Label, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos == self.order.len() {
            self.epoch += 1;
            self.pos = 0;
            // reshuffle from the canonical order so each epoch depends only on
            // its own substream
            self.order.sort_unstable_by_key(|&(l, i)| (l.index(), i));
            self.order
                .shuffle(&mut substream(self.seed, Stream::Permutation, self.epoch));
        }
        let item = self.order[self.pos];
        self.pos += 1;
        Some(item)
    }
}

/// One sample of each class per tick, each class cycling through its own
/// samples in order.
#[derive(Debug, Clone)]
pub struct PairStream {
    n1: usize,
    n2: usize,
    tick: usize,
}

impl PairStream {
    pub fn new(data: &LabeledDataset) -> Self {
        Self {
            n1: data.n1(),
            n2: data.n2(),
            tick: 0,
        }
    }
}

impl Iterator for PairStream {
    /// `(class-1 index, class-2 index)`
    type Item = (usize, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let item = (self.tick % self.n1, self.tick % self.n2);
        self.tick += 1;
        Some(item)
    }
}
