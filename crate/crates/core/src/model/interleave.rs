use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::nncore::SeedStream;
use crate::ratings::Domain;

/// Alternating source/target order over two lists of lengths `n_source` and
/// `n_target`, starting with source.
///
/// Both lists are shuffled independently. The shorter one is cycled, with a
/// fresh shuffle at each wrap-around, until every element of the longer one
/// has been emitted once, so the stream has `2 · max(n_source, n_target)`
/// entries.
pub fn interleave_order<R: Rng + ?Sized>(n_source: usize, n_target: usize, rng: &mut R) -> Result<Vec<(Domain, usize)>> {
    if n_source == 0 || n_target == 0 {
        return Err(Error::invalid("cannot interleave an empty sample list"));
    }
    let rounds = n_source.max(n_target);
    let mut src = Cycler::new(n_source, rng);
    let mut tgt = Cycler::new(n_target, rng);
    let mut out = Vec::with_capacity(2 * rounds);
    for _ in 0..rounds {
        out.push((Domain::Source, src.next(rng)));
        out.push((Domain::Target, tgt.next(rng)));
    }
    Ok(out)
}

/// [`interleave_order`] applied to sample lists, seeded.
pub fn interleave<'a, T>(source: &'a [T], target: &'a [T], seed: u64) -> Result<Vec<&'a T>> {
    let mut rng = SeedStream::new(seed).rng("interleave");
    Ok(interleave_order(source.len(), target.len(), &mut rng)?
        .into_iter()
        .map(|(d, k)| match d {
            Domain::Source => &source[k],
            Domain::Target => &target[k],
        })
        .collect())
}

struct Cycler {
    order: Vec<usize>,
    pos: usize,
}

impl Cycler {
    fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self { order, pos: 0 }
    }

    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        if self.pos == self.order.len() {
            self.order.shuffle(rng);
            self.pos = 0;
        }
        self.pos += 1;
        self.order[self.pos - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_sizes_alternate_once_each() {
        let s = ["s0", "s1"];
        let t = ["t0", "t1"];
        let out = interleave(&s, &t, 3).unwrap();
        assert_eq!(out.len(), 4);
        assert!(out[0].starts_with('s') && out[1].starts_with('t'));
        assert!(out[2].starts_with('s') && out[3].starts_with('t'));
        let mut sorted: Vec<&str> = out.iter().map(|x| **x).collect();
        sorted.sort();
        assert_eq!(sorted, vec!["s0", "s1", "t0", "t1"]);
    }

    #[test]
    fn shorter_list_is_cycled() {
        let s = ["s0"];
        let t = ["t0", "t1", "t2"];
        let out: Vec<&str> = interleave(&s, &t, 9).unwrap().into_iter().copied().collect();
        assert_eq!(out.iter().filter(|x| **x == "s0").count(), 3);
        for ti in t {
            assert_eq!(out.iter().filter(|x| **x == ti).count(), 1);
        }
    }

    #[test]
    fn deterministic_and_rejects_empty() {
        let s = [1, 2, 3, 4, 5];
        let t = [6, 7];
        assert_eq!(interleave(&s, &t, 1).unwrap(), interleave(&s, &t, 1).unwrap());
        assert!(interleave(&s, &[], 1).is_err());
        assert!(interleave::<i32>(&[], &t, 1).is_err());
    }

    proptest! {
        #[test]
        fn multiset_and_alternation(ns in 1usize..40, nt in 1usize..40, seed in any::<u64>()) {
            let mut rng = SeedStream::new(seed).rng("p");
            let order = interleave_order(ns, nt, &mut rng).unwrap();
            prop_assert_eq!(order.len(), 2 * ns.max(nt));
            for pair in order.windows(2) {
                prop_assert_ne!(pair[0].0, pair[1].0);
            }
            let (long, n_long, n_short, short) = if ns >= nt {
                (Domain::Source, ns, nt, Domain::Target)
            } else {
                (Domain::Target, nt, ns, Domain::Source)
            };
            let mut counts_long = vec![0usize; n_long];
            let mut counts_short = vec![0usize; n_short];
            for (d, k) in &order {
                if *d == long { counts_long[*k] += 1 } else { counts_short[*k] += 1 }
            }
            if ns == nt {
                prop_assert!(counts_short.iter().all(|&c| c == 1));
            }
            prop_assert!(counts_long.iter().all(|&c| c == 1) || short == long);
            let lo = n_long / n_short;
            let hi = n_long.div_ceil(n_short);
            prop_assert!(counts_short.iter().all(|&c| c >= lo && c <= hi));
        }
    }
}
