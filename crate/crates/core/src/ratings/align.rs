use std::collections::{BTreeSet, HashMap};

use super::matrix::RatingMatrix;
use super::triples::RatingTriples;
use crate::error::{Error, Result};

/// Which counts the minimum-ratings threshold applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UserFilter {
    /// At least `min_ratings` in each domain.
    #[default]
    PerDomain,
    /// At least `min_ratings` across both domains together.
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignOptions {
    pub min_ratings: usize,
    pub filter: UserFilter,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            min_ratings: 5,
            filter: UserFilter::PerDomain,
        }
    }
}

/// Source and target rating matrices over one shared user index.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    pub source: RatingMatrix,
    pub target: RatingMatrix,
}

impl AlignedDataset {
    pub fn new(source: RatingMatrix, target: RatingMatrix) -> Result<Self> {
        if source.user_ids() != target.user_ids() {
            return Err(Error::invalid("source and target must share the same user index"));
        }
        Ok(Self { source, target })
    }

    pub fn n_users(&self) -> usize {
        self.source.n_users()
    }

    pub fn domain(&self, d: super::Domain) -> &RatingMatrix {
        match d {
            super::Domain::Source => &self.source,
            super::Domain::Target => &self.target,
        }
    }

    /// Smallest per-domain rating count over all users.
    pub fn min_user_ratings(&self) -> usize {
        (0..self.n_users())
            .map(|u| self.source.user_row(u).len().min(self.target.user_row(u).len()))
            .min()
            .unwrap_or(0)
    }
}

/// Intersects the two domains' users, applies the rating threshold and
/// rebuilds dense indices (ids sorted lexicographically).
pub fn align_domains(src: &RatingTriples, tgt: &RatingTriples, opts: AlignOptions) -> Result<AlignedDataset> {
    if opts.min_ratings == 0 {
        return Err(Error::invalid("min_ratings must be at least 1"));
    }
    let src_counts = src.user_counts();
    let tgt_counts = tgt.user_counts();
    let users: BTreeSet<&str> = src_counts
        .iter()
        .filter_map(|(u, &cs)| {
            let ct = *tgt_counts.get(u)?;
            let keep = match opts.filter {
                UserFilter::PerDomain => cs >= opts.min_ratings && ct >= opts.min_ratings,
                UserFilter::Combined => cs + ct >= opts.min_ratings,
            };
            keep.then_some(*u)
        })
        .collect();
    if users.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let user_ids: Vec<String> = users.iter().map(|u| u.to_string()).collect();
    let source = build(src, &user_ids)?;
    let target = build(tgt, &user_ids)?;
    AlignedDataset::new(source, target)
}

fn build(triples: &RatingTriples, user_ids: &[String]) -> Result<RatingMatrix> {
    let user_index: HashMap<&str, usize> = user_ids.iter().enumerate().map(|(k, u)| (u.as_str(), k)).collect();
    let items: BTreeSet<&str> = triples
        .records
        .iter()
        .filter(|r| user_index.contains_key(r.user.as_str()))
        .map(|r| r.item.as_str())
        .collect();
    let item_ids: Vec<String> = items.iter().map(|i| i.to_string()).collect();
    let item_index: HashMap<&str, usize> = item_ids.iter().enumerate().map(|(k, i)| (i.as_str(), k)).collect();
    let entries: Vec<(usize, usize, f64)> = triples
        .records
        .iter()
        .filter_map(|r| {
            let u = *user_index.get(r.user.as_str())?;
            Some((u, item_index[r.item.as_str()], r.rating))
        })
        .collect();
    drop(item_index);
    RatingMatrix::new(user_ids.to_vec(), item_ids, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::RatingRecord;
    use proptest::prelude::*;

    fn triples(rows: &[(&str, &str, f64)]) -> RatingTriples {
        RatingTriples::from_records(rows.iter().map(|&(u, i, r)| RatingRecord {
            user: u.into(),
            item: i.into(),
            rating: r,
            timestamp: None,
        }))
    }

    #[test]
    fn intersection_of_users() {
        let s = triples(&[("a", "x", 1.0), ("b", "y", 2.0)]);
        let t = triples(&[("b", "p", 3.0), ("c", "q", 4.0)]);
        let ds = align_domains(&s, &t, AlignOptions { min_ratings: 1, ..Default::default() }).unwrap();
        assert_eq!(ds.source.user_ids(), &["b".to_string()]);
        assert_eq!(ds.source.item_ids(), &["y".to_string()]);
        assert_eq!(ds.target.item_ids(), &["p".to_string()]);
    }

    #[test]
    fn threshold_applies_per_domain() {
        let mut s = Vec::new();
        let mut t = Vec::new();
        let items: Vec<String> = (0..6).map(|i| format!("i{i}")).collect();
        for i in 0..5 {
            s.push(("keep", items[i].as_str(), 4.0));
            s.push(("drop", items[i].as_str(), 4.0));
            t.push(("keep", items[i].as_str(), 3.0));
        }
        for i in 0..4 {
            t.push(("drop", items[i].as_str(), 3.0));
        }
        let ds = align_domains(&triples(&s), &triples(&t), AlignOptions::default()).unwrap();
        assert_eq!(ds.source.user_ids(), &["keep".to_string()]);

        let combined = AlignOptions {
            min_ratings: 5,
            filter: UserFilter::Combined,
        };
        let ds = align_domains(&triples(&s), &triples(&t), combined).unwrap();
        assert_eq!(ds.n_users(), 2);
    }

    #[test]
    fn disjoint_users_fail() {
        let s = triples(&[("a", "x", 1.0)]);
        let t = triples(&[("b", "x", 1.0)]);
        assert!(matches!(
            align_domains(&s, &t, AlignOptions { min_ratings: 1, ..Default::default() }),
            Err(Error::EmptyIntersection)
        ));
        assert!(align_domains(&s, &t, AlignOptions { min_ratings: 0, ..Default::default() }).is_err());
    }

    proptest! {
        #[test]
        fn output_satisfies_invariants(
            s in prop::collection::vec((0u8..8, 0u8..6, 1u8..=5), 0..60),
            t in prop::collection::vec((0u8..8, 0u8..6, 1u8..=5), 0..60),
            min in 1usize..4,
        ) {
            let mk = |v: &Vec<(u8, u8, u8)>| RatingTriples::from_records(v.iter().map(|&(u, i, r)| RatingRecord {
                user: format!("u{u}"), item: format!("i{i}"), rating: f64::from(r), timestamp: None,
            }));
            let (s, t) = (mk(&s), mk(&t));
            match align_domains(&s, &t, AlignOptions { min_ratings: min, ..Default::default() }) {
                Ok(ds) => {
                    prop_assert_eq!(ds.source.n_users(), ds.target.n_users());
                    prop_assert!(ds.min_user_ratings() >= min);
                    for m in [&ds.source, &ds.target] {
                        for i in 0..m.n_items() {
                            prop_assert!(!m.item_column(i).is_empty());
                        }
                    }
                }
                Err(e) => prop_assert!(matches!(e, Error::EmptyIntersection)),
            }
        }
    }
}
