use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::align::AlignedDataset;
use super::matrix::RatingMatrix;
use super::Domain;
use crate::error::{Error, Result};
use crate::nncore::SeedStream;

pub type Entry = (usize, usize);

/// Partition of one domain's observed entries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainSplit {
    pub train: Vec<Entry>,
    pub validation: Vec<Entry>,
    pub test: Vec<Entry>,
}

impl DomainSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fails if any entry sits in two parts.
    pub fn check_disjoint(&self) -> Result<()> {
        let train: HashSet<&Entry> = self.train.iter().collect();
        let val: HashSet<&Entry> = self.validation.iter().collect();
        if train.len() != self.train.len() || val.len() != self.validation.len() {
            return Err(Error::Leak("duplicate entries inside a split part".into()));
        }
        if let Some(e) = self.test.iter().find(|e| train.contains(e) || val.contains(e)) {
            return Err(Error::Leak(format!("test entry {e:?} also used for fitting")));
        }
        if let Some(e) = self.validation.iter().find(|e| train.contains(e)) {
            return Err(Error::Leak(format!("validation entry {e:?} also in train")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub source: DomainSplit,
    pub target: DomainSplit,
}

impl Split {
    pub fn domain(&self, d: Domain) -> &DomainSplit {
        match d {
            Domain::Source => &self.source,
            Domain::Target => &self.target,
        }
    }
}

/// Uniform random per-domain partition into train / validation / test.
///
/// `round(n · (1 - train_frac))` entries go to test; of the rest,
/// `round(rest · val_frac_of_train)` go to validation.
pub fn split(ds: &AlignedDataset, train_frac: f64, val_frac_of_train: f64, seed: u64) -> Result<Split> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_frac} must lie in (0, 1)")));
    }
    if !(0.0..1.0).contains(&val_frac_of_train) {
        return Err(Error::invalid(format!(
            "validation fraction {val_frac_of_train} must lie in [0, 1)"
        )));
    }
    let streams = SeedStream::new(seed);
    Ok(Split {
        source: split_matrix(&ds.source, train_frac, val_frac_of_train, &streams, "split.source"),
        target: split_matrix(&ds.target, train_frac, val_frac_of_train, &streams, "split.target"),
    })
}

fn split_matrix(m: &RatingMatrix, train_frac: f64, val_frac: f64, streams: &SeedStream, label: &str) -> DomainSplit {
    let mut entries: Vec<Entry> = m.entries().map(|(u, i, _)| (u, i)).collect();
    entries.shuffle(&mut streams.rng(label));
    let n = entries.len();
    let n_test = ((n as f64) * (1.0 - train_frac)).round() as usize;
    let n_fit = n - n_test.min(n);
    let n_val = ((n_fit as f64) * val_frac).round() as usize;
    let test = entries.split_off(n_fit);
    let validation = entries.split_off(n_fit - n_val);
    DomainSplit {
        train: entries,
        validation,
        test,
    }
}
