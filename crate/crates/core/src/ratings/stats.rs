use std::fmt;

use super::matrix::RatingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    /// `1 - ratings / (users · items)`.
    pub sparsity: f64,
}

impl DatasetStats {
    pub fn from_counts(users: usize, items: usize, ratings: usize) -> Result<Self> {
        if users == 0 || items == 0 {
            return Err(Error::invalid(format!(
                "sparsity undefined for a {users}x{items} matrix"
            )));
        }
        let cells = users as f64 * items as f64;
        Ok(Self {
            users,
            items,
            ratings,
            sparsity: 1.0 - ratings as f64 / cells,
        })
    }

    pub fn sparsity_percent(&self) -> f64 {
        100.0 * self.sparsity
    }
}

pub fn stats(m: &RatingMatrix) -> Result<DatasetStats> {
    DatasetStats::from_counts(m.n_users(), m.n_items(), m.n_entries())
}

/// Source/target summary in the layout of the usual dataset-statistics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub source: DatasetStats,
    pub target: DatasetStats,
}

impl fmt::Display for PairStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:>10} {:>10} {:>10} {:>10}",
            "domain", "users", "items", "ratings", "sparsity"
        )?;
        for (name, s) in [("source", &self.source), ("target", &self.target)] {
            writeln!(
                f,
                "{:<8} {:>10} {:>10} {:>10} {:>9.2}%",
                name,
                s.users,
                s.items,
                s.ratings,
                s.sparsity_percent()
            )?;
        }
        Ok(())
    }
}
