//! Sparse rating data: ingestion, cross-domain alignment, splitting and
//! summary statistics.

mod align;
pub mod dataset_file;
mod matrix;
mod split;
mod stats;
mod triples;

pub use align::{align_domains, AlignOptions, AlignedDataset, UserFilter};
pub use matrix::{MaskedVector, Orientation, RatingMatrix};
pub use split::{split, DomainSplit, Entry, Split};
pub use stats::{stats, DatasetStats, PairStats};
pub use triples::{ingest_csv, ingest_reader, CsvOptions, RatingRecord, RatingScale, RatingTriples};

/// Which side of the transfer a matrix, sample or head belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    /// Domain label used by the classifier: 0 for source, 1 for target.
    pub fn label(self) -> f64 {
        match self {
            Domain::Source => 0.0,
            Domain::Target => 1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Domain::Source => Domain::Target,
            Domain::Target => Domain::Source,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "source" | "S" => Some(Domain::Source),
            "target" | "T" => Some(Domain::Target),
            _ => None,
        }
    }
}
