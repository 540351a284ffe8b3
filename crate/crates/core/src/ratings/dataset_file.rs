//! Portable text format for an [`AlignedDataset`].
//!
//! ```text
//! DARECDS 1
//! users <U>
//! source_items <I_S>
//! target_items <I_T>
//! source_ratings <N_S>
//! target_ratings <N_T>
//! %users
//! <user id>                 U lines, ordinal order
//! %source_items
//! <item id>                 I_S lines
//! %target_items
//! <item id>                 I_T lines
//! %source_ratings
//! <user ordinal>,<item ordinal>,<rating>    N_S lines, sorted
//! %target_ratings
//! <user ordinal>,<item ordinal>,<rating>    N_T lines, sorted
//! ```
//!
//! Ratings are written in shortest round-trip decimal form, so the same
//! dataset always serializes to the same bytes.

use std::fmt::Write as _;
use std::path::Path;

use super::align::AlignedDataset;
use super::matrix::RatingMatrix;
use crate::error::{Error, Result};

const HEADER: &str = "DARECDS 1";

pub fn to_string(ds: &AlignedDataset) -> Result<String> {
    let mut out = String::new();
    let ids = ds
        .source
        .user_ids()
        .iter()
        .chain(ds.source.item_ids())
        .chain(ds.target.item_ids());
    for id in ids {
        if id.contains('\n') || id.contains('\r') || id.starts_with('%') || id.is_empty() {
            return Err(Error::invalid(format!("id {id:?} cannot be stored in a dataset file")));
        }
    }
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "users {}", ds.n_users());
    let _ = writeln!(out, "source_items {}", ds.source.n_items());
    let _ = writeln!(out, "target_items {}", ds.target.n_items());
    let _ = writeln!(out, "source_ratings {}", ds.source.n_entries());
    let _ = writeln!(out, "target_ratings {}", ds.target.n_entries());
    let sections: [(&str, &[String]); 3] = [
        ("users", ds.source.user_ids()),
        ("source_items", ds.source.item_ids()),
        ("target_items", ds.target.item_ids()),
    ];
    for (name, ids) in sections {
        let _ = writeln!(out, "%{name}");
        for id in ids {
            let _ = writeln!(out, "{id}");
        }
    }
    for (name, m) in [("source_ratings", &ds.source), ("target_ratings", &ds.target)] {
        let _ = writeln!(out, "%{name}");
        for (u, i, r) in m.entries() {
            let _ = writeln!(out, "{u},{i},{r}");
        }
    }
    Ok(out)
}

pub fn save(ds: &AlignedDataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(ds)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<AlignedDataset> {
    parse(&std::fs::read_to_string(path)?, path)
}

pub fn parse(text: &str, path: &Path) -> Result<AlignedDataset> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line as u64,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")))
    };

    let (ln, header) = next("header")?;
    if header != HEADER {
        return Err(err(ln, format!("expected `{HEADER}`")));
    }
    let mut counts = [0usize; 5];
    for (slot, key) in counts.iter_mut().zip([
        "users",
        "source_items",
        "target_items",
        "source_ratings",
        "target_ratings",
    ]) {
        let (ln, line) = next(key)?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| err(ln, format!("expected `{key} <count>`")))?;
        *slot = value
            .parse()
            .map_err(|_| err(ln, format!("`{value}` is not a count")))?;
    }
    let [n_users, n_src_items, n_tgt_items, n_src, n_tgt] = counts;

    let mut read_ids = |name: &str, n: usize| -> Result<Vec<String>> {
        let (ln, line) = next(name)?;
        if line != format!("%{name}") {
            return Err(err(ln, format!("expected section `%{name}`")));
        }
        (0..n).map(|_| next(name).map(|(_, l)| l.to_string())).collect()
    };
    let users = read_ids("users", n_users)?;
    let src_items = read_ids("source_items", n_src_items)?;
    let tgt_items = read_ids("target_items", n_tgt_items)?;

    let mut read_ratings = |name: &str, n: usize| -> Result<Vec<(usize, usize, f64)>> {
        let (ln, line) = next(name)?;
        if line != format!("%{name}") {
            return Err(err(ln, format!("expected section `%{name}`")));
        }
        (0..n)
            .map(|_| {
                let (ln, line) = next(name)?;
                let mut parts = line.split(',');
                let mut field = |what: &str| {
                    parts
                        .next()
                        .ok_or_else(|| err(ln, format!("missing {what}")))
                };
                let u = field("user")?.parse().map_err(|_| err(ln, "bad user ordinal".into()))?;
                let i = field("item")?.parse().map_err(|_| err(ln, "bad item ordinal".into()))?;
                let r = field("rating")?.parse().map_err(|_| err(ln, "bad rating".into()))?;
                Ok((u, i, r))
            })
            .collect()
    };
    let src_entries = read_ratings("source_ratings", n_src)?;
    let tgt_entries = read_ratings("target_ratings", n_tgt)?;
    if let Some((ln, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(ln, "trailing content".into()));
    }

    let source = RatingMatrix::new(users.clone(), src_items, src_entries)?;
    let target = RatingMatrix::new(users, tgt_items, tgt_entries)?;
    AlignedDataset::new(source, target)
}
