use std::collections::HashMap;

use crate::error::{Error, Result};

/// Whether rating vectors are rows (one per user) or columns (one per item).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    User,
    Item,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::User => "user",
            Orientation::Item => "item",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "user" | "U" | "u" => Some(Orientation::User),
            "item" | "I" | "i" => Some(Orientation::Item),
            _ => None,
        }
    }
}

/// A dense rating vector with an explicit observation mask. Unobserved
/// positions hold 0 but only the mask decides what counts as observed.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedVector {
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl MaskedVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            mask: vec![false; len],
        }
    }

    pub fn from_sparse(len: usize, entries: &[(usize, f64)]) -> Self {
        let mut v = Self::zeros(len);
        for &(i, r) in entries {
            v.values[i] = r;
            v.mask[i] = true;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Values with every unobserved position forced to 0, whatever it held.
    pub fn masked_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { v } else { 0.0 })
            .collect()
    }

    /// Observed `(position, rating)` pairs.
    pub fn observed(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(i, _)| (i, self.values[i]))
    }
}

/// Sparse users × items explicit ratings with bidirectional id maps.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    by_user: Vec<Vec<(usize, f64)>>,
    by_item: Vec<Vec<(usize, f64)>>,
    n_entries: usize,
}

impl RatingMatrix {
    /// Entries are `(user ordinal, item ordinal, rating)`.
    pub fn new(
        user_ids: Vec<String>,
        item_ids: Vec<String>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let user_index = index_of(&user_ids, "user")?;
        let item_index = index_of(&item_ids, "item")?;
        let mut by_user = vec![Vec::new(); user_ids.len()];
        let mut by_item = vec![Vec::new(); item_ids.len()];
        let mut n_entries = 0;
        for (u, i, r) in entries {
            if u >= user_ids.len() || i >= item_ids.len() {
                return Err(Error::invalid(format!(
                    "entry ({u}, {i}) outside a {}x{} matrix",
                    user_ids.len(),
                    item_ids.len()
                )));
            }
            if !r.is_finite() {
                return Err(Error::invalid(format!("rating at ({u}, {i}) is not finite")));
            }
            by_user[u].push((i, r));
            by_item[i].push((u, r));
            n_entries += 1;
        }
        for (u, row) in by_user.iter_mut().enumerate() {
            row.sort_by_key(|e| e.0);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!("duplicate entry in user row {u}")));
            }
        }
        for col in by_item.iter_mut() {
            col.sort_by_key(|e| e.0);
        }
        Ok(Self {
            user_ids,
            item_ids,
            user_index,
            item_index,
            by_user,
            by_item,
            n_entries,
        })
    }

    /// Anonymous ids `u0..`, `i0..`.
    pub fn from_entries(
        n_users: usize,
        n_items: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        Self::new(
            (0..n_users).map(|u| format!("u{u}")).collect(),
            (0..n_items).map(|i| format!("i{i}")).collect(),
            entries,
        )
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_entries(&self) -> usize {
        self.n_entries
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_ordinal(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn item_ordinal(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    pub fn get(&self, u: usize, i: usize) -> Option<f64> {
        let row = self.by_user.get(u)?;
        row.binary_search_by_key(&i, |e| e.0).ok().map(|k| row[k].1)
    }

    /// Observed `(item, rating)` pairs of user `u`, sorted by item.
    pub fn user_row(&self, u: usize) -> &[(usize, f64)] {
        &self.by_user[u]
    }

    /// Observed `(user, rating)` pairs of item `i`, sorted by user.
    pub fn item_column(&self, i: usize) -> &[(usize, f64)] {
        &self.by_item[i]
    }

    /// All entries in (user, item) order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.by_user
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |&(i, r)| (u, i, r)))
    }

    pub fn user_vector(&self, u: usize) -> Result<MaskedVector> {
        if u >= self.n_users() {
            return Err(Error::invalid(format!("user {u} out of range ({})", self.n_users())));
        }
        Ok(MaskedVector::from_sparse(self.n_items(), &self.by_user[u]))
    }

    pub fn item_vector(&self, i: usize) -> Result<MaskedVector> {
        if i >= self.n_items() {
            return Err(Error::invalid(format!("item {i} out of range ({})", self.n_items())));
        }
        Ok(MaskedVector::from_sparse(self.n_users(), &self.by_item[i]))
    }

    /// Number of rating vectors along `orientation`.
    pub fn entity_count(&self, orientation: Orientation) -> usize {
        match orientation {
            Orientation::User => self.n_users(),
            Orientation::Item => self.n_items(),
        }
    }

    /// Length of each rating vector along `orientation`.
    pub fn vector_len(&self, orientation: Orientation) -> usize {
        match orientation {
            Orientation::User => self.n_items(),
            Orientation::Item => self.n_users(),
        }
    }

    pub fn vectors(&self, orientation: Orientation) -> Vec<MaskedVector> {
        match orientation {
            Orientation::User => (0..self.n_users())
                .map(|u| MaskedVector::from_sparse(self.n_items(), &self.by_user[u]))
                .collect(),
            Orientation::Item => (0..self.n_items())
                .map(|i| MaskedVector::from_sparse(self.n_users(), &self.by_item[i]))
                .collect(),
        }
    }

    /// Same index space, keeping only the listed `(user, item)` positions.
    pub fn restrict(&self, keep: &[(usize, usize)]) -> Result<Self> {
        let mut entries = Vec::with_capacity(keep.len());
        for &(u, i) in keep {
            let r = self
                .get(u, i)
                .ok_or_else(|| Error::invalid(format!("({u}, {i}) is not an observed entry")))?;
            entries.push((u, i, r));
        }
        Self::new(self.user_ids.clone(), self.item_ids.clone(), entries)
    }
}

fn index_of(ids: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), k).is_some() {
            return Err(Error::invalid(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(map)
}
