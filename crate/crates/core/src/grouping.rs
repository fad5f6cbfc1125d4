use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Assignment of every object to one of `n_groups` dense group indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    labels: Vec<u32>,
    group_sizes: Vec<usize>,
    inv_group_sizes: Vec<f64>,
}

impl Grouping {
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n_dims(&self) -> usize {
        self.labels.len()
    }

    pub fn n_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// `1 / group_sizes[g]` for every group.
    pub fn inv_group_sizes(&self) -> &[f64] {
        &self.inv_group_sizes
    }

    /// Returns the grouping with objects reordered so that new object `i`
    /// is old object `order[i]`. Group indices are kept as-is.
    pub fn reordered(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.labels.len());
        Self {
            labels: order.iter().map(|&i| self.labels[i]).collect(),
            group_sizes: self.group_sizes.clone(),
            inv_group_sizes: self.inv_group_sizes.clone(),
        }
    }
}

/// Maps arbitrary category values to dense indices `0..a` in order of first
/// appearance and derives group sizes and their reciprocals.
pub fn build_grouping<T: Hash + Eq>(categories: &[T]) -> Result<Grouping> {
    let mut index: HashMap<&T, u32> = HashMap::new();
    let mut group_sizes: Vec<usize> = Vec::new();
    let mut labels = Vec::with_capacity(categories.len());
    for cat in categories {
        let next = group_sizes.len() as u32;
        let g = *index.entry(cat).or_insert(next);
        if g == next {
            group_sizes.push(0);
        }
        group_sizes[g as usize] += 1;
        labels.push(g);
    }

    let n_groups = group_sizes.len();
    if n_groups < 2 {
        return Err(Error::SingleGroup(n_groups));
    }
    if n_groups == labels.len() {
        return Err(Error::AllSingletonDegenerate(n_groups));
    }
    let inv_group_sizes = group_sizes.iter().map(|&s| 1.0 / s as f64).collect();
    Ok(Grouping { labels, group_sizes, inv_group_sizes })
}
