//! Integer-encoded set partitions: gene `i` holds the cluster label of asset `i`.

use std::fmt;

use crate::error::{Error, Result};

/// A cluster assignment in canonical form.
///
/// Labels are 1-based and renumbered by order of first occurrence, so asset 0
/// is always in cluster 1 and every new cluster takes the next unused integer.
/// Two partitions describing the same grouping are therefore equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<u32>,
}

impl Partition {
    /// Validates that every label lies in `[1, n]` and canonicalizes.
    pub fn from_labels(labels: Vec<u32>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::invalid("partition must cover at least one asset"));
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l == 0 || l as usize > n)
        {
            return Err(Error::invalid(format!(
                "label {l} of asset {i} is outside [1, {n}]"
            )));
        }
        Ok(Self::canonical(labels))
    }

    /// Canonicalizes arbitrary positive labels without range checks.
    pub(crate) fn canonical(mut labels: Vec<u32>) -> Self {
        canonicalize(&mut labels);
        Self { labels }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (1..=n as u32).collect(),
        }
    }

    pub fn single_cluster(n: usize) -> Self {
        Self {
            labels: vec![1; n],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, asset: usize) -> u32 {
        self.labels[asset]
    }

    /// Number of distinct clusters. Canonical labels run `1..=k`.
    pub fn num_clusters(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0) as usize
    }

    /// Member lists indexed by `label - 1`, members in ascending order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize - 1].push(i);
        }
        out
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "]")
    }
}

/// Renumbers labels in place by order of first occurrence, starting at 1.
pub fn canonicalize(labels: &mut [u32]) {
    let max = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut map = vec![0u32; max + 1];
    let mut next = 0u32;
    for l in labels.iter_mut() {
        let slot = &mut map[*l as usize];
        if *slot == 0 {
            next += 1;
            *slot = next;
        }
        *l = *slot;
    }
}

impl serde::Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde::Serialize::serialize(self.labels(), s)
    }
}

impl<'de> serde::Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = <Vec<u32> as serde::Deserialize>::deserialize(d)?;
        Partition::from_labels(labels).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form_renumbers_by_first_occurrence() {
        let p = Partition::from_labels(vec![3, 3, 1, 4, 1]).unwrap();
        assert_eq!(p.labels(), &[1, 1, 2, 3, 2]);
        assert_eq!(p.num_clusters(), 3);
        assert_eq!(p.clusters(), vec![vec![0, 1], vec![2, 4], vec![3]]);
    }

    #[test]
    fn rejects_out_of_range_labels() {
        assert!(Partition::from_labels(vec![0, 1]).is_err());
        assert!(Partition::from_labels(vec![1, 3]).is_err());
        assert!(Partition::from_labels(vec![]).is_err());
    }

    #[test]
    fn all_singleton_is_allowed() {
        let p = Partition::from_labels(vec![4, 3, 2, 1]).unwrap();
        assert_eq!(p, Partition::singletons(4));
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent_and_permutation_blind(
            raw in proptest::collection::vec(1u32..=8, 1..8),
            shift in 1u32..5,
        ) {
            let n = raw.len() as u32;
            let raw: Vec<u32> = raw.into_iter().map(|l| (l - 1) % n + 1).collect();
            let p = Partition::from_labels(raw.clone()).unwrap();
            let again = Partition::from_labels(p.labels().to_vec()).unwrap();
            prop_assert_eq!(&p, &again);
            // a cyclic relabeling is a bijection on 1..=n
            let relabeled: Vec<u32> = raw.iter().map(|l| (l - 1 + shift) % n + 1).collect();
            prop_assert_eq!(p, Partition::from_labels(relabeled).unwrap());
        }
    }
}
