//! DBSCAN over an arbitrary distance.
//!
//! Points are visited in index order and clusters expand breadth-first, so
//! border points reachable from several clusters always land in the cluster
//! discovered first.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClusterLabel {
    Cluster(usize),
    Noise,
}

impl ClusterLabel {
    pub fn cluster(self) -> Option<usize> {
        match self {
            ClusterLabel::Cluster(c) => Some(c),
            ClusterLabel::Noise => None,
        }
    }
}

impl Serialize for ClusterLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ClusterLabel::Cluster(c) => s.serialize_u64(*c as u64),
            ClusterLabel::Noise => s.serialize_str("NOISE"),
        }
    }
}

impl<'de> Deserialize<'de> for ClusterLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct LabelVisitor;

        impl Visitor<'_> for LabelVisitor {
            type Value = ClusterLabel;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a cluster number or \"NOISE\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ClusterLabel, E> {
                Ok(ClusterLabel::Cluster(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ClusterLabel, E> {
                usize::try_from(v)
                    .map(ClusterLabel::Cluster)
                    .map_err(|_| E::custom("negative cluster label"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ClusterLabel, E> {
                if v == "NOISE" {
                    Ok(ClusterLabel::Noise)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        d.deserialize_any(LabelVisitor)
    }
}

/// Labels `n` points. A point is core when at least `min_pts` points (itself included)
/// lie within `eps`.
pub fn dbscan_by<F>(n: usize, eps: f64, min_pts: usize, mut distance: F) -> Vec<ClusterLabel>
where
    F: FnMut(usize, usize) -> f64,
{
    let mut labels: Vec<Option<ClusterLabel>> = alloc::vec![None; n];
    let region = |p: usize, distance: &mut F| -> Vec<usize> { (0..n).filter(|&q| distance(p, q) <= eps).collect() };
    let mut next_cluster = 0;
    let mut queue = VecDeque::new();

    for p in 0..n {
        if labels[p].is_some() {
            continue;
        }
        let neighbours = region(p, &mut distance);
        if neighbours.len() < min_pts {
            labels[p] = Some(ClusterLabel::Noise);
            continue;
        }
        let cluster = ClusterLabel::Cluster(next_cluster);
        next_cluster += 1;
        labels[p] = Some(cluster);
        queue.extend(neighbours);
        while let Some(q) = queue.pop_front() {
            match labels[q] {
                Some(ClusterLabel::Noise) => {
                    // border point: joins, but does not expand
                    labels[q] = Some(cluster);
                    continue;
                }
                Some(_) => continue,
                None => labels[q] = Some(cluster),
            }
            let reach = region(q, &mut distance);
            if reach.len() >= min_pts {
                queue.extend(reach);
            }
        }
    }
    labels.into_iter().map(|l| l.unwrap_or(ClusterLabel::Noise)).collect()
}
