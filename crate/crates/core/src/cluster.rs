//! Address clustering with the multi-input heuristic: every address spent
//! together in the inputs of one transaction is assumed to belong to one user.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use thiserror::Error;

use crate::chain::TxLog;

/// Disjoint-set forest with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns `true` if `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("unknown address {0}")]
    UnknownAddress(String),
    #[error("cluster file row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A finalized partition of the log's addresses into user clusters.
///
/// Cluster indices are dense and ordered by each cluster's lexicographically
/// smallest address, so they do not depend on transaction order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSet {
    addresses: Vec<String>,
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl ClusterSet {
    fn from_union_find(addresses: Vec<String>, uf: &mut UnionFind) -> Self {
        let mut dense: HashMap<usize, usize> = HashMap::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut assignment = Vec::with_capacity(addresses.len());
        // addresses are sorted, so the first member seen fixes each cluster's rank
        for id in 0..addresses.len() {
            let root = uf.find(id);
            let idx = *dense.entry(root).or_insert_with(|| {
                members.push(Vec::new());
                members.len() - 1
            });
            members[idx].push(id);
            assignment.push(idx);
        }
        ClusterSet {
            addresses,
            assignment,
            members,
        }
    }

    /// Number of clusters.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn address_count(&self) -> usize {
        self.addresses.len()
    }

    pub fn cluster_of(&self, address: &str) -> Result<usize, ClusterError> {
        self.address_id(address)
            .map(|id| self.assignment[id])
            .ok_or_else(|| ClusterError::UnknownAddress(address.to_string()))
    }

    fn address_id(&self, address: &str) -> Option<usize> {
        self.addresses
            .binary_search_by(|a| a.as_str().cmp(address))
            .ok()
    }

    /// Members of a cluster in lexicographic order.
    pub fn members(&self, cluster: usize) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.members[cluster]
            .iter()
            .map(move |&id| self.addresses[id].as_str())
    }

    pub fn size(&self, cluster: usize) -> usize {
        self.members[cluster].len()
    }

    /// The cluster's smallest address, used as its stable identifier.
    pub fn representative(&self, cluster: usize) -> &str {
        &self.addresses[self.members[cluster][0]]
    }

    /// Maps each seed label to the clusters holding its addresses.
    pub fn expand_seeds(&self, seeds: &[Seed]) -> SeedExpansion {
        let mut clusters: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        let mut unresolved = Vec::new();
        for seed in seeds {
            let entry = clusters.entry(seed.label.clone()).or_default();
            match self.cluster_of(&seed.address) {
                Ok(c) => {
                    entry.insert(c);
                }
                Err(_) => unresolved.push(seed.clone()),
            }
        }
        let mut owners: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (label, set) in &clusters {
            for &c in set {
                owners.entry(c).or_default().push(label.clone());
            }
        }
        let collisions = owners
            .into_iter()
            .filter(|(_, labels)| labels.len() > 1)
            .map(|(cluster, labels)| Collision { cluster, labels })
            .collect();
        SeedExpansion {
            clusters,
            unresolved,
            collisions,
        }
    }

    /// Writes the `cluster_id,address` dump, ordered by cluster then address.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ClusterError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["cluster_id", "address"])?;
        for (c, ids) in self.members.iter().enumerate() {
            for &id in ids {
                w.write_record([c.to_string().as_str(), self.addresses[id].as_str()])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads a cluster dump. The grouping is taken from the file; indices are
    /// re-derived from smallest members and must agree with the file's.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ClusterError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["cluster_id", "address"] {
            return Err(ClusterError::Malformed {
                row: 1,
                message: "header must be `cluster_id,address`".into(),
            });
        }
        let mut rows: Vec<(usize, String)> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 2;
            let cluster = rec[0].parse::<usize>().map_err(|e| ClusterError::Malformed {
                row,
                message: format!("bad cluster id {:?}: {}", &rec[0], e),
            })?;
            rows.push((cluster, rec[1].to_string()));
        }
        let mut addresses: Vec<String> = rows.iter().map(|(_, a)| a.clone()).collect();
        addresses.sort();
        if let Some(w) = addresses.windows(2).find(|w| w[0] == w[1]) {
            return Err(ClusterError::Malformed {
                row: 0,
                message: format!("address {} listed twice", w[0]),
            });
        }
        let id_of = |a: &str| addresses.binary_search_by(|x| x.as_str().cmp(a)).unwrap();
        let mut uf = UnionFind::new(addresses.len());
        let mut first_of: HashMap<usize, usize> = HashMap::new();
        for (cluster, address) in &rows {
            let id = id_of(address);
            match first_of.get(cluster) {
                Some(&other) => {
                    uf.union(other, id);
                }
                None => {
                    first_of.insert(*cluster, id);
                }
            }
        }
        let set = ClusterSet::from_union_find(addresses.clone(), &mut uf);
        for (row, (cluster, address)) in rows.iter().enumerate() {
            if set.assignment[id_of(address)] != *cluster {
                return Err(ClusterError::Malformed {
                    row: row + 2,
                    message: format!(
                        "cluster id {} for {} is not the canonical index",
                        cluster, address
                    ),
                });
            }
        }
        Ok(set)
    }
}

/// Clusters every address of the log. Only non-coinbase transactions with two
/// or more resolvable inputs cause merges.
pub fn build_clusters(log: &TxLog) -> ClusterSet {
    let addresses: Vec<String> = log.addresses().map(str::to_string).collect();
    let id_of: HashMap<&str, usize> = addresses
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    let mut uf = UnionFind::new(addresses.len());
    for tx in log.transactions() {
        if tx.coinbase || tx.inputs.len() < 2 {
            continue;
        }
        let mut inputs = log.resolved_inputs(tx).map(|(a, _)| id_of[a]);
        if let Some(first) = inputs.next() {
            for other in inputs {
                uf.union(first, other);
            }
        }
    }
    ClusterSet::from_union_find(addresses, &mut uf)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub label: String,
    pub address: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collision {
    pub cluster: usize,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedExpansion {
    /// Every seed label, including labels none of whose addresses resolved.
    pub clusters: BTreeMap<String, BTreeSet<usize>>,
    pub unresolved: Vec<Seed>,
    pub collisions: Vec<Collision>,
}

/// Reads a `label,address` seed file.
pub fn read_seeds<R: Read>(reader: R) -> Result<Vec<Seed>, ClusterError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 {
        return Err(ClusterError::Malformed {
            row: 1,
            message: "seed file must have two columns `label,address`".into(),
        });
    }
    let mut seeds = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        seeds.push(Seed {
            label: rec[0].to_string(),
            address: rec[1].to_string(),
        });
    }
    Ok(seeds)
}
