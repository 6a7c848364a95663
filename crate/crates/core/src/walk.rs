//! Type-coefficient guided random walks over the HIN.
//!
//! A step from `v` to neighbour `w` carries mass `C(type(v), type(w)) / |N_type(w)(v)|`.
//! The masses are renormalised over the types actually present around `v`, so
//! sampling reduces to picking a neighbour type proportionally to its
//! coefficient and then a neighbour uniformly inside that partition.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{write_file, HinGraph, NodeId, NodeType};

/// Symmetric 3×3 table of type-pair transition coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    c: [[f64; 3]; 3],
}

impl TransitionMatrix {
    /// Builds the matrix from the six free coefficients. They must be finite,
    /// non-negative and sum to one.
    pub fn new(uu: f64, ue: f64, ui: f64, ei: f64, ee: f64, ii: f64) -> Result<Self> {
        let free = [uu, ue, ui, ei, ee, ii];
        if free.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidCoefficients(format!(
                "coefficients must be finite and non-negative, got {free:?}"
            )));
        }
        let sum: f64 = free.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidCoefficients(format!(
                "coefficients must sum to 1, got {sum}"
            )));
        }
        let (u, i, e) = (0, 1, 2);
        let mut c = [[0.0; 3]; 3];
        let mut set = |a: usize, b: usize, x: f64| {
            c[a][b] = x;
            c[b][a] = x;
        };
        set(u, u, uu);
        set(u, e, ue);
        set(u, i, ui);
        set(e, i, ei);
        set(e, e, ee);
        set(i, i, ii);
        Ok(Self { c })
    }

    pub fn uniform() -> Self {
        let x = 1.0 / 6.0;
        Self::new(x, x, x, x, x, 1.0 - 5.0 * x).expect("uniform coefficients are valid")
    }

    #[inline]
    pub fn get(&self, a: NodeType, b: NodeType) -> f64 {
        self.c[a.index()][b.index()]
    }
}

impl Default for TransitionMatrix {
    fn default() -> Self {
        Self::uniform()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks_per_node: 10,
            walk_length: 100,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node < 1 {
            return Err(Error::InvalidParameter("walks_per_node must be >= 1".into()));
        }
        if self.walk_length < 2 {
            return Err(Error::InvalidParameter("walk_length must be >= 2".into()));
        }
        Ok(())
    }
}

/// Exact step distribution out of `v`, in ascending neighbour order.
///
/// Empty when `v` is isolated or every neighbour type it touches has a zero
/// coefficient.
pub fn transition_distribution(
    g: &HinGraph,
    v: NodeId,
    tm: &TransitionMatrix,
) -> Result<Vec<(NodeId, f64)>> {
    let tv = g.node_type(v)?;
    let parts = g.partitions(v);
    let z: f64 = NodeType::ALL
        .iter()
        .filter(|t| !parts[t.index()].is_empty())
        .map(|&t| tm.get(tv, t))
        .sum();
    if z <= 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for t in NodeType::ALL {
        let part = &parts[t.index()];
        let c = tm.get(tv, t);
        if part.is_empty() || c == 0.0 {
            continue;
        }
        let p = c / part.len() as f64 / z;
        out.extend(part.iter().map(|&w| (w, p)));
    }
    out.sort_unstable_by_key(|&(w, _)| w);
    Ok(out)
}

#[inline]
fn step<R: Rng + ?Sized>(g: &HinGraph, v: NodeId, tv: NodeType, tm: &TransitionMatrix, rng: &mut R) -> Option<NodeId> {
    let parts = g.partitions(v);
    let mut weights = [0.0; 3];
    let mut z = 0.0;
    for t in NodeType::ALL {
        if !parts[t.index()].is_empty() {
            weights[t.index()] = tm.get(tv, t);
            z += weights[t.index()];
        }
    }
    if z <= 0.0 {
        return None;
    }
    let mut x = rng.random::<f64>() * z;
    let mut chosen = None;
    for t in NodeType::ALL {
        let w = weights[t.index()];
        if w == 0.0 {
            continue;
        }
        chosen = Some(t);
        if x < w {
            break;
        }
        x -= w;
    }
    let part = &parts[chosen?.index()];
    Some(part[rng.random_range(0..part.len())])
}

/// One walk from `start`. Stops early at nodes with an empty step
/// distribution.
pub fn generate_walk<R: Rng + ?Sized>(
    g: &HinGraph,
    start: NodeId,
    cfg: &WalkConfig,
    tm: &TransitionMatrix,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    let mut tv = g.node_type(start)?;
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let mut v = start;
    while walk.len() < cfg.walk_length {
        let Some(w) = step(g, v, tv, tm, rng) else {
            break;
        };
        walk.push(w);
        v = w;
        tv = g.node_type(w)?;
    }
    Ok(walk)
}

/// Random stream for walk `walk_index` of `node`: a ChaCha8 generator keyed
/// by the corpus seed, on stream `(node << 32) | walk_index`.
pub fn walk_rng(seed: u64, node: NodeId, walk_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((node.0 as u64) << 32) | (walk_index as u64 & 0xffff_ffff));
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<NodeId>>,
    pub walk_length: usize,
    pub seed: u64,
    pub graph_fingerprint: String,
}

/// `walks_per_node` walks from every node, ordered by start node then walk
/// index. Parallel over start nodes; output does not depend on scheduling.
pub fn generate_corpus(g: &HinGraph, cfg: &WalkConfig, tm: &TransitionMatrix) -> Result<WalkCorpus> {
    cfg.validate()?;
    let per_node: Vec<Vec<Vec<NodeId>>> = g
        .node_ids()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| {
            (0..cfg.walks_per_node)
                .map(|k| generate_walk(g, v, cfg, tm, &mut walk_rng(cfg.seed, v, k)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(WalkCorpus {
        walks: per_node.into_iter().flatten().collect(),
        walk_length: cfg.walk_length,
        seed: cfg.seed,
        graph_fingerprint: g.fingerprint(),
    })
}

impl WalkCorpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "#walks {} length {} seed {} graph {}\n",
            self.walks.len(),
            self.walk_length,
            self.seed,
            self.graph_fingerprint
        );
        for walk in &self.walks {
            let mut first = true;
            for v in walk {
                if !first {
                    s.push(' ');
                }
                first = false;
                s.push_str(&v.0.to_string());
            }
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(path, 1, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (n, walk_length, seed, fingerprint) = match fields.as_slice() {
            ["#walks", n, "length", l, "seed", s, "graph", fp] => (
                n.parse::<usize>().ok(),
                l.parse::<usize>().ok(),
                s.parse::<u64>().ok(),
                fp.to_string(),
            ),
            _ => return Err(Error::parse(path, 1, "malformed corpus header")),
        };
        let (Some(n), Some(walk_length), Some(seed)) = (n, walk_length, seed) else {
            return Err(Error::parse(path, 1, "malformed corpus header"));
        };
        let mut walks = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let walk = line
                .split(' ')
                .map(|t| t.parse::<u32>().map(NodeId))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(path, i + 2, "bad node id in walk"))?;
            if walk.is_empty() || walk.len() > walk_length {
                return Err(Error::parse(path, i + 2, "walk length out of range"));
            }
            walks.push(walk);
        }
        if walks.len() != n {
            return Err(Error::parse(
                path,
                walks.len() + 1,
                format!("header announces {n} walks, found {}", walks.len()),
            ));
        }
        Ok(Self {
            walks,
            walk_length,
            seed,
            graph_fingerprint: fingerprint,
        })
    }
}
