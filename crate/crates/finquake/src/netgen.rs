//! Trader network construction: rewired 2D lattices and preferential-
//! attachment scale-free graphs.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// How a network was generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    /// Open-boundary L x L lattice with each edge rewired with probability p.
    SmallWorld2d { side: usize, rewire_prob: f64 },
    /// Preferential-attachment graph grown from an (m+1)-clique, m links per
    /// arriving node.
    ScaleFree { edges_per_node: usize },
    /// Anything supplied from outside.
    Custom,
}

impl Topology {
    pub fn tag(&self) -> &'static str {
        match self {
            Topology::SmallWorld2d { .. } => "sw2d",
            Topology::ScaleFree { .. } => "scale-free",
            Topology::Custom => "custom",
        }
    }
}

/// Undirected simple graph with generation metadata.
#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
    topology: Topology,
    seed: u64,
}

impl Network {
    /// Build from an explicit edge list, rejecting self-loops and duplicates.
    pub fn from_edges(n: usize, edges: Vec<(u32, u32)>, topology: Topology, seed: u64) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::invalid(format!("edge ({a},{b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at node {a}")));
            }
            if adjacency[a as usize].contains(&b) {
                return Err(Error::invalid(format!("duplicate edge ({a},{b})")));
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        Ok(Network {
            n,
            edges,
            adjacency,
            topology,
            seed,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, node: u32) -> &[u32] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: u32) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    /// Degree histogram as (degree, node count), ascending.
    pub fn degree_histogram(&self) -> Vec<(usize, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for node in 0..self.n {
            *counts.entry(self.adjacency[node].len()).or_insert(0usize) += 1;
        }
        counts.into_iter().collect()
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([0u32]);
        seen[0] = true;
        let mut visited = 1usize;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    visited += 1;
                    queue.push_back(v);
                }
            }
        }
        visited == self.n
    }
}

/// Small-world network: open-boundary `side x side` lattice (row-major node
/// ids) whose edges are each independently rewired with probability
/// `rewire_prob` by detaching a random endpoint and reattaching it to a
/// uniformly chosen non-adjacent node. Edge count, and hence mean degree, is
/// preserved exactly.
pub fn build_small_world(side: usize, rewire_prob: f64, seed: u64) -> Result<Network> {
    if side < 2 {
        return Err(Error::invalid(format!("lattice side must be at least 2, got {side}")));
    }
    if !(0.0..=1.0).contains(&rewire_prob) {
        return Err(Error::invalid(format!(
            "rewiring probability must lie in [0,1], got {rewire_prob}"
        )));
    }
    let n = side * side;
    let id = |r: usize, c: usize| (r * side + c) as u32;
    let mut edges = Vec::with_capacity(2 * side * (side - 1));
    for r in 0..side {
        for c in 0..side {
            if c + 1 < side {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < side {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in &edges {
        adjacency[a as usize].push(b);
        adjacency[b as usize].push(a);
    }

    let mut rng = rng_from_seed(seed);
    for idx in 0..edges.len() {
        if crate::rng::uniform_01(&mut rng) >= rewire_prob {
            continue;
        }
        let (a, b) = edges[idx];
        let (keep, detach) = if crate::rng::coin(&mut rng) { (a, b) } else { (b, a) };
        // the current neighbors of `keep` (including `detach`) are off limits
        let mut target = None;
        for _ in 0..100 {
            let t = rng.gen_range(0..n as u32);
            if t != keep && !adjacency[keep as usize].contains(&t) {
                target = Some(t);
                break;
            }
        }
        // a node adjacent to nearly everything cannot rewire; skip it
        let Some(t) = target else { continue };
        remove_neighbor(&mut adjacency, a, b);
        remove_neighbor(&mut adjacency, b, a);
        adjacency[keep as usize].push(t);
        adjacency[t as usize].push(keep);
        edges[idx] = (keep, t);
        let _ = detach;
    }

    Ok(Network {
        n,
        edges,
        adjacency,
        topology: Topology::SmallWorld2d {
            side,
            rewire_prob,
        },
        seed,
    })
}

fn remove_neighbor(adjacency: &mut [Vec<u32>], node: u32, neighbor: u32) {
    let list = &mut adjacency[node as usize];
    let pos = list.iter().position(|&x| x == neighbor).expect("edge present");
    list.swap_remove(pos);
}

/// Scale-free network grown by preferential attachment: start from an
/// all-to-all clique on `m + 1` nodes, then attach each arriving node to `m`
/// distinct existing nodes chosen with probability proportional to degree.
pub fn build_scale_free(n: usize, m: usize, seed: u64) -> Result<Network> {
    if m < 1 {
        return Err(Error::invalid("need at least one link per arriving node"));
    }
    if n <= m + 1 {
        return Err(Error::invalid(format!(
            "need more than m+1 = {} nodes, got {n}",
            m + 1
        )));
    }
    let mut rng: SimRng = rng_from_seed(seed);
    let mut edges = Vec::with_capacity(m * (m + 1) / 2 + m * (n - m - 1));
    let mut adjacency = vec![Vec::new(); n];
    // one entry per endpoint: sampling uniformly from this list is
    // degree-proportional sampling
    let mut endpoints: Vec<u32> = Vec::with_capacity(2 * edges.capacity());

    for a in 0..=(m as u32) {
        for b in (a + 1)..=(m as u32) {
            edges.push((a, b));
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
            endpoints.push(a);
            endpoints.push(b);
        }
    }

    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for new in (m + 1)..n {
        let new = new as u32;
        chosen.clear();
        // without replacement within one arrival: rejected duplicates keep
        // the marginal choice degree-proportional among the rest
        while chosen.len() < m {
            let pick = endpoints[rng.gen_range(0..endpoints.len())];
            if !chosen.contains(&pick) {
                chosen.push(pick);
            }
        }
        for &t in &chosen {
            edges.push((t, new));
            adjacency[t as usize].push(new);
            adjacency[new as usize].push(t);
            endpoints.push(t);
            endpoints.push(new);
        }
    }

    Ok(Network {
        n,
        edges,
        adjacency,
        topology: Topology::ScaleFree { edges_per_node: m },
        seed,
    })
}

/// Nodes with degree strictly above `k_min`, sorted by degree descending
/// (ties by node id).
pub fn hubs(net: &Network, k_min: i64) -> Vec<u32> {
    let mut out: Vec<u32> = (0..net.node_count() as u32)
        .filter(|&v| net.degree(v) as i64 > k_min)
        .collect();
    out.sort_by_key(|&v| (std::cmp::Reverse(net.degree(v)), v));
    out
}
