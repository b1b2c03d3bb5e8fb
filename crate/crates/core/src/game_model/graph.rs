use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// Undirected, connected interaction graph over players `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    num_players: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl InteractionGraph {
    pub fn new(
        num_players: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if num_players < 2 {
            return Err(Error::Structural(
                "a networked game needs at least two players".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::Structural(format!("self-loop at player {i}")));
            }
            if i >= num_players || j >= num_players {
                return Err(Error::Structural(format!(
                    "edge ({i},{j}) references a missing player"
                )));
            }
            set.insert((i.min(j), i.max(j)));
        }
        let mut neighbors = vec![Vec::new(); num_players];
        for &(i, j) in &set {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for n in neighbors.iter_mut() {
            n.sort_unstable();
        }
        let g = InteractionGraph {
            num_players,
            edges: set,
            neighbors,
        };
        if !g.is_connected() {
            return Err(Error::Structural(
                "interaction graph is not connected".into(),
            ));
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn triangle() -> Self {
        Self::complete(3).expect("triangle is valid")
    }

    pub fn ring(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn star(n: usize, center: usize) -> Result<Self> {
        Self::new(n, (0..n).filter(|&i| i != center).map(|i| (center, i)))
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    /// Undirected edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Both orientations of every edge.
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().flat_map(|&(i, j)| [(i, j), (j, i)])
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Players adjacent to every other player.
    pub fn core_players(&self) -> Vec<usize> {
        (0..self.num_players)
            .filter(|&i| self.degree(i) == self.num_players - 1)
            .collect()
    }

    pub fn is_core(&self, i: usize) -> bool {
        self.degree(i) == self.num_players - 1
    }

    /// Center of a star (every edge touches it), if the graph is one.
    /// For two players the lower index is reported.
    pub fn star_center(&self) -> Option<usize> {
        (0..self.num_players).find(|&c| self.edges.iter().all(|&(i, j)| i == c || j == c))
    }

    /// Two-colouring, if the graph is bipartite.
    pub fn bipartition(&self) -> Option<Vec<bool>> {
        let mut side: Vec<Option<bool>> = vec![None; self.num_players];
        side[0] = Some(false);
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            let su = side[u].expect("visited");
            for &v in &self.neighbors[u] {
                match side[v] {
                    None => {
                        side[v] = Some(!su);
                        queue.push_back(v);
                    }
                    Some(sv) if sv == su => return None,
                    _ => {}
                }
            }
        }
        Some(side.into_iter().map(|s| s.expect("connected")).collect())
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_players];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
