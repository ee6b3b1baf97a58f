//! Finite cubes `{0..N-1}^d` with free (non-periodic) nearest-neighbour edges.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZrpError};

/// A cube of side `side` in dimension `dim`. Sites are numbered in row-major
/// order, the last coordinate varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cube {
    pub dim: usize,
    pub side: usize,
}

impl Cube {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 {
            return Err(ZrpError::InvalidArgument("dimension must be >= 1".into()));
        }
        if side == 0 {
            return Err(ZrpError::InvalidArgument("side must be >= 1".into()));
        }
        Ok(Cube { dim, side })
    }

    /// One-dimensional segment with `n` sites.
    pub fn segment(n: usize) -> Self {
        Cube { dim: 1, side: n }
    }

    pub fn num_sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        let mut s = site;
        for i in (0..self.dim).rev() {
            c[i] = s % self.side;
            s /= self.side;
        }
        c
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.side + c)
    }

    /// Nearest neighbours of `site` inside the cube.
    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        let c = self.coords(site);
        let mut out = Vec::with_capacity(2 * self.dim);
        for i in 0..self.dim {
            if c[i] > 0 {
                let mut d = c.clone();
                d[i] -= 1;
                out.push(self.site(&d));
            }
            if c[i] + 1 < self.side {
                let mut d = c.clone();
                d[i] += 1;
                out.push(self.site(&d));
            }
        }
        out
    }

    /// All ordered adjacent pairs `(x, y)`; each undirected edge appears twice.
    pub fn ordered_edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_sites())
            .flat_map(|x| self.neighbours(x).into_iter().map(move |y| (x, y)))
            .collect()
    }

    /// All ordered pairs of distinct sites (complete graph).
    pub fn ordered_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.num_sites();
        (0..n)
            .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
            .collect()
    }

    /// Checkerboard parity of a site (sum of coordinates mod 2).
    pub fn parity(&self, site: usize) -> usize {
        self.coords(site).iter().sum::<usize>() % 2
    }

    /// Split into the half with first coordinate `< side / 2` and the rest.
    /// For `side = 1` in one dimension there is nothing to split.
    pub fn halves(&self) -> (Vec<usize>, Vec<usize>) {
        let cut = self.side / 2;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for s in 0..self.num_sites() {
            if self.coords(s)[0] < cut {
                a.push(s);
            } else {
                b.push(s);
            }
        }
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_neighbours_are_free_boundary() {
        let c = Cube::segment(4);
        assert_eq!(c.neighbours(0), vec![1]);
        assert_eq!(c.neighbours(2), vec![1, 3]);
        assert_eq!(c.ordered_edges().len(), 6);
    }

    #[test]
    fn square_has_expected_edge_count() {
        let c = Cube::new(2, 3).unwrap();
        assert_eq!(c.num_sites(), 9);
        // 12 undirected edges on a 3x3 grid
        assert_eq!(c.ordered_edges().len(), 24);
        assert_eq!(c.site(&c.coords(7)), 7);
    }

    #[test]
    fn halves_partition() {
        let (a, b) = Cube::segment(5).halves();
        assert_eq!(a, vec![0, 1]);
        assert_eq!(b, vec![2, 3, 4]);
    }
}
