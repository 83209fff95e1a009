use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Dense subchannel-by-user matrix, row-major by subchannel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_subchannels: usize,
    n_users: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(n_subchannels: usize, n_users: usize) -> Self {
        Self {
            n_subchannels,
            n_users,
            data: vec![0.0; n_subchannels * n_users],
        }
    }

    /// Builds a grid from `rows[k][j]`. Returns `None` on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n_users = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_users) {
            return None;
        }
        Some(Self {
            n_subchannels: rows.len(),
            n_users,
            data: rows.concat(),
        })
    }

    pub fn n_subchannels(&self) -> usize {
        self.n_subchannels
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_users..(k + 1) * self.n_users]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_subchannels).map(move |k| self[(k, j)])
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Grid {
    type Output = f64;

    fn index(&self, (k, j): (usize, usize)) -> &f64 {
        assert!(k < self.n_subchannels && j < self.n_users);
        &self.data[k * self.n_users + j]
    }
}

impl IndexMut<(usize, usize)> for Grid {
    fn index_mut(&mut self, (k, j): (usize, usize)) -> &mut f64 {
        assert!(k < self.n_subchannels && j < self.n_users);
        &mut self.data[k * self.n_users + j]
    }
}
