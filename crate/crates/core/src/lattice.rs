//! Lattice indices and finitely supported coefficient matrices on Z^n x Z^n.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of Z^n.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeIndex(pub Vec<i64>);

impl LatticeIndex {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticeIndex(coords)
    }

    /// Origin of Z^n.
    pub fn origin(n: usize) -> Self {
        LatticeIndex(vec![0; n])
    }

    /// One-dimensional index, the common case in tests.
    pub fn scalar(k: i64) -> Self {
        LatticeIndex(vec![k])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn sup_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// Euclidean length, used by the decaying weight family.
    pub fn euclid_norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&c| (c as f64) * (c as f64))
            .sum::<f64>()
            .sqrt()
    }

    pub fn add(&self, other: &LatticeIndex) -> LatticeIndex {
        LatticeIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &LatticeIndex) -> LatticeIndex {
        LatticeIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

/// Finitely supported complex matrix (a_{mu,nu}) on Z^n x Z^n.
///
/// Entries are stored sparsely in a sorted map so iteration order, and with it
/// every derived computation, is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMatrix {
    n: usize,
    entries: BTreeMap<(LatticeIndex, LatticeIndex), Complex64>,
}

impl LatticeMatrix {
    pub fn new(n: usize) -> Self {
        LatticeMatrix {
            n,
            entries: BTreeMap::new(),
        }
    }

    /// Build from an entry list; duplicate (mu, nu) keys are an error.
    pub fn from_entries(
        n: usize,
        entries: impl IntoIterator<Item = (LatticeIndex, LatticeIndex, Complex64)>,
    ) -> Result<Self> {
        let mut m = LatticeMatrix::new(n);
        for (mu, nu, a) in entries {
            m.check_dims(&mu, &nu)?;
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFinite("matrix entry"));
            }
            if m.entries.insert((mu.clone(), nu.clone()), a).is_some() {
                return Err(Error::DuplicateEntry { mu: mu.0, nu: nu.0 });
            }
        }
        Ok(m)
    }

    fn check_dims(&self, mu: &LatticeIndex, nu: &LatticeIndex) -> Result<()> {
        for idx in [mu, nu] {
            if idx.dim() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: idx.dim(),
                });
            }
        }
        Ok(())
    }

    /// Insert or overwrite an entry. Zero values are stored as given.
    pub fn set(&mut self, mu: LatticeIndex, nu: LatticeIndex, a: Complex64) -> Result<()> {
        self.check_dims(&mu, &nu)?;
        if !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::NonFinite("matrix entry"));
        }
        self.entries.insert((mu, nu), a);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, mu: &LatticeIndex, nu: &LatticeIndex) -> Complex64 {
        self.entries
            .get(&(mu.clone(), nu.clone()))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticeIndex, &LatticeIndex, Complex64)> {
        self.entries.iter().map(|((mu, nu), &a)| (mu, nu, a))
    }

    /// Max sup-norm over all stored indices.
    pub fn support_radius(&self) -> i64 {
        self.entries
            .keys()
            .map(|(mu, nu)| mu.sup_norm().max(nu.sup_norm()))
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .values()
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.values().map(|a| a.norm()).sum()
    }

    pub fn scale(&self, c: Complex64) -> LatticeMatrix {
        LatticeMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(k, &a)| (k.clone(), c * a))
                .collect(),
        }
    }

    /// Translate every index: a_{mu,nu} -> a_{mu - mu0, nu - nu0}.
    pub fn translate(&self, mu0: &LatticeIndex, nu0: &LatticeIndex) -> LatticeMatrix {
        LatticeMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|((mu, nu), &a)| ((mu.add(mu0), nu.add(nu0)), a))
                .collect(),
        }
    }

    /// Per-axis index ranges [lo, hi] of the mu-projection and nu-projection.
    pub fn index_ranges(&self) -> Option<(Vec<(i64, i64)>, Vec<(i64, i64)>)> {
        if self.entries.is_empty() {
            return None;
        }
        let mut mu_r = vec![(i64::MAX, i64::MIN); self.n];
        let mut nu_r = vec![(i64::MAX, i64::MIN); self.n];
        for (mu, nu) in self.entries.keys() {
            for a in 0..self.n {
                mu_r[a] = (mu_r[a].0.min(mu.0[a]), mu_r[a].1.max(mu.0[a]));
                nu_r[a] = (nu_r[a].0.min(nu.0[a]), nu_r[a].1.max(nu.0[a]));
            }
        }
        Some((mu_r, nu_r))
    }
}

/// Weight matrix W(mu, nu) = (1 + |mu| + |nu|)^(-decay) truncated to sup-norm <= radius.
pub fn decay_matrix(n: usize, decay: f64, radius: i64) -> LatticeMatrix {
    let mut m = LatticeMatrix::new(n);
    let mut stack = vec![Vec::<i64>::new()];
    // enumerate [-radius, radius]^{2n} as (mu, nu) pairs
    for _ in 0..2 * n {
        let mut next = Vec::new();
        for prefix in &stack {
            for c in -radius..=radius {
                let mut p = prefix.clone();
                p.push(c);
                next.push(p);
            }
        }
        stack = next;
    }
    for coords in stack {
        let mu = LatticeIndex(coords[..n].to_vec());
        let nu = LatticeIndex(coords[n..].to_vec());
        let w = (1.0 + mu.euclid_norm() + nu.euclid_norm()).powf(-decay);
        m.set(mu, nu, Complex64::new(w, 0.0)).expect("finite weight");
    }
    m
}

#[derive(Serialize, Deserialize)]
struct MatrixEntryDto {
    mu: Vec<i64>,
    nu: Vec<i64>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct MatrixDto {
    n: usize,
    entries: Vec<MatrixEntryDto>,
}

/// Parse the matrix file format. Unlisted entries are zero; duplicates error.
pub fn matrix_from_json(text: &str) -> Result<LatticeMatrix> {
    let dto: MatrixDto = serde_json::from_str(text)?;
    LatticeMatrix::from_entries(
        dto.n,
        dto.entries.into_iter().map(|e| {
            (
                LatticeIndex(e.mu),
                LatticeIndex(e.nu),
                Complex64::new(e.re, e.im),
            )
        }),
    )
}

pub fn matrix_to_json(m: &LatticeMatrix) -> String {
    let dto = MatrixDto {
        n: m.n(),
        entries: m
            .iter()
            .map(|(mu, nu, a)| MatrixEntryDto {
                mu: mu.0.clone(),
                nu: nu.0.clone(),
                re: a.re,
                im: a.im,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("matrix serialization cannot fail")
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<LatticeMatrix> {
    matrix_from_json(&std::fs::read_to_string(path)?)
}
