//! Finitely supported complex sequences on Z^n.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeIndex;

/// Element of l2_0(Z^n): finitely many nonzero complex values.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSeq {
    n: usize,
    entries: BTreeMap<LatticeIndex, Complex64>,
}

impl LatticeSeq {
    pub fn new(n: usize) -> Self {
        LatticeSeq {
            n,
            entries: BTreeMap::new(),
        }
    }

    /// Unit basis vector e_k.
    pub fn basis(n: usize, at: LatticeIndex) -> Self {
        let mut s = LatticeSeq::new(n);
        s.set(at, Complex64::new(1.0, 0.0));
        s
    }

    pub fn from_entries(
        n: usize,
        entries: impl IntoIterator<Item = (LatticeIndex, Complex64)>,
    ) -> Self {
        let mut s = LatticeSeq::new(n);
        for (k, v) in entries {
            s.set(k, v);
        }
        s
    }

    pub fn set(&mut self, at: LatticeIndex, v: Complex64) {
        assert_eq!(at.dim(), self.n, "sequence index dimension");
        self.entries.insert(at, v);
    }

    pub fn get(&self, at: &LatticeIndex) -> Complex64 {
        self.entries.get(at).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticeIndex, Complex64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries
            .values()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Normalized copy; a zero sequence stays zero.
    pub fn normalized(&self) -> LatticeSeq {
        let nrm = self.l2_norm();
        if nrm == 0.0 {
            return self.clone();
        }
        self.map_values(|v| v / nrm)
    }

    pub fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> LatticeSeq {
        LatticeSeq {
            n: self.n,
            entries: self.entries.iter().map(|(k, &v)| (k.clone(), f(v))).collect(),
        }
    }

    /// Translate the support: out(k) = self(k - shift).
    pub fn translate(&self, shift: &LatticeIndex) -> LatticeSeq {
        LatticeSeq {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(k, &v)| (k.add(shift), v))
                .collect(),
        }
    }

    pub fn add_scaled(&self, other: &LatticeSeq, c: Complex64) -> LatticeSeq {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            let cur = out.get(k);
            out.set(k.clone(), cur + c * v);
        }
        out
    }

    /// Checks unit norm within `tol`.
    pub fn require_unit(&self, tol: f64) -> Result<()> {
        let nrm = self.l2_norm();
        if (nrm - 1.0).abs() > tol {
            return Err(Error::NotUnitNorm(nrm));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SeqEntryDto {
    idx: Vec<i64>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SeqDto {
    n: usize,
    entries: Vec<SeqEntryDto>,
}

pub fn seq_from_json(text: &str) -> Result<LatticeSeq> {
    let dto: SeqDto = serde_json::from_str(text)?;
    let mut s = LatticeSeq::new(dto.n);
    for e in dto.entries {
        if e.idx.len() != dto.n {
            return Err(Error::DimensionMismatch {
                expected: dto.n,
                got: e.idx.len(),
            });
        }
        s.set(LatticeIndex(e.idx), Complex64::new(e.re, e.im));
    }
    Ok(s)
}

pub fn seq_to_json(s: &LatticeSeq) -> String {
    let dto = SeqDto {
        n: s.n(),
        entries: s
            .iter()
            .map(|(k, v)| SeqEntryDto {
                idx: k.0.clone(),
                re: v.re,
                im: v.im,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("sequence serialization cannot fail")
}

pub fn read_seq(path: impl AsRef<Path>) -> Result<LatticeSeq> {
    seq_from_json(&std::fs::read_to_string(path)?)
}
