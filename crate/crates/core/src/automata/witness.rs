//! Isometries of the form v ↦ t·σ(v), with σ a symmetry of the presentation.
//!
//! On coset graphs σ preserves the vertex stabiliser, so the map is well
//! defined on cosets. Words are kept in normal form; every product is checked
//! against the certified length of the rewriting system.

use serde::{Deserialize, Serialize};

use crate::ball::{CayleyBall, GroupData};
use crate::word::{Symbol, Word};

use super::TypeError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Witness {
    /// Index into the ball's symmetry list (0 is the identity).
    pub sigma: u16,
    pub t: Word,
}

impl Witness {
    pub fn identity() -> Self {
        Witness { sigma: 0, t: Vec::new() }
    }
}

pub struct Mapper<'a> {
    pub ball: &'a CayleyBall,
    pub g: &'a GroupData,
    /// compose[i][j] = index of σ_i ∘ σ_j.
    compose: Vec<Vec<u16>>,
    inverse: Vec<u16>,
}

impl<'a> Mapper<'a> {
    pub fn new(ball: &'a CayleyBall) -> Result<Self, TypeError> {
        let g = ball.group().ok_or(TypeError::Unlabeled)?;
        let sy = &g.symmetries;
        let index = |p: &[Symbol]| sy.iter().position(|q| q == p).expect("symmetries form a group") as u16;
        let compose = sy
            .iter()
            .map(|a| sy.iter().map(|b| index(&b.iter().map(|&s| a[s as usize]).collect::<Vec<_>>())).collect())
            .collect();
        let inverse = sy
            .iter()
            .map(|a| {
                let mut inv = vec![0; a.len()];
                for (s, &t) in a.iter().enumerate() {
                    inv[t as usize] = s as Symbol;
                }
                index(&inv)
            })
            .collect();
        Ok(Mapper { ball, g, compose, inverse })
    }

    pub fn symmetry_count(&self) -> usize {
        self.g.symmetries.len()
    }

    fn nf(&self, w: &[Symbol]) -> Result<Word, TypeError> {
        self.g.rs.normal_form_checked(w).map_err(|_| TypeError::Uncertified(w.len()))
    }

    fn sigma_word(&self, sigma: u16, w: &[Symbol]) -> Vec<Symbol> {
        let p = &self.g.symmetries[sigma as usize];
        w.iter().map(|&s| p[s as usize]).collect()
    }

    /// Normal form of φ(e) for a group element e given in normal form.
    pub fn apply_element(&self, w: &Witness, e: &[Symbol]) -> Result<Word, TypeError> {
        let mut word = w.t.clone();
        word.extend(self.sigma_word(w.sigma, e));
        self.nf(&word)
    }

    /// φ(v), or `None` when the image leaves the ball.
    pub fn apply(&self, w: &Witness, v: u32) -> Result<Option<u32>, TypeError> {
        let e = self.apply_element(w, self.g.word(v))?;
        Ok(self.g.locate(&e).map(|(u, _)| u))
    }

    /// a ∘ b.
    pub fn compose(&self, a: &Witness, b: &Witness) -> Result<Witness, TypeError> {
        Ok(Witness { sigma: self.compose[a.sigma as usize][b.sigma as usize], t: self.apply_element(a, &b.t)? })
    }

    pub fn inverse(&self, w: &Witness) -> Result<Witness, TypeError> {
        let s = self.inverse[w.sigma as usize];
        let tinv = self.g.alphabet().invert(&w.t);
        Ok(Witness { sigma: s, t: self.nf(&self.sigma_word(s, &tinv))? })
    }

    /// Every witness sending `x` to `y`, in a fixed order: symmetry index,
    /// then frame rotation.
    pub fn candidates(&self, x: u32, y: u32) -> Result<Vec<Witness>, TypeError> {
        let m = self.g.rotations();
        let gen = self.g.stabilizer.map(|(s, _)| s);
        let mut out = Vec::new();
        for sigma in 0..self.symmetry_count() as u16 {
            let sx = self.nf(&self.sigma_word(sigma, self.g.word(x)))?;
            let sx_inv = self.g.alphabet().invert(&sx);
            for j in 0..m {
                let mut word = self.g.word(y).to_vec();
                word.extend(std::iter::repeat_n(gen.unwrap_or(0), j as usize));
                word.extend_from_slice(&sx_inv);
                out.push(Witness { sigma, t: self.nf(&word)? });
            }
        }
        Ok(out)
    }

    pub fn format(&self, w: &Witness) -> String {
        let t = if w.t.is_empty() { "ε".to_string() } else { self.g.alphabet().format(&w.t) };
        if w.sigma == 0 {
            t
        } else {
            format!("{t}∘σ{}", w.sigma)
        }
    }
}
