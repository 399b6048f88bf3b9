//! Truncated tensor algebra `T^N(R^d)`.
//!
//! Coefficients of all levels live in one contiguous buffer. Level `k` holds
//! `d^k` entries starting at `(d^k - 1) / (d - 1)` (or `k` when `d = 1`). Inside
//! a level a word `i_1 … i_k` (letters `0..d`) sits at the lexicographic index
//! `Σ i_j · d^(k-j)`, see [`word_index`].

use std::ops::{Add, Deref, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest number of coefficients a tensor may hold.
const MAX_COEFFS: usize = 1 << 24;

fn level_offset(dim: usize, level: usize) -> usize {
    if dim == 1 {
        level
    } else {
        (dim.pow(level as u32) - 1) / (dim - 1)
    }
}

fn total_len(dim: usize, depth: usize) -> Option<usize> {
    let mut total = 0usize;
    let mut block = 1usize;
    for _ in 0..=depth {
        total = total.checked_add(block)?;
        block = block.checked_mul(dim)?;
    }
    (total <= MAX_COEFFS).then_some(total)
}

/// Position of `word` (letters in `0..dim`) inside its level block.
pub fn word_index(dim: usize, word: &[usize]) -> Result<usize> {
    word.iter().try_fold(0usize, |acc, &letter| {
        if letter >= dim {
            Err(Error::LetterOutOfRange { letter, dim })
        } else {
            Ok(acc * dim + letter)
        }
    })
}

/// Inverse of [`word_index`]: the word of length `level` stored at `index`.
pub fn word_at(dim: usize, level: usize, mut index: usize) -> Vec<usize> {
    let mut word = vec![0; level];
    for slot in word.iter_mut().rev() {
        *slot = index % dim;
        index /= dim;
    }
    word
}

/// Element of the truncated tensor algebra over `R^dim` up to level `depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedTensor<S> {
    dim: usize,
    depth: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> TruncatedTensor<S> {
    pub fn zeros(dim: usize, depth: usize) -> Result<Self> {
        if dim == 0 || depth == 0 {
            return Err(Error::InvalidShape { dim, depth });
        }
        let len = total_len(dim, depth).ok_or(Error::InvalidShape { dim, depth })?;
        Ok(Self {
            dim,
            depth,
            coeffs: vec![S::zero(); len],
        })
    }

    /// Scalar `value` embedded at level 0.
    pub fn scalar(dim: usize, depth: usize, value: S) -> Result<Self> {
        let mut t = Self::zeros(dim, depth)?;
        t.coeffs[0] = value;
        Ok(t)
    }

    /// Pure level-1 element with coordinates `v`.
    pub fn from_vector(depth: usize, v: &[S]) -> Result<Self> {
        let mut t = Self::zeros(v.len(), depth)?;
        t.level_mut(1).copy_from_slice(v);
        t.check_finite()?;
        Ok(t)
    }

    /// Basis vector `e_letter` at level 1.
    pub fn basis(dim: usize, depth: usize, letter: usize) -> Result<Self> {
        if letter >= dim {
            return Err(Error::LetterOutOfRange { letter, dim });
        }
        let mut t = Self::zeros(dim, depth)?;
        t.level_mut(1)[letter] = S::one();
        Ok(t)
    }

    /// Builds a tensor from per-level blocks; `levels[k]` must hold `dim^k` values.
    pub fn from_levels(dim: usize, depth: usize, levels: &[Vec<S>]) -> Result<Self> {
        let mut t = Self::zeros(dim, depth)?;
        if levels.len() != depth + 1 {
            return Err(Error::LevelLength {
                level: levels.len().min(depth + 1),
                expected: depth + 1,
                found: levels.len(),
            });
        }
        for (k, block) in levels.iter().enumerate() {
            let expected = dim.pow(k as u32);
            if block.len() != expected {
                return Err(Error::LevelLength {
                    level: k,
                    expected,
                    found: block.len(),
                });
            }
            t.level_mut(k).copy_from_slice(block);
        }
        t.check_finite()?;
        Ok(t)
    }

    /// Builds a tensor from the flat coefficient buffer (all levels, in order).
    pub fn from_coeffs(dim: usize, depth: usize, coeffs: Vec<S>) -> Result<Self> {
        let expected = total_len(dim, depth).ok_or(Error::InvalidShape { dim, depth })?;
        if dim == 0 || depth == 0 {
            return Err(Error::InvalidShape { dim, depth });
        }
        if coeffs.len() != expected {
            return Err(Error::LevelLength {
                level: depth,
                expected,
                found: coeffs.len(),
            });
        }
        let t = Self { dim, depth, coeffs };
        t.check_finite()?;
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [S] {
        &mut self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn level(&self, k: usize) -> &[S] {
        assert!(k <= self.depth, "level {k} above depth {}", self.depth);
        let start = level_offset(self.dim, k);
        &self.coeffs[start..start + self.dim.pow(k as u32)]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [S] {
        assert!(k <= self.depth, "level {k} above depth {}", self.depth);
        let start = level_offset(self.dim, k);
        let len = self.dim.pow(k as u32);
        &mut self.coeffs[start..start + len]
    }

    /// Per-level copies of the coefficients.
    pub fn levels(&self) -> Vec<Vec<S>> {
        (0..=self.depth).map(|k| self.level(k).to_vec()).collect()
    }

    /// Level-0 coefficient.
    pub fn scalar_part(&self) -> S {
        self.coeffs[0]
    }

    /// Coefficient of the word `word` (letters in `0..dim`).
    pub fn coeff(&self, word: &[usize]) -> Result<S> {
        if word.len() > self.depth {
            return Err(Error::InvalidShape {
                dim: self.dim,
                depth: word.len(),
            });
        }
        Ok(self.level(word.len())[word_index(self.dim, word)?])
    }

    pub fn set_coeff(&mut self, word: &[usize], value: S) -> Result<()> {
        if word.len() > self.depth {
            return Err(Error::InvalidShape {
                dim: self.dim,
                depth: word.len(),
            });
        }
        let idx = word_index(self.dim, word)?;
        self.level_mut(word.len())[idx] = value;
        Ok(())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.depth == other.depth
    }

    pub fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(
                self.dim,
                self.depth,
                other.dim,
                other.depth,
            ))
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.coeffs.iter().position(|c| !c.is_finite()) {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Truncated tensor product `self ⊗ other`.
    pub fn tensor_product(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.product_unchecked(other))
    }

    pub(crate) fn product_unchecked(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = vec![S::zero(); self.coeffs.len()];
        for k in 0..=self.depth {
            let out_start = level_offset(d, k);
            for i in 0..=k {
                let left = self.level(i);
                let right = other.level(k - i);
                let width = right.len();
                for (a, &l) in left.iter().enumerate() {
                    if l == S::zero() {
                        continue;
                    }
                    let row = &mut out[out_start + a * width..out_start + (a + 1) * width];
                    for (o, &r) in row.iter_mut().zip(right) {
                        *o += l * r;
                    }
                }
            }
        }
        Self {
            dim: d,
            depth: self.depth,
            coeffs: out,
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, factor: S) -> Self {
        self.map(|c| c * factor)
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            dim: self.dim,
            depth: self.depth,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        Self {
            dim: self.dim,
            depth: self.depth,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// In-place `self += factor * other`.
    pub fn axpy(&mut self, factor: S, other: &Self) -> Result<()> {
        self.check_shape(other)?;
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Flat Euclidean pairing over every coefficient (level 0 included).
    pub fn inner_product(&self, other: &Self) -> Result<S> {
        self.check_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub fn norm_squared(&self) -> S {
        self.coeffs.iter().map(|&c| c * c).sum()
    }

    pub fn norm(&self) -> S {
        self.norm_squared().sqrt()
    }

    pub fn max_abs(&self) -> S {
        self.coeffs
            .iter()
            .fold(S::zero(), |m, &c| if c.abs() > m { c.abs() } else { m })
    }

    /// Largest coefficientwise deviation between two tensors of equal shape.
    pub fn max_abs_diff(&self, other: &Self) -> Result<S> {
        self.check_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    /// `self ⊗ other − other ⊗ self`.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let gh = self.product_unchecked(other);
        let hg = other.product_unchecked(self);
        Ok(gh.zip_with(&hg, |a, b| a - b))
    }

    /// Truncated exponential series `1 + Σ_{k≤N} v^{⊗k} / k!`.
    ///
    /// The input must have a zero level-0 coefficient. The result has level-0
    /// equal to one; it is group-like whenever the input is a Lie element.
    pub fn exp(&self) -> Result<GroupElement<S>> {
        if self.scalar_part() != S::zero() {
            return Err(Error::ScalarPart {
                expected: 0.0,
                found: self.scalar_part().as_f64(),
            });
        }
        let one = Self::scalar(self.dim, self.depth, S::one())?;
        // Horner: 1 + v(1 + v/2(1 + v/3(…)))
        let mut acc = one.clone();
        for k in (1..=self.depth).rev() {
            let inv_k = S::one() / S::from_usize_lossy(k);
            acc = self.product_unchecked(&acc).scale(inv_k);
            acc.coeffs[0] += S::one();
        }
        Ok(GroupElement(acc))
    }

    /// Truncated logarithm `Σ_{k≤N} (−1)^{k+1} (g − 1)^{⊗k} / k`.
    pub fn log(&self) -> Result<Self> {
        if self.scalar_part() != S::one() {
            return Err(Error::ScalarPart {
                expected: 1.0,
                found: self.scalar_part().as_f64(),
            });
        }
        let mut x = self.clone();
        x.coeffs[0] = S::zero();
        let mut power = x.clone();
        let mut acc = Self::zeros(self.dim, self.depth)?;
        for k in 1..=self.depth {
            let sign = if k % 2 == 1 { S::one() } else { -S::one() };
            acc.axpy(sign / S::from_usize_lossy(k), &power)?;
            if k < self.depth {
                power = power.product_unchecked(&x);
            }
        }
        Ok(acc)
    }

    /// Deviation from the level-2 shuffle identity `sym(π₂) = ½ π₁ ⊗ π₁`
    /// together with `|π₀ − 1|`.
    pub fn group_like_deviation(&self) -> S {
        let mut dev = (self.scalar_part() - S::one()).abs();
        if self.depth >= 2 {
            let d = self.dim;
            let l1 = self.level(1);
            let l2 = self.level(2);
            let half = S::lit(0.5);
            for i in 0..d {
                for j in i..d {
                    let sym = half * (l2[i * d + j] + l2[j * d + i]);
                    dev = dev.max((sym - half * l1[i] * l1[j]).abs());
                }
            }
        }
        dev
    }

    pub fn is_group_like(&self, tol: S) -> bool {
        self.is_finite() && self.group_like_deviation() <= tol
    }

    /// Largest violation of `g_u g_v = Σ_{w ∈ u ш v} g_w` over all word pairs
    /// with `|u| + |v| ≤ depth`. Cost grows like `d^(2N)`; meant for `N ≤ 3`.
    pub fn shuffle_deviation(&self) -> S {
        let d = self.dim;
        let mut dev = (self.scalar_part() - S::one()).abs();
        for lu in 1..self.depth {
            for lv in 1..=(self.depth - lu) {
                for iu in 0..d.pow(lu as u32) {
                    let u = word_at(d, lu, iu);
                    for iv in 0..d.pow(lv as u32) {
                        let v = word_at(d, lv, iv);
                        let lhs = self.level(lu)[iu] * self.level(lv)[iv];
                        let block = self.level(lu + lv);
                        let rhs: S = shuffle(&u, &v)
                            .iter()
                            .map(|w| block[w.iter().fold(0, |acc, &l| acc * d + l)])
                            .sum();
                        dev = dev.max((lhs - rhs).abs());
                    }
                }
            }
        }
        dev
    }
}

/// All interleavings of `u` and `v`, with multiplicity.
fn shuffle(u: &[usize], v: &[usize]) -> Vec<Vec<usize>> {
    if u.is_empty() {
        return vec![v.to_vec()];
    }
    if v.is_empty() {
        return vec![u.to_vec()];
    }
    let mut out = Vec::new();
    for mut w in shuffle(&u[..u.len() - 1], v) {
        w.push(u[u.len() - 1]);
        out.push(w);
    }
    for mut w in shuffle(u, &v[..v.len() - 1]) {
        w.push(v[v.len() - 1]);
        out.push(w);
    }
    out
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<S: Scalar> $trait<&TruncatedTensor<S>> for &TruncatedTensor<S> {
            type Output = TruncatedTensor<S>;

            /// Panics when shapes differ.
            fn $method(self, rhs: &TruncatedTensor<S>) -> TruncatedTensor<S> {
                self.check_shape(rhs).expect("tensor shape mismatch");
                self.zip_with(rhs, |a, b| a $op b)
            }
        }
    };
}

binary_op!(Add, add, +);
binary_op!(Sub, sub, -);

impl<S: Scalar> Mul<&TruncatedTensor<S>> for &TruncatedTensor<S> {
    type Output = TruncatedTensor<S>;

    /// Tensor product. Panics when shapes differ.
    fn mul(self, rhs: &TruncatedTensor<S>) -> TruncatedTensor<S> {
        self.check_shape(rhs).expect("tensor shape mismatch");
        self.product_unchecked(rhs)
    }
}

impl<S: Scalar> Mul<S> for &TruncatedTensor<S> {
    type Output = TruncatedTensor<S>;

    fn mul(self, rhs: S) -> TruncatedTensor<S> {
        self.scale(rhs)
    }
}

impl<S: Scalar> Neg for &TruncatedTensor<S> {
    type Output = TruncatedTensor<S>;

    fn neg(self) -> TruncatedTensor<S> {
        self.map(|c| -c)
    }
}

/// Tensor with unit level-0 coefficient, the state space of signatures.
///
/// Constructed only through operations that preserve the group structure
/// (exponentials, products, signatures) or through [`GroupElement::from_tensor`],
/// which checks the level-2 shuffle identity.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<S>(TruncatedTensor<S>);

impl<S: Scalar> GroupElement<S> {
    /// Neutral element `(1, 0, …, 0)`.
    pub fn unit(dim: usize, depth: usize) -> Result<Self> {
        Ok(Self(TruncatedTensor::scalar(dim, depth, S::one())?))
    }

    /// Wraps `t` after checking `π₀ = 1` exactly and group-likeness within `tol`.
    pub fn from_tensor(t: TruncatedTensor<S>, tol: S) -> Result<Self> {
        t.check_finite()?;
        if t.scalar_part() != S::one() {
            return Err(Error::ScalarPart {
                expected: 1.0,
                found: t.scalar_part().as_f64(),
            });
        }
        let deviation = t.group_like_deviation();
        if deviation > tol {
            return Err(Error::NotGroupLike {
                deviation: deviation.as_f64(),
                tol: tol.as_f64(),
            });
        }
        Ok(Self(t))
    }

    /// Exponential of the level-1 element `v`; level `k` equals `v^{⊗k}/k!`.
    pub fn exp_vector(depth: usize, v: &[S]) -> Result<Self> {
        let mut t = TruncatedTensor::zeros(v.len(), depth)?;
        Self::fill_exp_vector(&mut t, v);
        t.check_finite()?;
        Ok(Self(t))
    }

    fn fill_exp_vector(t: &mut TruncatedTensor<S>, v: &[S]) {
        let d = t.dim;
        t.coeffs[0] = S::one();
        for k in 1..=t.depth {
            let prev_start = level_offset(d, k - 1);
            let prev_len = d.pow(k as u32 - 1);
            let start = level_offset(d, k);
            let inv_k = S::one() / S::from_usize_lossy(k);
            for a in 0..prev_len {
                let p = t.coeffs[prev_start + a] * inv_k;
                for (i, &vi) in v.iter().enumerate() {
                    t.coeffs[start + a * d + i] = p * vi;
                }
            }
        }
    }

    /// Group product; shapes must agree.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.tensor_product(&other.0)?))
    }

    /// `self ⊗ exp(v)` without materialising a checked intermediate.
    pub(crate) fn mul_exp_vector(&self, v: &[S]) -> Self {
        let mut step = TruncatedTensor {
            dim: self.0.dim,
            depth: self.0.depth,
            coeffs: vec![S::zero(); self.0.coeffs.len()],
        };
        Self::fill_exp_vector(&mut step, v);
        Self(self.0.product_unchecked(&step))
    }

    pub fn as_tensor(&self) -> &TruncatedTensor<S> {
        &self.0
    }

    pub fn into_tensor(self) -> TruncatedTensor<S> {
        self.0
    }
}

impl<S> Deref for GroupElement<S> {
    type Target = TruncatedTensor<S>;

    fn deref(&self) -> &TruncatedTensor<S> {
        &self.0
    }
}

impl<S: Scalar> Mul<&GroupElement<S>> for &GroupElement<S> {
    type Output = GroupElement<S>;

    /// Panics when shapes differ.
    fn mul(self, rhs: &GroupElement<S>) -> GroupElement<S> {
        GroupElement(&self.0 * &rhs.0)
    }
}
