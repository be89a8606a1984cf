//! Bitstrings with higher-order-first indexing, and the consistency and
//! compatibility relations between a decision's report and a chain of
//! fork values.
//!
//! `u[p]` is the bit of `u` at position `p`, counting from the left, where
//! `p` is usually itself a bitstring read as a binary number.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bitstring {
    bits: Vec<bool>,
}

impl Bitstring {
    pub fn new(bits: Vec<bool>) -> Self {
        Bitstring { bits }
    }

    pub fn repeat(bit: bool, len: usize) -> Self {
        Bitstring { bits: vec![bit; len] }
    }

    /// The `width` low bits of `value`, most significant first.
    pub fn from_value(value: u64, width: usize) -> Self {
        assert!(width <= 64);
        Bitstring { bits: (0..width).map(|i| value >> (width - 1 - i) & 1 == 1).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    /// Binary value, leftmost bit highest. `None` past 64 bits.
    pub fn value(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(self.bits.iter().fold(0u64, |acc, b| acc << 1 | *b as u64))
    }

    /// `self[index]`.
    pub fn at(&self, index: &Bitstring) -> Option<bool> {
        let i = usize::try_from(index.value()?).ok()?;
        self.get(i)
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        self.bits[i] = bit;
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b\"{self}\"")
    }
}

impl FromStr for Bitstring {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(BitsError::DomainMismatch(format!("`{c}` is not a bit"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Bitstring::new)
    }
}

/// `exp_2^j(k)`: `k` for `j = 0`, else `2^exp_2^{j-1}(k)`. `None` on overflow.
pub fn tower(j: usize, k: usize) -> Option<usize> {
    let mut v = k;
    for _ in 0..j {
        v = 1usize.checked_shl(u32::try_from(v).ok()?)?;
        if v == 0 {
            return None;
        }
    }
    Some(v)
}

fn check_report(w: &[Bitstring]) -> Result<usize, BitsError> {
    let k = w.first().ok_or_else(|| BitsError::DomainMismatch("empty report".into()))?.len();
    if k == 0 {
        return Err(BitsError::DomainMismatch("w_0 must be non-empty".into()));
    }
    if let Some((i, _)) = w.iter().enumerate().skip(1).find(|(_, b)| b.len() != 1) {
        return Err(BitsError::DomainMismatch(format!("w_{i} must be a single bit")));
    }
    Ok(k)
}

fn check_widths(u: &[Bitstring], k: usize) -> Result<(), BitsError> {
    for (i, ui) in u.iter().enumerate() {
        if Some(ui.len()) != tower(i, k) {
            return Err(BitsError::DomainMismatch(format!(
                "u_{i} has {} bits, expected exp_2^{i}({k})",
                ui.len()
            )));
        }
    }
    Ok(())
}

/// `w_0 = u_0` and `w_n = u_n[u_{n-1}]` for every `n ≥ 1`.
pub fn consistent(w: &[Bitstring], u: &[Bitstring]) -> Result<bool, BitsError> {
    let k = check_report(w)?;
    if w.len() != u.len() {
        return Err(BitsError::DomainMismatch("w and u differ in length".into()));
    }
    check_widths(u, k)?;
    if w[0] != u[0] {
        return Ok(false);
    }
    Ok((1..w.len()).all(|n| u[n].at(&u[n - 1]) == w[n].get(0)))
}

/// Whether some `u_0 .. u_{J-1}` makes `w` consistent with `(.., u_J)`.
pub fn compatible(w: &[Bitstring], u_last: &Bitstring) -> Result<bool, BitsError> {
    let k = check_report(w)?;
    let j = w.len() - 1;
    if Some(u_last.len()) != tower(j, k) {
        return Err(BitsError::DomainMismatch(format!(
            "u_{j} has {} bits, expected exp_2^{j}({k})",
            u_last.len()
        )));
    }
    Ok(chain_exists(w, j, u_last))
}

/// Some position of `u` (an assignment to `u_{j-1}`) holds `w_j` and is
/// itself compatible with the shorter report.
fn chain_exists(w: &[Bitstring], j: usize, u: &Bitstring) -> bool {
    if j == 0 {
        return *u == w[0];
    }
    let want = w[j].get(0);
    if j == 1 {
        return u.at(&w[0]) == want;
    }
    let width = u.len().trailing_zeros() as usize;
    (0..u.len()).any(|p| {
        u.get(p) == want && chain_exists(w, j - 1, &Bitstring::from_value(p as u64, width))
    })
}

/// Given reports `w ≠ w̄` that first differ at `J'` and a fork prefix
/// `u_0 .. u_{J'-1}` consistent with `w`, returns `u_{J'} .. u_J` such that
/// `w` is consistent with the whole chain and `w̄` is incompatible with
/// `u_J`.
pub fn adversarial_forks(
    w: &[Bitstring],
    wbar: &[Bitstring],
    u_prefix: &[Bitstring],
) -> Result<Vec<Bitstring>, BitsError> {
    let k = check_report(w)?;
    if check_report(wbar)? != k || wbar.len() != w.len() {
        return Err(BitsError::DomainMismatch("w and w̄ have different shapes".into()));
    }
    let jp = (0..w.len())
        .find(|i| w[*i] != wbar[*i])
        .ok_or_else(|| BitsError::PreconditionViolated("w equals w̄".into()))?;
    if u_prefix.len() != jp {
        return Err(BitsError::PreconditionViolated(format!(
            "expected {jp} fork values before the first difference, got {}",
            u_prefix.len()
        )));
    }
    check_widths(u_prefix, k)?;
    if jp > 0 && !consistent(&w[..jp], u_prefix)? {
        return Err(BitsError::PreconditionViolated("prefix is not consistent with w".into()));
    }
    let mut out = Vec::with_capacity(w.len() - jp);
    let first = if jp == 0 {
        w[0].clone()
    } else {
        let width = tower(jp, k).ok_or_else(|| BitsError::DomainMismatch("width overflow".into()))?;
        Bitstring::repeat(w[jp].bits[0], width)
    };
    out.push(first);
    for j in jp + 1..w.len() {
        let width = tower(j, k).ok_or_else(|| BitsError::DomainMismatch("width overflow".into()))?;
        let prev = out.last().expect("non-empty");
        let mut u = Bitstring::repeat(!wbar[j].bits[0], width);
        let p = usize::try_from(prev.value().expect("index fits")).expect("index fits");
        u.set(p, w[j].bits[0]);
        out.push(u);
    }
    Ok(out)
}

/// Packed-value form of [`compatible`]: `w0` has `k` bits, `ws` holds
/// `w_1 .. w_J` and `u` is the `width`-bit value of `u_J`.
pub fn compatible_packed(w0: u64, k: u32, ws: &[bool], u: u64, width: u32) -> bool {
    fn bit(v: u64, width: u32, p: u64) -> Option<bool> {
        (p < width as u64).then(|| v >> (width as u64 - 1 - p) & 1 == 1)
    }
    fn rec(w0: u64, k: u32, ws: &[bool], u: u64, width: u32) -> bool {
        match ws.split_last() {
            None => width == k && u == w0,
            Some((last, rest)) => {
                if rest.is_empty() {
                    return bit(u, width, w0) == Some(*last);
                }
                let inner = width.trailing_zeros();
                (0..width as u64)
                    .any(|p| bit(u, width, p) == Some(*last) && rec(w0, k, rest, p, inner))
            }
        }
    }
    rec(w0, k, ws, u, width)
}
