//! Mixed-radix factorization of a flat integer action space.
//!
//! A [`DecompositionPlan`] splits `total_actions` ids into `L` levels with
//! radices `β^1..β^L`. A per-level digit vector composes into a flat id by
//! Horner evaluation (`a := a·β^{i} + d_i`), and every id below the plan
//! capacity decomposes back into digits. Capacity may exceed
//! `total_actions`; the surplus ids form a dead zone the environment
//! treats as invalid actions.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("total_actions must be >= 1, got {0}")]
    InvalidTotalActions(usize),
    #[error("max_branch must be >= 2, got {0}")]
    InvalidMaxBranch(usize),
    #[error("plan capacity overflows usize")]
    CapacityOverflow,
    #[error("digit vector has {got} levels, plan has {expected}")]
    WrongLevelCount { expected: usize, got: usize },
    #[error("digit {digit} at level {level} exceeds radix {radix}")]
    DigitOutOfRange {
        level: usize,
        digit: usize,
        radix: usize,
    },
    #[error("action id {id} outside plan capacity {capacity}")]
    ActionIdOutOfRange { id: usize, capacity: usize },
}

/// Radices `β^1..β^L` factoring a flat action space of `total_actions` ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionPlan {
    total_actions: usize,
    radices: Vec<usize>,
    capacity: usize,
}

/// One primitive action per level; digit `i` lies in `[0, β^i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveActionVector(pub Vec<usize>);

impl PrimitiveActionVector {
    pub fn digits(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl DecompositionPlan {
    /// Builds a balanced plan: `L` is the smallest level count such that
    /// `max_branch^L >= total_actions`, every radix is the integer
    /// `ceil(total_actions^(1/L))`, and the last radix is then reduced
    /// greedily while capacity stays at or above `total_actions`.
    pub fn plan(total_actions: usize, max_branch: usize) -> Result<Self, PlanError> {
        if total_actions < 1 {
            return Err(PlanError::InvalidTotalActions(total_actions));
        }
        if max_branch < 2 {
            return Err(PlanError::InvalidMaxBranch(max_branch));
        }

        let levels = smallest_exponent(max_branch, total_actions);
        let radix = smallest_root(levels, total_actions)?;

        let mut radices = vec![radix; levels];
        let prefix: usize = radices[..levels - 1]
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .ok_or(PlanError::CapacityOverflow)?;
        // ceil(total / prefix), never below 1; radix^levels >= total keeps it <= radix.
        radices[levels - 1] = total_actions.div_ceil(prefix).max(1);

        let capacity = prefix
            .checked_mul(radices[levels - 1])
            .ok_or(PlanError::CapacityOverflow)?;
        debug_assert!(capacity >= total_actions);

        Ok(Self {
            total_actions,
            radices,
            capacity,
        })
    }

    /// A one-level plan whose single radix is the whole action space.
    /// This is the conventional single-agent layout: no dead zone, the
    /// composed action equals the primitive action.
    pub fn single_level(total_actions: usize) -> Result<Self, PlanError> {
        if total_actions < 1 {
            return Err(PlanError::InvalidTotalActions(total_actions));
        }
        Ok(Self {
            total_actions,
            radices: vec![total_actions],
            capacity: total_actions,
        })
    }

    /// A plan with explicit radices. Used by checkpoint loading and tests.
    pub fn from_radices(total_actions: usize, radices: Vec<usize>) -> Result<Self, PlanError> {
        if total_actions < 1 {
            return Err(PlanError::InvalidTotalActions(total_actions));
        }
        if radices.is_empty() || radices.iter().any(|&r| r == 0) {
            return Err(PlanError::InvalidTotalActions(total_actions));
        }
        let capacity = radices
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .ok_or(PlanError::CapacityOverflow)?;
        if capacity < total_actions {
            return Err(PlanError::ActionIdOutOfRange {
                id: total_actions - 1,
                capacity,
            });
        }
        Ok(Self {
            total_actions,
            radices,
            capacity,
        })
    }

    pub fn total_actions(&self) -> usize {
        self.total_actions
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn levels(&self) -> usize {
        self.radices.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Horner composition of per-level digits into a flat action id.
    /// Level 1 seeds the accumulator; each later level scales by its own
    /// radix and adds its digit. The result is strictly increasing in
    /// lexicographic digit order.
    pub fn compose(&self, digits: &[usize]) -> Result<usize, PlanError> {
        if digits.len() != self.radices.len() {
            return Err(PlanError::WrongLevelCount {
                expected: self.radices.len(),
                got: digits.len(),
            });
        }
        let mut id = 0usize;
        for (level, (&digit, &radix)) in digits.iter().zip(&self.radices).enumerate() {
            if digit >= radix {
                return Err(PlanError::DigitOutOfRange {
                    level: level + 1,
                    digit,
                    radix,
                });
            }
            id = id * radix + digit;
        }
        Ok(id)
    }

    /// Inverse of [`compose`](Self::compose): mixed-radix digit extraction.
    pub fn decompose(&self, action_id: usize) -> Result<PrimitiveActionVector, PlanError> {
        if action_id >= self.capacity {
            return Err(PlanError::ActionIdOutOfRange {
                id: action_id,
                capacity: self.capacity,
            });
        }
        let mut digits = vec![0usize; self.radices.len()];
        let mut rest = action_id;
        for (slot, &radix) in digits.iter_mut().zip(&self.radices).rev() {
            *slot = rest % radix;
            rest /= radix;
        }
        Ok(PrimitiveActionVector(digits))
    }
}

/// Smallest `l >= 1` with `base^l >= n`; integer form of `ceil(log_base n)`.
fn smallest_exponent(base: usize, n: usize) -> usize {
    let mut l = 1usize;
    let mut power = base;
    while power < n {
        power = match power.checked_mul(base) {
            Some(p) => p,
            None => return l + 1,
        };
        l += 1;
    }
    l
}

/// Smallest `r >= 1` with `r^levels >= n`; integer form of `ceil(n^(1/levels))`.
fn smallest_root(levels: usize, n: usize) -> Result<usize, PlanError> {
    let mut r = (n as f64).powf(1.0 / levels as f64).floor() as usize;
    r = r.max(1);
    // Float estimate can land one off in either direction.
    while r > 1 && pow_at_least(r - 1, levels, n) {
        r -= 1;
    }
    while !pow_at_least(r, levels, n) {
        r = r.checked_add(1).ok_or(PlanError::CapacityOverflow)?;
    }
    Ok(r)
}

fn pow_at_least(base: usize, exp: usize, n: usize) -> bool {
    let mut acc = 1usize;
    for _ in 0..exp {
        acc = match acc.checked_mul(base) {
            Some(a) => a,
            None => return true,
        };
        if acc >= n {
            return true;
        }
    }
    acc >= n
}
