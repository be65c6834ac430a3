use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore};

use crate::error::{domain, Result};
use crate::split::{embed, SplitSpec};
use crate::tensor::{trace, CMatrix, DensityMatrix};

/// Measurement access to copies of an unknown state.
///
/// A source hands out a *realized product state* for each batch: a list of
/// local density matrices `ω_0, …, ω_{t-1}`. Every source in this module is
/// a classical mixture of product states, so measuring the realized state
/// with the Born rule reproduces the outcome law of the true batch exactly.
pub trait MeasurableState: Send + Sync {
    fn dim(&self) -> usize;

    /// Local states for one batch of `t` copies. `None` means the batch was
    /// discarded (only conditioned sources do this).
    fn draw_batch(&self, t: usize, rng: &mut dyn RngCore) -> Result<Option<Vec<CMatrix>>>;

    /// Copies of the underlying unknown state used so far.
    fn copies_consumed(&self) -> u64;
}

/// Direct access to `ρ`; the only source that consumes copies.
#[derive(Debug)]
pub struct DirectSource {
    rho: DensityMatrix,
    consumed: AtomicU64,
}

impl DirectSource {
    pub fn new(rho: DensityMatrix) -> Self {
        Self {
            rho,
            consumed: AtomicU64::new(0),
        }
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }
}

impl MeasurableState for DirectSource {
    fn dim(&self) -> usize {
        self.rho.dim()
    }

    fn draw_batch(&self, t: usize, _rng: &mut dyn RngCore) -> Result<Option<Vec<CMatrix>>> {
        self.consumed.fetch_add(t as u64, Ordering::Relaxed);
        Ok(Some(vec![self.rho.matrix().clone(); t]))
    }

    fn copies_consumed(&self) -> u64 {
        self.consumed.load(Ordering::Relaxed)
    }
}

/// `λ·ρ + (1−λ)·σ`: each position independently holds a copy of the inner
/// state with probability `λ` and a fresh `σ` otherwise.
pub struct MixtureSource<'a> {
    inner: &'a dyn MeasurableState,
    sigma: CMatrix,
    lambda: f64,
}

impl<'a> MixtureSource<'a> {
    pub fn new(inner: &'a dyn MeasurableState, sigma: &DensityMatrix, lambda: f64) -> Result<Self> {
        if sigma.dim() != inner.dim() {
            return domain("mixture components have different dimensions");
        }
        if !(0.0..=1.0).contains(&lambda) {
            return domain(format!("mixing weight {lambda} outside [0, 1]"));
        }
        Ok(Self {
            inner,
            sigma: sigma.matrix().clone(),
            lambda,
        })
    }
}

impl MeasurableState for MixtureSource<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn draw_batch(&self, t: usize, rng: &mut dyn RngCore) -> Result<Option<Vec<CMatrix>>> {
        let mask: Vec<bool> = (0..t).map(|_| rng.random::<f64>() < self.lambda).collect();
        let s = mask.iter().filter(|&&b| b).count();
        let mut inner = if s > 0 {
            match self.inner.draw_batch(s, rng)? {
                Some(v) => v.into_iter(),
                None => return Ok(None),
            }
        } else {
            Vec::new().into_iter()
        };
        Ok(Some(
            mask.into_iter()
                .map(|b| {
                    if b {
                        inner.next().expect("one inner copy per selected slot")
                    } else {
                        self.sigma.clone()
                    }
                })
                .collect(),
        ))
    }

    fn copies_consumed(&self) -> u64 {
        self.inner.copies_consumed()
    }
}

/// `W ω W†` applied to every copy (a change of basis).
pub struct RotatedSource<'a> {
    inner: &'a dyn MeasurableState,
    w: CMatrix,
}

impl<'a> RotatedSource<'a> {
    pub fn new(inner: &'a dyn MeasurableState, w: CMatrix) -> Result<Self> {
        if w.nrows() != inner.dim() || !w.is_square() {
            return domain("rotation has the wrong size");
        }
        Ok(Self { inner, w })
    }
}

impl MeasurableState for RotatedSource<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn draw_batch(&self, t: usize, rng: &mut dyn RngCore) -> Result<Option<Vec<CMatrix>>> {
        Ok(self.inner.draw_batch(t, rng)?.map(|b| {
            b.iter()
                .map(|o| &self.w * o * self.w.adjoint())
                .collect()
        }))
    }

    fn copies_consumed(&self) -> u64 {
        self.inner.copies_consumed()
    }
}

/// Copies of `Split(ρ)`: each copy is embedded by `V_s` with its own
/// uniformly random string `s`.
pub struct SplitSource<'a> {
    inner: &'a dyn MeasurableState,
    spec: SplitSpec,
}

impl<'a> SplitSource<'a> {
    pub fn new(inner: &'a dyn MeasurableState, spec: SplitSpec) -> Result<Self> {
        if spec.d() != inner.dim() {
            return domain("split spec does not match the source dimension");
        }
        Ok(Self { inner, spec })
    }

    pub fn spec(&self) -> &SplitSpec {
        &self.spec
    }
}

impl MeasurableState for SplitSource<'_> {
    fn dim(&self) -> usize {
        self.spec.k()
    }

    fn draw_batch(&self, t: usize, rng: &mut dyn RngCore) -> Result<Option<Vec<CMatrix>>> {
        let n = 1usize << self.spec.max_b();
        Ok(self.inner.draw_batch(t, rng)?.map(|b| {
            b.iter()
                .map(|o| embed(o, &self.spec, rng.random_range(0..n)))
                .collect()
        }))
    }

    fn copies_consumed(&self) -> u64 {
        self.inner.copies_consumed()
    }
}

/// Copies of `PρP/tr(PρP)` in the coordinates of an isometry `Q` with
/// `QQ† = P`. Each underlying copy is measured with `(P, I−P)`; a request
/// for `t'` copies draws one outer batch and keeps its first `t'` successes,
/// discarding the batch when there are fewer.
pub struct ConditionedSource<'a> {
    inner: &'a dyn MeasurableState,
    q: CMatrix,
    outer_t: usize,
    discarded: AtomicU64,
    accepted: AtomicU64,
}

impl<'a> ConditionedSource<'a> {
    pub fn new(inner: &'a dyn MeasurableState, q: CMatrix, outer_t: usize) -> Result<Self> {
        if q.nrows() != inner.dim() || q.ncols() == 0 || q.ncols() > q.nrows() {
            return domain("conditioning isometry has the wrong shape");
        }
        Ok(Self {
            inner,
            q,
            outer_t: outer_t.max(1),
            discarded: AtomicU64::new(0),
            accepted: AtomicU64::new(0),
        })
    }

    pub fn discarded_batches(&self) -> u64 {
        self.discarded.load(Ordering::Relaxed)
    }

    pub fn accepted_batches(&self) -> u64 {
        self.accepted.load(Ordering::Relaxed)
    }
}

impl MeasurableState for ConditionedSource<'_> {
    fn dim(&self) -> usize {
        self.q.ncols()
    }

    fn draw_batch(&self, t: usize, rng: &mut dyn RngCore) -> Result<Option<Vec<CMatrix>>> {
        // Single-copy requests draw single copies; batched ones draw the outer batch.
        let outer = if t <= 1 { 1 } else { self.outer_t.max(t) };
        let Some(batch) = self.inner.draw_batch(outer, rng)? else {
            self.discarded.fetch_add(1, Ordering::Relaxed);
            return Ok(None);
        };
        let mut kept = Vec::with_capacity(t);
        for omega in &batch {
            let sub = self.q.adjoint() * omega * &self.q;
            let p = trace(&sub).re;
            if rng.random::<f64>() < p {
                kept.push(sub / crate::tensor::c(p));
            }
        }
        if kept.len() < t {
            self.discarded.fetch_add(1, Ordering::Relaxed);
            return Ok(None);
        }
        kept.truncate(t);
        self.accepted.fetch_add(1, Ordering::Relaxed);
        Ok(Some(kept))
    }

    fn copies_consumed(&self) -> u64 {
        self.inner.copies_consumed()
    }
}
