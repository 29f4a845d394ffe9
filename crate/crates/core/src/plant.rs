//! Linear plant driven through an unreliable input channel.
//!
//! The controller senses `x(kT)` at the start of each block, keeps an
//! estimate by propagating acknowledged inputs, and computes `v` inputs
//! that steer the estimate to `x_des`:
//!
//! ```text
//! x(t+1) = A x(t) + G(t) B u(t) + w(t)
//! u(t..t+v-1) = pinv(Psi) (x_des - A^v xhat(t)),   Psi = [A^(v-1) B, ..., A B, B]
//! ```
//!
//! A failed slot discards the rest of the sequence and a new one is
//! computed from the next estimate. After `v` consecutive deliveries the
//! estimate sits at the target and the actuator holds the steady-state
//! input for the rest of the block.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::runlength::BlockShape;

/// Relative singular-value cutoff for rank decisions and pseudo-inverses.
pub const SVD_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    x_des: DVector<f64>,
    v: usize,
    noise_std: f64,
    a_pow_v: DMatrix<f64>,
    psi_pinv: DMatrix<f64>,
    steady_input: DVector<f64>,
    steady_exact: bool,
}

fn pinv(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let svd = m.clone().svd(true, true);
    let max = svd.singular_values.max();
    let eps = SVD_CUTOFF * max;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let inv = if max > 0.0 {
        svd.pseudo_inverse(eps).expect("both factors were computed")
    } else {
        DMatrix::zeros(m.ncols(), m.nrows())
    };
    (inv, rank)
}

impl PlantModel {
    /// Checks shapes and that `Psi` has full row rank.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        x_des: DVector<f64>,
        v: usize,
        noise_std: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "B is {}x{}, expected {n} rows",
                b.nrows(),
                b.ncols()
            )));
        }
        if x_des.len() != n {
            return Err(Error::Dimension(format!("x_des has {} entries", x_des.len())));
        }
        if v == 0 {
            return Err(Error::Config("controllability index must be at least 1".into()));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::Domain {
                name: "noise_std",
                value: noise_std,
                range: "[0, inf)",
            });
        }
        let m = b.ncols();
        let mut psi = DMatrix::zeros(n, v * m);
        let mut block = b.clone();
        for i in (0..v).rev() {
            psi.view_mut((0, i * m), (n, m)).copy_from(&block);
            block = &a * block;
        }
        let (psi_pinv, rank) = pinv(&psi);
        if rank < n {
            return Err(Error::RankDeficient { rank, dim: n });
        }
        let a_pow_v = a.pow(v as u32);
        let rhs = (DMatrix::identity(n, n) - &a) * &x_des;
        let (b_pinv, _) = pinv(&b);
        let steady_input = &b_pinv * &rhs;
        let steady_exact = (&b * &steady_input - &rhs).amax() <= 1e-9 * rhs.amax().max(1.0);
        Ok(Self {
            a,
            b,
            x_des,
            v,
            noise_std,
            a_pow_v,
            psi_pinv,
            steady_input,
            steady_exact,
        })
    }

    /// Double integrator with sampling step 0.1, target `(1, 0)`.
    pub fn double_integrator(v: usize) -> Result<Self> {
        Self::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            v,
            0.0,
        )
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn controllability_index(&self) -> usize {
        self.v
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.x_des
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Input held by the actuator once the target is reached: the
    /// least-squares solution of `(I - A) x_des = B u`.
    pub fn steady_input(&self) -> &DVector<f64> {
        &self.steady_input
    }

    /// Whether the steady-state input holds `x_des` exactly.
    pub fn target_is_equilibrium(&self) -> bool {
        self.steady_exact
    }

    /// `A x + B u`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    /// Estimate after `inputs.len()` slots from the sensed `x_sensed`,
    /// applying only acknowledged inputs.
    pub fn estimate_state(
        &self,
        x_sensed: &DVector<f64>,
        inputs: &[DVector<f64>],
        acks: &[bool],
    ) -> Result<DVector<f64>> {
        if inputs.len() != acks.len() {
            return Err(Error::Dimension(format!(
                "{} inputs but {} acknowledgements",
                inputs.len(),
                acks.len()
            )));
        }
        if x_sensed.len() != self.state_dim() {
            return Err(Error::Dimension(format!("state has {} entries", x_sensed.len())));
        }
        let mut x = x_sensed.clone();
        for (u, &ack) in inputs.iter().zip(acks) {
            if u.len() != self.input_dim() {
                return Err(Error::Dimension(format!("input has {} entries", u.len())));
            }
            x = if ack { self.step(&x, u) } else { &self.a * x };
        }
        Ok(x)
    }

    /// The `v` inputs `u(t), ..., u(t+v-1)` that take `x_hat` to `x_des`.
    pub fn control_sequence(&self, x_hat: &DVector<f64>) -> Vec<DVector<f64>> {
        let stacked = &self.psi_pinv * (&self.x_des - &self.a_pow_v * x_hat);
        let m = self.input_dim();
        (0..self.v)
            .map(|i| stacked.rows(i * m, m).into_owned())
            .collect()
    }

    /// Replays one block with slot outcomes `g`, without process noise.
    pub fn run_block(
        &self,
        shape: &BlockShape,
        x_sensed: &DVector<f64>,
        g: &[bool],
    ) -> Result<BlockTrace> {
        self.replay(shape, x_sensed, g, None::<&mut rand::rngs::ThreadRng>)
    }

    /// Like [`run_block`](Self::run_block) but also propagates the true
    /// state with Gaussian process noise of standard deviation `noise_std`
    /// per component.
    pub fn run_block_noisy<R: Rng + ?Sized>(
        &self,
        shape: &BlockShape,
        x_sensed: &DVector<f64>,
        g: &[bool],
        rng: &mut R,
    ) -> Result<BlockTrace> {
        self.replay(shape, x_sensed, g, Some(rng))
    }

    fn replay<R: Rng + ?Sized>(
        &self,
        shape: &BlockShape,
        x_sensed: &DVector<f64>,
        g: &[bool],
        mut rng: Option<&mut R>,
    ) -> Result<BlockTrace> {
        if g.len() != shape.slots() {
            return Err(Error::Dimension(format!(
                "{} slot outcomes for a block of {} slots",
                g.len(),
                shape.slots()
            )));
        }
        if shape.run() != self.v {
            return Err(Error::Dimension(format!(
                "block run length {} differs from controllability index {}",
                shape.run(),
                self.v
            )));
        }
        if x_sensed.len() != self.state_dim() {
            return Err(Error::Dimension(format!("state has {} entries", x_sensed.len())));
        }
        let noise = Normal::new(0.0, self.noise_std).map_err(|e| Error::Config(e.to_string()))?;
        let mut x_hat = x_sensed.clone();
        let mut x_true = x_sensed.clone();
        let mut seq = self.control_sequence(&x_hat);
        let mut idx = 0;
        let mut phase = Phase::Transmitting;
        let mut target_slot = None;
        let mut target_estimate = None;
        let mut records = Vec::with_capacity(g.len());
        for (t, &ok) in g.iter().enumerate() {
            let (slot_phase, input, applied) = if target_slot.is_some() {
                (Phase::Dummy, self.steady_input.clone(), true)
            } else {
                (phase, seq[idx].clone(), ok)
            };
            let zero = DVector::zeros(self.input_dim());
            let u_applied = if applied { &input } else { &zero };
            x_hat = self.step(&x_hat, u_applied);
            if let Some(rng) = rng.as_deref_mut() {
                let w = DVector::from_fn(self.state_dim(), |_, _| noise.sample(rng));
                x_true = self.step(&x_true, u_applied) + w;
            } else {
                x_true.clone_from(&x_hat);
            }
            if slot_phase != Phase::Dummy {
                if ok {
                    idx += 1;
                    if idx == self.v {
                        target_slot = Some(t + 1);
                        target_estimate = Some(x_hat.clone());
                    }
                } else {
                    seq = self.control_sequence(&x_hat);
                    idx = 0;
                    phase = Phase::Retransmitting;
                }
            }
            records.push(SlotRecord {
                slot: t + 1,
                phase: slot_phase,
                delivered: ok,
                input: input.iter().copied().collect(),
                estimate: x_hat.iter().copied().collect(),
                state: x_true.iter().copied().collect(),
            });
        }
        Ok(BlockTrace {
            controllable: target_slot.is_some(),
            target_slot,
            target_estimate: target_estimate.map(|x| x.iter().copied().collect()),
            final_estimate: x_hat.iter().copied().collect(),
            slots: records,
        })
    }
}

/// What the controller does in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Sending the sequence computed at the block start.
    Transmitting,
    /// Sending a sequence recomputed after a failed slot.
    Retransmitting,
    /// Target reached; dummy packets, actuator holds the steady input.
    Dummy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    /// 1-based slot index within the block.
    pub slot: usize,
    pub phase: Phase,
    pub delivered: bool,
    /// Input sent (or held, in the dummy phase).
    pub input: Vec<f64>,
    /// Estimate at the end of the slot.
    pub estimate: Vec<f64>,
    /// True state at the end of the slot; equals the estimate without noise.
    pub state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTrace {
    pub slots: Vec<SlotRecord>,
    /// Slot whose delivery completed the `v`-run.
    pub target_slot: Option<usize>,
    pub target_estimate: Option<Vec<f64>>,
    pub final_estimate: Vec<f64>,
    pub controllable: bool,
}
