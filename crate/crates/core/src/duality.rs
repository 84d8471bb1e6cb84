//! Broadcast (BC) and multiple-access (MAC) sum rates and the user-by-user
//! MAC to BC covariance transform.
//!
//! All functions here take noise-normalized channels (see
//! [`ChannelSet::normalized`](crate::channel::ChannelSet::normalized)), so
//! every rate expression carries unit noise.
//!
//! For an encoding order `π`, the user at position `k` sees
//!
//! - `T = I + Σ_{l>k} h_π(l) q_π(l) h_π(l)ᴴ` (uplink interference not yet cancelled),
//! - `S = 1 + hᴴ (Σ_{l<k} R_π(l)) h` (downlink interference plus noise),
//!
//! and receives `R = T^{-1/2} f S q fᴴ T^{-1/2}` with `f` the unit direction
//! of `T^{-1/2} h`. Users are processed in order because `S` depends on the
//! covariances already produced.

use serde::{Deserialize, Serialize};

use crate::linalg::{eigh, fix_phase, identity, log2_det_hpd, outer, quad_form};
use crate::serde_complex;
use crate::{CMat, CVec, JcasError, Result};

/// Largest condition number accepted for `T` in the transform.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UplinkSolution {
    /// Scalar uplink power per user.
    pub q: Vec<f64>,
    /// Encoding order: `order[k]` is the user processed at position `k`.
    pub order: Vec<usize>,
}

impl UplinkSolution {
    pub fn zeros(k: usize) -> Self {
        UplinkSolution {
            q: vec![0.0; k],
            order: (0..k).collect(),
        }
    }

    pub fn new(q: Vec<f64>) -> Self {
        let order = (0..q.len()).collect();
        UplinkSolution { q, order }
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Self {
        self.order = order;
        self
    }

    pub fn total_power(&self) -> f64 {
        self.q.iter().sum()
    }

    pub fn validate(&self, p_tx: f64) -> Result<()> {
        validate_order(&self.order, self.q.len())?;
        if self.q.iter().any(|&q| !(q >= 0.0)) {
            return Err(JcasError::config("uplink.q", "powers must be nonnegative"));
        }
        if self.total_power() > p_tx + 1e-9 {
            return Err(JcasError::config("uplink.q", "total power exceeds budget"));
        }
        Ok(())
    }
}

pub fn validate_order(order: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if order.len() != k {
        return Err(JcasError::config("order", "must list every user once"));
    }
    for &u in order {
        if u >= k || seen[u] {
            return Err(JcasError::config(
                "order",
                "must be a permutation of the users",
            ));
        }
        seen[u] = true;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DownlinkCovariances {
    /// Per-user covariance, indexed by user.
    #[serde(with = "serde_complex::matrix_list")]
    pub r: Vec<CMat>,
    #[serde(with = "serde_complex::matrix")]
    pub r_x: CMat,
    pub per_user_rate_bits: Vec<f64>,
}

impl DownlinkCovariances {
    pub fn total_power(&self) -> f64 {
        crate::linalg::trace_re(&self.r_x)
    }

    /// Map every covariance through `X ↦ B X Bᴴ` (used to undo a whitening).
    pub fn congruence(&self, b: &CMat) -> DownlinkCovariances {
        let r: Vec<CMat> = self
            .r
            .iter()
            .map(|x| crate::linalg::hermitize(&(b * x * b.adjoint())))
            .collect();
        let n = b.nrows();
        let r_x = r.iter().fold(CMat::zeros(n, n), |acc, x| acc + x);
        DownlinkCovariances {
            r,
            r_x,
            per_user_rate_bits: self.per_user_rate_bits.clone(),
        }
    }
}

/// Intermediate quantities of the transform, indexed by user.
#[derive(Debug, Clone)]
pub struct BlockCoordState {
    pub t: Vec<CMat>,
    pub s: Vec<f64>,
    pub f: Vec<CVec>,
    /// `c_iᴴ = S_i^{1/2} T_i^{-1/2} f_i` stored as a column, so that
    /// `R_i = q_i c_iᴴ c_i`.
    pub c: Vec<CVec>,
}

impl BlockCoordState {
    /// Sensing gain `c_i M c_iᴴ` of user `i`.
    pub fn sensing_gain(&self, m: &CMat, i: usize) -> f64 {
        quad_form(m, &self.c[i])
    }
}

fn gram(h: &[CVec], q: &[f64], users: impl Iterator<Item = usize>) -> CMat {
    let n = h[0].len();
    let mut acc = identity(n);
    for j in users {
        if q[j] != 0.0 {
            acc += outer(&h[j], &h[j]).scale(q[j]);
        }
    }
    acc
}

/// `log2 det(I + Σ_i h_i q_i h_iᴴ)`.
pub fn mac_sum_rate(h: &[CVec], up: &UplinkSolution) -> f64 {
    let g = gram(h, &up.q, 0..h.len());
    log2_det_hpd(&g).expect("identity plus PSD is positive definite")
}

/// Per-user MAC rates under successive decoding in `up.order`.
pub fn mac_user_rates(h: &[CVec], up: &UplinkSolution) -> Vec<f64> {
    let k = h.len();
    let mut rates = vec![0.0; k];
    for (pos, &i) in up.order.iter().enumerate() {
        let t = gram(h, &up.q, up.order[pos + 1..].iter().copied());
        let x = t.lu().solve(&h[i]).expect("T is invertible");
        let g = (h[i].adjoint() * x)[(0, 0)].re;
        rates[i] = (1.0 + up.q[i] * g).log2();
    }
    rates
}

/// Dirty-paper BC rates: returns the sum and the per-user terms (by user).
pub fn bc_sum_rate(h: &[CVec], r: &[CMat], order: &[usize]) -> (f64, Vec<f64>) {
    let n = h[0].len();
    let mut rates = vec![0.0; h.len()];
    let mut acc = CMat::zeros(n, n);
    for &i in order {
        let before = quad_form(&acc, &h[i]);
        acc += &r[i];
        let after = quad_form(&acc, &h[i]);
        rates[i] = ((1.0 + after) / (1.0 + before)).log2();
    }
    (rates.iter().sum(), rates)
}

/// `A_M = I + Σ_{j≠i} h_j q_j h_jᴴ`.
pub fn interference_matrix(h: &[CVec], up: &UplinkSolution, i: usize) -> CMat {
    gram(h, &up.q, (0..h.len()).filter(|&j| j != i))
}

/// Effective channel `A_M^{-1/2} h_i`, so `h_eᴴ h_e = h_iᴴ A_M^{-1} h_i`.
pub fn effective_channel(h: &[CVec], up: &UplinkSolution, i: usize) -> CVec {
    let am = interference_matrix(h, up, i);
    crate::linalg::inv_sqrt_hermitian(&am) * &h[i]
}

pub fn mac_to_bc(
    h: &[CVec],
    up: &UplinkSolution,
) -> Result<(DownlinkCovariances, BlockCoordState)> {
    let k = h.len();
    let n = h[0].len();
    validate_order(&up.order, k)?;
    if up.q.len() != k {
        return Err(JcasError::Dimension(format!(
            "{} uplink powers for {k} users",
            up.q.len()
        )));
    }
    let mut r = vec![CMat::zeros(n, n); k];
    let mut state = BlockCoordState {
        t: vec![CMat::zeros(n, n); k],
        s: vec![1.0; k],
        f: vec![CVec::zeros(n); k],
        c: vec![CVec::zeros(n); k],
    };
    let mut acc = CMat::zeros(n, n);
    for (pos, &i) in up.order.iter().enumerate() {
        let t = gram(h, &up.q, up.order[pos + 1..].iter().copied());
        let e = eigh(&t);
        let cond = e.max() / e.min().max(f64::MIN_POSITIVE);
        if !(cond <= MAX_CONDITION) {
            return Err(JcasError::IllConditioned { user: i, cond });
        }
        let t_inv_sqrt = e.map(|v| 1.0 / v.sqrt());
        let s = 1.0 + quad_form(&acc, &h[i]);
        let v = &t_inv_sqrt * &h[i];
        let norm = v.norm();
        let mut f = if norm > 0.0 {
            v / crate::C64::new(norm, 0.0)
        } else {
            v
        };
        fix_phase(&mut f);
        let c = (&t_inv_sqrt * &f).scale(s.sqrt());
        let ri = crate::linalg::hermitize(&outer(&c, &c).scale(up.q[i]));
        acc += &ri;
        r[i] = ri;
        state.t[i] = t;
        state.s[i] = s;
        state.f[i] = f;
        state.c[i] = c;
    }
    let (_, rates) = bc_sum_rate(h, &r, &up.order);
    Ok((
        DownlinkCovariances {
            r,
            r_x: acc,
            per_user_rate_bits: rates,
        },
        state,
    ))
}
