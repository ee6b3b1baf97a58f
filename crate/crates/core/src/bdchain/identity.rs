//! Exact identity for the difference of conditional expectations given the
//! count in one half of a split lattice.
//!
//! With `G = Σ_{x∈Λ₁, y∈Λ₂} h_x(η_x) c_y(η_y)` and `h_x(k) = (k+1)/c_x(k+1)`:
//!
//! `ν(f|R₁=r₁) − ν(f|R₁=r₁−1) = γ₁(r₁−1)/(γ₁(r₁) r₁ |Λ₂|) ·
//!   [ν(Σ h_x c_y ∇_{y,x} f | R₁=r₁−1) + ν(f; G | R₁=r₁−1)]`.
//!
//! Exchanging the halves gives the mirrored form, conditioned on `R₁ = r₁`,
//! with prefactor `−γ₁(r₁)/(γ₁(r₁−1) (r−r₁+1) |Λ₁|)` and `h_y c_x ∇_{x,y}`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZrpError};
use crate::model::{CanonicalEnsemble, RateFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
}

pub fn conditional_difference_check(
    ens: &CanonicalEnsemble,
    rf: &RateFamily,
    lambda1: &[usize],
    lambda2: &[usize],
    f: &[f64],
    r1: usize,
    mirrored: bool,
) -> Result<IdentityCheck> {
    let r = ens.r;
    if r1 == 0 || r1 > r {
        return Err(ZrpError::InvalidArgument(format!("r1 must lie in 1..={r}, got {r1}")));
    }
    if f.len() != ens.len() {
        return Err(ZrpError::InvalidArgument("f must have one value per state".into()));
    }
    let count1 = |eta: &[u32]| lambda1.iter().map(|&x| eta[x] as usize).sum::<usize>();
    let gamma = ens.count_law(lambda1);
    if !(gamma[r1] > 0.0 && gamma[r1 - 1] > 0.0) {
        return Err(ZrpError::ZeroMass(if gamma[r1] > 0.0 { r1 - 1 } else { r1 }));
    }
    let cond = |k: usize, g: &dyn Fn(usize, &[u32]) -> f64| -> f64 {
        ens.states()
            .enumerate()
            .filter(|(_, eta)| count1(eta) == k)
            .map(|(i, eta)| ens.nu[i] * g(i, eta))
            .sum::<f64>()
            / gamma[k]
    };
    let lhs = cond(r1, &|i, _| f[i]) - cond(r1 - 1, &|i, _| f[i]);

    // (from, to) sets: particles move from `src` into `dst`
    let (src, dst, level, prefactor) = if mirrored {
        (
            lambda1,
            lambda2,
            r1,
            -gamma[r1] / (gamma[r1 - 1] * (r - r1 + 1) as f64 * lambda1.len() as f64),
        )
    } else {
        (
            lambda2,
            lambda1,
            r1 - 1,
            gamma[r1 - 1] / (gamma[r1] * r1 as f64 * lambda2.len() as f64),
        )
    };
    let mut scratch = vec![0u32; ens.num_sites()];
    let grad = |i: usize, eta: &[u32], scratch: &mut Vec<u32>| -> (f64, f64) {
        let mut g = 0.0;
        let mut sum = 0.0;
        for &y in src {
            if eta[y] == 0 {
                continue;
            }
            let cy = rf.rate(y, eta[y] as usize);
            for &x in dst {
                let w = rf.h_factor(x, eta[x] as usize) * cy;
                scratch.copy_from_slice(eta);
                scratch[y] -= 1;
                scratch[x] += 1;
                let j = ens.rank(scratch).expect("jump stays in the ensemble");
                g += w;
                sum += w * (f[j] - f[i]);
            }
        }
        (g, sum)
    };
    let mut e_grad = 0.0;
    let mut e_f = 0.0;
    let mut e_g = 0.0;
    let mut e_fg = 0.0;
    for (i, eta) in ens.states().enumerate() {
        if count1(eta) != level {
            continue;
        }
        let p = ens.nu[i] / gamma[level];
        let (g, s) = grad(i, eta, &mut scratch);
        e_grad += p * s;
        e_f += p * f[i];
        e_g += p * g;
        e_fg += p * f[i] * g;
    }
    let rhs = prefactor * (e_grad + e_fg - e_f * e_g);
    Ok(IdentityCheck {
        lhs,
        rhs,
        abs_err: (lhs - rhs).abs(),
    })
}
