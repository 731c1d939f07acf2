//! Volterra equation `u_n = u_{M+1} + Σ_{m>n} G_{n,m} R_m u_m` on a finite
//! horizon and its Neumann series.
//!
//! The backward solver runs in O(M) by carrying the partial sum
//! `S_n = Σ_{m=n+1}^{M} X_{m−1} R_m u_m`. The series solver is an O(K M²)
//! oracle that forms the kernel matrix explicitly.

use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{KernelData, Majorant};
use crate::error::{Error, Result};
use crate::mp::Cplx;
use crate::scaled::ScaledComplex;

#[derive(Clone, Debug)]
pub struct VolterraSolution {
    pub z: Cplx,
    /// truncation horizon M
    pub m: usize,
    /// u_0..=u_{M+1}
    pub u: Vec<Cplx>,
    /// e^{H_M} − 1: the bound on the effect of the tail truncation
    pub tail_bound: f64,
}

impl VolterraSolution {
    pub fn u(&self, n: usize) -> &Cplx {
        &self.u[n]
    }
}

/// Smallest M with e^{H_M} − 1 ≤ tol.
pub fn choose_horizon(k: &KernelData, maj: &Majorant, tol: f64) -> Result<usize> {
    let top = k.horizon();
    if maj.diverging {
        return Err(Error::HorizonTooSmall { best_bound: f64::INFINITY, best_m: top, tol });
    }
    let ok = |m: usize| maj.big_h(m).exp_m1() <= tol;
    if !ok(top) {
        return Err(Error::HorizonTooSmall { best_bound: maj.big_h(top).exp_m1(), best_m: top, tol });
    }
    // H is non-increasing, so bisect
    let (mut lo, mut hi) = (1usize, top);
    if ok(lo) {
        return Ok(lo.max(2));
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.max(2))
}

/// Backward solve with M chosen from the majorant.
pub fn solve_backward(k: &KernelData, maj: &Majorant, tol: f64) -> Result<VolterraSolution> {
    let m = choose_horizon(k, maj, tol)?;
    let mut sol = solve_backward_at(k, m, None)?;
    sol.tail_bound = maj.big_h(m).exp_m1();
    Ok(sol)
}

/// Backward solve at a fixed horizon with tail value u_{M+1} (default 1).
pub fn solve_backward_at(k: &KernelData, m: usize, tail: Option<&Cplx>) -> Result<VolterraSolution> {
    if m < 1 || m > k.horizon() {
        return Err(Error::OutOfRange { index: m as i64, max: k.horizon() as i64 });
    }
    let p = k.precision();
    let t = tail.cloned().unwrap_or_else(|| Cplx::one(p));
    let mut u = vec![Cplx::zero(p); m + 2];
    u[m + 1] = t.clone();
    u[m] = t;
    let mut s = ScaledComplex::zero(p);
    for n in (1..=m).rev() {
        let n_i = n as i64;
        let term = k.x(n_i - 1).mul_cplx(k.big_r(n_i)).mul_cplx(&u[n]);
        s = s.scaled_add(&term)?;
        let step = k.x_inv(n_i - 1).scaled_mul(&s)?;
        let step = step
            .to_cplx()
            .ok_or_else(|| Error::Range(format!("Volterra increment out of range at n = {}", n - 1)))?;
        u[n - 1] = &u[n] + &step;
    }
    Ok(VolterraSolution { z: k.z.clone(), m, u, tail_bound: 0.0 })
}

/// max over sampled n of |u_n − u_{M+1} − Σ_{m>n} G_{n,m} R_m u_m|, with G
/// by direct summation.
pub fn fixed_point_residual(k: &KernelData, sol: &VolterraSolution, samples: usize) -> f64 {
    let m = sol.m;
    let step = (m / samples.max(1)).max(1);
    let ns: Vec<usize> = (0..=m).step_by(step).collect();
    ns.par_iter()
        .map(|&n| {
            let p = k.precision();
            let mut acc = sol.u[m + 1].clone();
            let mut run = ScaledComplex::zero(p);
            for mm in (n + 1)..=m {
                run = &run + k.x_inv(mm as i64 - 1);
                let g = k.x(mm as i64 - 1) * &run;
                let v = g.mul_cplx(k.big_r(mm as i64)).mul_cplx(&sol.u[mm]);
                acc = &acc + &v.to_cplx().unwrap_or_else(|| Cplx::zero(p));
            }
            (&sol.u[n] - &acc).abs().to_f64()
        })
        .fold(|| 0.0, f64::max)
        .reduce(|| 0.0, f64::max)
}

/// Neumann series terms of the truncated equation with u^{(0)} ≡ 1.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesOracle {
    pub m: usize,
    /// exact h_m = max_{n<m} |G_{n,m} R_m|
    pub h: Vec<f64>,
    /// H_n = Σ_{p=n+1}^{M} h_p
    pub big_h: Vec<f64>,
    #[serde(skip)]
    pub terms: Vec<Vec<Cplx>>,
    /// max over k, n of |u^{(k)}_n| / (H_n^k / k!)
    pub worst_ratio: f64,
}

impl SeriesOracle {
    /// Σ_{k ≤ K} u^{(k)}.
    pub fn partial_sum(&self, kk: usize) -> Vec<Cplx> {
        let p = self.terms[0][0].prec();
        let mut s = vec![Cplx::zero(p); self.m + 1];
        for t in self.terms.iter().take(kk + 1) {
            for (a, b) in s.iter_mut().zip(t) {
                *a = &*a + b;
            }
        }
        s
    }

    /// H_0^{K+1}/(K+1)! · e^{H_0}: bound on the series truncation error.
    pub fn truncation_bound(&self, kk: usize) -> f64 {
        let h0 = self.big_h[0];
        let mut f = 1.0;
        for i in 1..=kk + 1 {
            f *= h0 / i as f64;
        }
        f * h0.exp()
    }
}

/// O(K M²) Neumann iteration; refuses when K·M² exceeds `cost_cap`.
pub fn solve_series(k: &KernelData, kk: usize, m: usize, cost_cap: u64) -> Result<SeriesOracle> {
    let est = kk as u64 * (m as u64) * (m as u64);
    if est > cost_cap {
        return Err(Error::CostCap { estimate: est, cap: cost_cap });
    }
    if m < 1 || m > k.horizon() {
        return Err(Error::OutOfRange { index: m as i64, max: k.horizon() as i64 });
    }
    let p = k.precision();
    // rows[n][m − n − 1] = G_{n,m} R_m
    let rows: Vec<Vec<Cplx>> = (0..m)
        .into_par_iter()
        .map(|n| {
            let mut run = ScaledComplex::zero(p);
            let mut row = Vec::with_capacity(m - n);
            for mm in (n + 1)..=m {
                run = &run + k.x_inv(mm as i64 - 1);
                let g = k.x(mm as i64 - 1) * &run;
                let v = g.mul_cplx(k.big_r(mm as i64));
                row.push(v.to_cplx().expect("kernel entry in range"));
            }
            row
        })
        .collect();
    let mut h = vec![0.0f64; m + 1];
    for (n, row) in rows.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            let a = v.abs().to_f64();
            let mm = n + 1 + i;
            if a > h[mm] {
                h[mm] = a;
            }
        }
    }
    let mut big_h = vec![0.0f64; m + 1];
    for n in (0..m).rev() {
        big_h[n] = big_h[n + 1] + h[n + 1];
    }
    let mut terms = vec![vec![Cplx::one(p); m + 1]];
    for _ in 0..kk {
        let prev = terms.last().expect("nonempty");
        let next: Vec<Cplx> = (0..=m)
            .into_par_iter()
            .map(|n| {
                let mut acc = Cplx::zero(p);
                if n < m {
                    for (i, kv) in rows[n].iter().enumerate() {
                        acc = &acc + &(kv * &prev[n + 1 + i]);
                    }
                }
                acc
            })
            .collect();
        terms.push(next);
    }
    let mut worst: f64 = 0.0;
    for (order, t) in terms.iter().enumerate() {
        for n in 0..=m {
            let mut b = 1.0;
            for i in 1..=order {
                b *= big_h[n] / i as f64;
            }
            let a = t[n].abs().to_f64();
            if a == 0.0 {
                continue;
            }
            worst = worst.max(if b > 0.0 { a / b } else { f64::INFINITY });
        }
    }
    Ok(SeriesOracle { m, h, big_h, terms, worst_ratio: worst })
}
