//! Jost solutions f_n = Q_n u_n, the Jost function Ω(z) = −f_{−1}/2 and the
//! constants of the polynomial asymptotics.
//!
//! [`JostEngine`] caches what does not depend on z (coefficient table and
//! the refinement series) so that z-grids are cheap.

use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::ansatz::{
    build_ansatz, default_order, kernel_with, majorant, Ansatz, AnsatzOptions, AnsatzVariant, CriticalSeries,
    KernelData, Majorant,
};
use crate::coeffs::{Classification, CoeffTable, CoefficientModel};
use crate::error::{Error, Result};
use crate::mp::Cplx;
use crate::recurrence::{
    backward_solution_with, delivered_tol, forward_polynomials_with, recurrence_residual, wronskian_with, SeqKind,
    SolutionSeq,
};
use crate::scaled::{PrecisionPolicy, ScaledComplex, ScaledRepr};
use crate::volterra::{choose_horizon, fixed_point_residual, solve_backward_at, VolterraSolution};

/// Kernel horizon ceiling for the automatic search.
pub const DEFAULT_HORIZON_CAP: usize = 1 << 16;
const MAJORANT_CAP: usize = 1 << 13;

#[derive(Clone, Debug, Serialize)]
pub struct JostDiagnostics {
    pub recurrence_residual: f64,
    /// max_{n ≤ M} |f_n/Q_n − u_n|
    pub u_consistency: f64,
    /// max over small n of |W[P,f](n) − Ω| relative to the Wronskian scale
    pub omega_consistency: f64,
    pub fixed_point_residual: f64,
    pub refinement_order: f64,
    pub switch_index: Option<i64>,
}

#[derive(Clone, Debug)]
pub struct JostSolution {
    pub z: Cplx,
    /// f_{−1..=M_out+1}
    pub f: SolutionSeq,
    pub u: VolterraSolution,
    pub ansatz: Ansatz,
    pub omega: ScaledComplex,
    /// Volterra horizon chosen from the majorant
    pub m: usize,
    /// horizon of the tail data the sequence was generated from
    pub m_out: usize,
    pub tail_bound: f64,
    pub diagnostics: JostDiagnostics,
}

pub struct JostEngine {
    model: CoefficientModel,
    cls: Option<Classification>,
    variant: AnsatzVariant,
    series: Option<Arc<CriticalSeries>>,
    table: Mutex<Arc<CoeffTable>>,
    pub horizon_cap: usize,
}

impl JostEngine {
    /// Engine for a critical singular or zero-diagonal model. `order` is the
    /// refinement order of the critical Ansatz (0 = unrefined).
    pub fn new(model: &CoefficientModel, order: f64) -> Result<Self> {
        let (variant, cls) = if model.is_zero_diagonal() {
            let cls = model.classify().ok();
            // Carleman: Σ 1/a_n = ∞, i.e. the effective σ is at most 1
            let carleman = cls.as_ref().map(|c| c.sigma <= 1.0).unwrap_or(false);
            let v = if carleman { AnsatzVariant::ZeroDiagCarleman } else { AnsatzVariant::ZeroDiagNonCarleman };
            (v, cls)
        } else {
            let cls = model.classify()?;
            if !cls.cell.is_critical_singular() {
                if cls.gamma.abs() == 1.0 && cls.tau == 0.0 {
                    return Err(Error::Unsupported(
                        "doubly critical model: use the dediagonalization module".into(),
                    ));
                }
                return Err(Error::Domain(format!("Jost solutions need a critical singular model, got {}", cls.cell)));
            }
            (AnsatzVariant::CriticalSingular, Some(cls))
        };
        let series = match (&cls, variant) {
            (Some(c), AnsatzVariant::CriticalSingular) if order > 0.0 => {
                Some(Arc::new(CriticalSeries::new(c, model.precision(), order)?))
            }
            _ => None,
        };
        let table = Arc::new(model.coeff_table(1024)?);
        Ok(JostEngine {
            model: model.clone(),
            cls,
            variant,
            series,
            table: Mutex::new(table),
            horizon_cap: DEFAULT_HORIZON_CAP,
        })
    }

    pub fn model(&self) -> &CoefficientModel {
        &self.model
    }

    pub fn classification(&self) -> Option<&Classification> {
        self.cls.as_ref()
    }

    pub fn precision(&self) -> u32 {
        self.model.precision()
    }

    pub fn table(&self, n: usize) -> Result<Arc<CoeffTable>> {
        let mut g = self.table.lock().expect("table lock");
        if g.n_max() < n as i64 {
            let size = (n + 1).max(2 * g.n_max() as usize);
            *g = Arc::new(self.model.coeff_table(size)?);
        }
        Ok(g.clone())
    }

    /// Ansatz at z (the zero-diagonal variants cache a_n up to `n_max`).
    pub fn ansatz(&self, z: &Cplx, n_max: usize) -> Result<Ansatz> {
        match self.variant {
            AnsatzVariant::CriticalSingular => {
                Ansatz::critical(self.cls.as_ref().expect("critical"), self.precision(), Some(z), self.series.as_deref())
            }
            v => build_ansatz(&self.model, v, Some(z), &AnsatzOptions { order: 0.0, n_max }),
        }
    }

    /// Kernel, majorant and the smallest admissible M for `tol`, growing the
    /// kernel horizon as needed.
    pub fn horizon(&self, z: &Cplx, tol: f64) -> Result<(Ansatz, KernelData, Majorant, usize)> {
        let mut n = 256usize;
        loop {
            let ansatz = self.ansatz(z, n + 3)?;
            if let Some(sw) = ansatz.switch_index() {
                n = n.max(4 * sw as usize);
            }
            let t = self.table(n + 2)?;
            let k = kernel_with(t, &ansatz, z, n)?;
            let maj = majorant(&k, n.min(MAJORANT_CAP));
            match choose_horizon(&k, &maj, tol) {
                Ok(m) => return Ok((ansatz, k, maj, m)),
                Err(Error::HorizonTooSmall { best_bound, .. }) if n < self.horizon_cap && !maj.diverging => {
                    let eta = maj.tail_exp;
                    let target = if maj.tail_coef > 0.0 && eta < -1.0 {
                        ((tol.ln_1p() * (-eta - 1.0)) / maj.tail_coef).powf(1.0 / (eta + 1.0))
                    } else {
                        f64::INFINITY
                    };
                    let next = if target.is_finite() { (target * 1.25) as usize } else { usize::MAX };
                    if next > 64 * self.horizon_cap {
                        return Err(Error::HorizonTooSmall { best_bound, best_m: n, tol });
                    }
                    n = next.max(2 * n).min(self.horizon_cap);
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Jost solution at z on f_{−1..=max(M, n_max)+1}.
    pub fn solve(&self, z: &Cplx, tol: f64, n_max: usize) -> Result<JostSolution> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        let p = self.precision();
        let z = z.with_prec(p);
        let (_, k, maj, m) = self.horizon(&z, tol)?;
        let u = solve_backward_at(&k, m, None)?;
        let tail_bound = maj.big_h(m).exp_m1();
        let m_out = m.max(n_max);
        let ansatz = self.ansatz(&z, m_out + 3)?;
        let t = self.table(m_out + 2)?;
        let tail = (ansatz.q(m_out as i64), ansatz.q(m_out as i64 + 1));
        let f = backward_solution_with(&t, &z, tail, m_out, SeqKind::Jost);
        let omega = f.at(-1).mul_real(&rug::Float::with_val(p, -0.5));

        let resid = recurrence_residual(&t, &f);
        let mut ucons: f64 = 0.0;
        for n in 0..=m {
            let r = (f.at(n as i64) / k.q(n as i64)).to_cplx().unwrap_or_else(|| Cplx::zero(p));
            ucons = ucons.max((&r - &u.u[n]).abs().to_f64());
        }
        let ocons = omega_consistency(&t, &f, &omega)?;
        let fpr = fixed_point_residual(&k, &u, 16);
        let diagnostics = JostDiagnostics {
            recurrence_residual: resid,
            u_consistency: ucons,
            omega_consistency: ocons,
            fixed_point_residual: fpr,
            refinement_order: ansatz.order(),
            switch_index: ansatz.switch_index(),
        };
        let rtol = delivered_tol(p);
        if !(resid <= rtol) {
            return Err(Error::Verification(format!("recurrence residual {resid:e} above {rtol:e}")));
        }
        if !(ocons <= rtol.sqrt()) {
            return Err(Error::Verification(format!("Ω consistency {ocons:e}")));
        }
        if !(ucons <= 10.0 * (tol + rtol.sqrt())) {
            return Err(Error::Verification(format!("f/Q deviates from u by {ucons:e}")));
        }
        Ok(JostSolution { z, f, u, ansatz, omega, m, m_out, tail_bound, diagnostics })
    }

    /// Jost solution from refined tail data at a fixed M (no Volterra pass).
    pub fn f_fast(&self, z: &Cplx, m: usize) -> Result<SolutionSeq> {
        let p = self.precision();
        let z = z.with_prec(p);
        let ansatz = self.ansatz(&z, m + 3)?;
        let t = self.table(m + 2)?;
        let tail = (ansatz.q(m as i64), ansatz.q(m as i64 + 1));
        Ok(backward_solution_with(&t, &z, tail, m, SeqKind::Jost))
    }

    /// Ω(z) through [`Self::f_fast`].
    pub fn omega_fast(&self, z: &Cplx, m: usize) -> Result<ScaledComplex> {
        let f = self.f_fast(z, m)?;
        Ok(f.at(-1).mul_real(&rug::Float::with_val(self.precision(), -0.5)))
    }

    /// Conjugate solution f̃_n(z) = conj(f_n(z̄)).
    pub fn conjugate(&self, z: &Cplx, tol: f64, n_max: usize) -> Result<JostSolution> {
        let mut s = self.solve(&z.conj(), tol, n_max)?;
        s.f = s.f.conj();
        s.f.kind = SeqKind::Conjugate;
        s.omega = s.omega.conj();
        s.z = z.with_prec(self.precision());
        s.f.z = s.z.clone();
        Ok(s)
    }
}

fn omega_consistency(t: &CoeffTable, f: &SolutionSeq, omega: &ScaledComplex) -> Result<f64> {
    let p = omega.prec();
    let pp = forward_polynomials_with(t, &f.z, 8.min(f.end() as usize), p);
    let mut worst: f64 = 0.0;
    for n in -1..(pp.end().min(f.end())) {
        let w = wronskian_with(t, &pp, f, n)?;
        let a = if n < 0 { rug::Float::with_val(p, 0.5) } else { t.a(n).clone() };
        let s1 = pp.at(n).scaled_mul(f.at(n + 1))?.mul_real(&a).abs();
        let s2 = pp.at(n + 1).scaled_mul(f.at(n))?.mul_real(&a).abs();
        let scale = if s1.cmp_abs(&s2).is_ge() { s1 } else { s2 };
        let d = (&w - omega).abs();
        worst = worst.max((&d / &scale).to_c64().0);
    }
    Ok(worst)
}

/// Jost solution with the precision policy and refinement order chosen
/// from `tol` and `n`.
pub fn jost_solution(model: &CoefficientModel, z: &Cplx, tol: f64, n: usize) -> Result<JostSolution> {
    let engine = default_engine(model, tol, n)?;
    engine.solve(z, tol, n)
}

/// Engine at the effective precision for horizon `n`.
pub fn default_engine(model: &CoefficientModel, tol: f64, n: usize) -> Result<JostEngine> {
    let cls = model.classify().ok();
    let delta = cls.as_ref().map(|c| c.delta).unwrap_or(2.0);
    let pol = PrecisionPolicy::new(model.precision(), delta, n.max(1 << 12) as u64);
    let m = model.with_precision(pol.effective_bits);
    let order = cls.as_ref().map(|c| default_order(c, tol)).unwrap_or(0.0);
    JostEngine::new(&m, order)
}

/// Conjugate sequence of a Jost solution (valid at z̄).
pub fn conjugate(sol: &JostSolution) -> SolutionSeq {
    let mut s = sol.f.conj();
    s.kind = SeqKind::Conjugate;
    s
}

/// W[f, f̃], verified constant and equal to 2iν√|τ|.
pub fn wronskian_pair_check(t: &CoeffTable, f: &JostSolution, f_tilde: &JostSolution, tau: f64) -> Result<ScaledComplex> {
    if tau >= 0.0 {
        return Err(Error::Domain("the conjugate pair is only independent for τ < 0".into()));
    }
    let w0 = wronskian_with(t, &f.f, &f_tilde.f, 0)?;
    let end = f.f.end().min(f_tilde.f.end()) - 1;
    let tol = delivered_tol(f.z.prec()).sqrt();
    for k in 1..=16 {
        let n = end * k / 16;
        let w = wronskian_with(t, &f.f, &f_tilde.f, n)?;
        let d = (&(&w - &w0).abs() / &w0.abs()).to_c64().0;
        if !(d <= tol) {
            return Err(Error::Verification(format!("W[f, f̃] not constant: {d:e} at n = {n}")));
        }
    }
    let nu = f.ansatz.nu as f64;
    let want = ScaledComplex::from_f64(f.z.prec(), 0.0, 2.0 * nu * tau.abs().sqrt());
    let dev = (&(&w0 - &want).abs() / &w0.abs()).to_c64().0;
    if end >= 10_000 && !(dev <= 1e-8) {
        return Err(Error::Verification(format!("W[f, f̃] deviates from 2iν√|τ| by {dev:e}")));
    }
    Ok(w0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsMethod {
    WronskianSystem,
    JostFunction,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticConstants {
    pub method: ConstantsMethod,
    pub kappa_plus: Option<ScaledRepr>,
    pub kappa_minus: Option<ScaledRepr>,
    /// −Ω(z)
    pub kappa: Option<ScaledRepr>,
    /// ω(z) = W[P, g]
    pub omega_coef: Option<ScaledRepr>,
    /// coefficient of ν^n n^s e^{2√(τn)} in P_n
    pub growth_coefficient: Option<ScaledRepr>,
    #[serde(skip)]
    pub values: Vec<ScaledComplex>,
}

pub enum Partner<'a> {
    Conjugate(&'a JostSolution),
    Second(&'a SolutionSeq),
}

/// κ± (τ < 0) or κ, ω (τ > 0) from Wronskians.
pub fn asymptotic_constants(
    t: &CoeffTable,
    tau: f64,
    p: &SolutionSeq,
    f: &JostSolution,
    partner: Partner<'_>,
) -> Result<AsymptoticConstants> {
    let prec = f.z.prec();
    let floor = 2f64.powf(-(prec as f64) / 4.0);
    match partner {
        Partner::Conjugate(ft) => {
            if tau >= 0.0 {
                return Err(Error::Domain("conjugate partner needs τ < 0".into()));
            }
            let n = 0;
            let wff = wronskian_with(t, &f.f, &ft.f, n)?;
            if wff.abs().to_c64().0 < floor {
                return Err(Error::Degenerate { index: n, reason: "W[f, f̃] too small".into() });
            }
            let kp = wronskian_with(t, p, &ft.f, n)?.scaled_div(&wff)?;
            let km = (-&wronskian_with(t, p, &f.f, n)?).scaled_div(&wff)?;
            Ok(AsymptoticConstants {
                method: ConstantsMethod::WronskianSystem,
                kappa_plus: Some(kp.to_repr()),
                kappa_minus: Some(km.to_repr()),
                kappa: None,
                omega_coef: None,
                growth_coefficient: None,
                values: vec![kp, km],
            })
        }
        Partner::Second(g) => {
            if tau <= 0.0 {
                return Err(Error::Domain("second-solution partner needs τ > 0".into()));
            }
            let n = g.start.max(0);
            let wfg = wronskian_with(t, &f.f, g, n)?;
            if wfg.abs().to_c64().0 < floor {
                return Err(Error::Degenerate { index: n, reason: "W[f, g] too small".into() });
            }
            let kappa = -&f.omega;
            let om = wronskian_with(t, p, g, n)?.scaled_div(&wfg)?;
            let nu = f.ansatz.nu as f64;
            let gc = f.omega.mul_real(&rug::Float::with_val(prec, -nu / (2.0 * tau.sqrt())));
            Ok(AsymptoticConstants {
                method: ConstantsMethod::JostFunction,
                kappa_plus: None,
                kappa_minus: None,
                kappa: Some(kappa.to_repr()),
                omega_coef: Some(om.to_repr()),
                growth_coefficient: Some(gc.to_repr()),
                values: vec![kappa, om, gc],
            })
        }
    }
}

/// max over the common range of |P_n − (ω f_n − Ω g_n)| / |P_n|.
pub fn reconstruction_error(p: &SolutionSeq, f: &SolutionSeq, g: &SolutionSeq, omega: &ScaledComplex, om: &ScaledComplex) -> f64 {
    let lo = g.start.max(p.start).max(f.start);
    let hi = g.end().min(p.end()).min(f.end());
    let mut worst: f64 = 0.0;
    for n in lo..=hi {
        let rec = &(om * f.at(n)) - &(omega * g.at(n));
        let d = (&rec - p.at(n)).abs();
        let s = p.at(n).abs();
        if s.is_zero() {
            continue;
        }
        worst = worst.max((&d / &s).to_c64().0);
    }
    worst
}
