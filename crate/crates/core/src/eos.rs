//! Barotropic equations of state and the pressure-equilibrium closure.
//!
//! Gas: `ζ_g(z) = A_g z^γ_g`. Liquid: `ζ_l(z) = A_l (z^γ_l − ρ_l0^γ_l) + p_0`.
//! Given partial densities `α_k = φ_k ρ_k`, the closure finds the unique
//! `ρ_g > α_g` with `ζ_g(ρ_g) = ζ_l(α_l ρ_g / (ρ_g − α_g))`.
//!
//! The adiabatic exponents are read off the units of the prefactors: `A` in
//! `m^(3γ−1) / (kg^(γ−1) s²)` gives 3.2 → γ = 1.4, 4.1 → γ = 1.7 and
//! 5 → γ = 2.

use crate::error::{Error, Result};

/// Partial densities are clamped to this floor before any closure.
pub const ALPHA_MIN: f64 = 1e-12;

/// Default relative tolerance of the closure root solve.
pub const CLOSURE_TOL: f64 = 1e-12;

const MAX_EXPANSIONS: usize = 200;
const MAX_RIDDER: usize = 100;
const MAX_POLISH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Gas,
    Liquid,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::Gas, Phase::Liquid];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Gas => "g",
            Phase::Liquid => "l",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Phase::Gas => 0,
            Phase::Liquid => 1,
        }
    }

    pub fn other(self) -> Phase {
        match self {
            Phase::Gas => Phase::Liquid,
            Phase::Liquid => Phase::Gas,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EosParams {
    pub a_g: f64,
    pub a_l: f64,
    pub gamma_g: f64,
    pub gamma_l: f64,
    pub rho_l0: f64,
    pub p0: f64,
    /// Reference densities at which the potential energies vanish.
    pub rho_g_ref: f64,
    pub rho_l_ref: f64,
}

impl EosParams {
    /// Gases of similar density.
    pub fn two_gas() -> Self {
        EosParams {
            a_g: 3.8395e4,
            a_l: 1.01325e5,
            gamma_g: 1.4,
            gamma_l: 1.7,
            rho_l0: 4.0,
            p0: 1.01325e5,
            rho_g_ref: 2.0,
            rho_l_ref: 4.0,
        }
    }

    /// Stiff liquid with a light gas.
    pub fn liquid_gas() -> Self {
        EosParams {
            a_g: 3.8395e4,
            a_l: 1.0e6,
            gamma_g: 1.4,
            gamma_l: 2.0,
            rho_l0: 1000.0,
            p0: 1.01325e5,
            rho_g_ref: 2.0,
            rho_l_ref: 1000.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("A_g", self.a_g),
            ("A_l", self.a_l),
            ("rho_l0", self.rho_l0),
            ("p0", self.p0),
            ("rho_g_ref", self.rho_g_ref),
            ("rho_l_ref", self.rho_l_ref),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, g) in [("gamma_g", self.gamma_g), ("gamma_l", self.gamma_l)] {
            if !(g > 1.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must exceed 1, got {g}")));
            }
        }
        Ok(())
    }

    fn a(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Gas => self.a_g,
            Phase::Liquid => self.a_l,
        }
    }

    pub fn gamma(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Gas => self.gamma_g,
            Phase::Liquid => self.gamma_l,
        }
    }

    /// `A_l ρ_l0^γ_l`, the liquid pressure scale.
    fn liquid_scale(&self) -> f64 {
        self.a_l * self.rho_l0.powf(self.gamma_l)
    }

    /// Constant `B` in `ζ(z) = A z^γ + B`.
    fn offset(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Gas => 0.0,
            Phase::Liquid => self.p0 - self.liquid_scale(),
        }
    }

    pub fn zeta(&self, phase: Phase, rho: f64) -> f64 {
        match phase {
            Phase::Gas => self.a_g * rho.powf(self.gamma_g),
            // written around ρ_l0 so the stiff liquid keeps its digits
            Phase::Liquid => {
                let x = (rho - self.rho_l0) / self.rho_l0;
                self.liquid_scale() * (self.gamma_l * x.ln_1p()).exp_m1() + self.p0
            }
        }
    }

    pub fn zeta_inv(&self, phase: Phase, p: f64) -> Result<f64> {
        let domain = || Error::EosDomain {
            phase: phase.name(),
            pressure: p,
        };
        if !p.is_finite() {
            return Err(domain());
        }
        match phase {
            Phase::Gas => {
                if p <= 0.0 {
                    return Err(domain());
                }
                Ok((p / self.a_g).powf(1.0 / self.gamma_g))
            }
            Phase::Liquid => {
                let y = (p - self.p0) / self.liquid_scale();
                if y <= -1.0 {
                    return Err(domain());
                }
                Ok(self.rho_l0 * (y.ln_1p() / self.gamma_l).exp())
            }
        }
    }

    /// `s_k² = ζ_k'(ρ) = A_k γ_k ρ^(γ_k − 1)`.
    pub fn sound_speed_sq(&self, phase: Phase, rho: f64) -> f64 {
        let g = self.gamma(phase);
        self.a(phase) * g * rho.powf(g - 1.0)
    }

    /// `e_k(z) = ∫_{ρ_ref}^z ζ_k(s) / s² ds`.
    pub fn potential_energy(&self, phase: Phase, rho: f64) -> f64 {
        let (a, g, b) = (self.a(phase), self.gamma(phase), self.offset(phase));
        let r = match phase {
            Phase::Gas => self.rho_g_ref,
            Phase::Liquid => self.rho_l_ref,
        };
        let log_ratio = ((rho - r) / r).ln_1p();
        let power = a / (g - 1.0) * r.powf(g - 1.0) * ((g - 1.0) * log_ratio).exp_m1();
        power + b * (rho - r) / (rho * r)
    }

    pub fn closure(&self, alpha_g: f64, alpha_l: f64) -> Result<ClosureResult> {
        closure_solve(alpha_g, alpha_l, self, CLOSURE_TOL)
    }
}

/// Equilibrium state recovered from a pair of partial densities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureResult {
    pub rho_g: f64,
    pub rho_l: f64,
    pub phi_g: f64,
    pub phi_l: f64,
    pub p: f64,
    pub c_squared: f64,
    /// `|ζ_g(ρ_g) − ζ_l(ρ_l)|` at the returned densities.
    pub residual: f64,
    pub iterations: usize,
}

impl ClosureResult {
    pub fn rho(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Gas => self.rho_g,
            Phase::Liquid => self.rho_l,
        }
    }

    pub fn phi(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Gas => self.phi_g,
            Phase::Liquid => self.phi_l,
        }
    }
}

/// `C² = s_l² s_g² / (φ_g ρ_l s_l² + φ_l ρ_g s_g²)`, the coefficient in
/// `dp = C² (ρ_l dα_g + ρ_g dα_l)`.
pub fn mixture_c_squared(c: &ClosureResult, params: &EosParams) -> f64 {
    let sg = params.sound_speed_sq(Phase::Gas, c.rho_g);
    let sl = params.sound_speed_sq(Phase::Liquid, c.rho_l);
    sl * sg / (c.phi_g * c.rho_l * sl + c.phi_l * c.rho_g * sg)
}

/// Solves the closure for `(α_g, α_l)`.
///
/// The unknown is `s = ρ_g − α_g = φ_l ρ_g`, which stays well resolved when
/// either phase vanishes. `tol` is the relative bracket width at which the
/// Ridder iteration stops; the result is then polished to the double with
/// the smallest pressure mismatch.
pub fn closure_solve(alpha_g: f64, alpha_l: f64, params: &EosParams, tol: f64) -> Result<ClosureResult> {
    if !(alpha_g.is_finite() && alpha_l.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite partial densities ({alpha_g}, {alpha_l})"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("closure tolerance must be positive".into()));
    }
    let ag = alpha_g.max(ALPHA_MIN);
    let al = alpha_l.max(ALPHA_MIN);
    let fail = |reason: String| Error::Closure {
        alpha_g,
        alpha_l,
        reason,
    };
    let g = |s: f64| {
        let rho_g = ag + s;
        params.zeta(Phase::Gas, rho_g) - params.zeta(Phase::Liquid, al * rho_g / s)
    };

    let mut lo = ag * 1e-12;
    let mut flo = g(lo);
    let mut n = 0;
    while !(flo < 0.0) {
        n += 1;
        if n > MAX_EXPANSIONS || flo.is_nan() {
            return Err(fail("lower bracket did not change sign".into()));
        }
        lo *= 0.5;
        flo = g(lo);
    }
    let mut hi = ag;
    let mut fhi = g(hi);
    n = 0;
    while !(fhi > 0.0) {
        n += 1;
        if n > MAX_EXPANSIONS {
            return Err(fail(format!("no sign change after {MAX_EXPANSIONS} doublings")));
        }
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = g(hi);
        if fhi.is_nan() {
            return Err(fail("equation of state produced NaN".into()));
        }
    }

    // Ridder's method on [lo, hi] with g(lo) < 0 < g(hi)
    let mut best = if -flo < fhi { (lo, flo) } else { (hi, fhi) };
    let mut iterations = 0;
    while iterations < MAX_RIDDER {
        if hi - lo <= tol.max(f64::EPSILON) * 0.25 * hi {
            break;
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let fmid = g(mid);
        let root = (fmid * fmid - flo * fhi).sqrt();
        if root == 0.0 || !root.is_finite() {
            best = (mid, fmid);
            break;
        }
        // flo < 0 < fhi, so sign(flo − fhi) is negative
        let x = mid - (mid - lo) * fmid / root;
        let fx = g(x);
        for cand in [(mid, fmid), (x, fx)] {
            if cand.1.abs() < best.1.abs() {
                best = cand;
            }
        }
        if fx == 0.0 {
            break;
        }
        if fmid < 0.0 && fx > 0.0 {
            lo = mid;
            flo = fmid;
            hi = x;
            fhi = fx;
        } else if fmid > 0.0 && fx < 0.0 {
            lo = x;
            flo = fx;
            hi = mid;
            fhi = fmid;
        } else if fx < 0.0 {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if lo >= hi {
            break;
        }
    }
    if iterations == MAX_RIDDER && hi - lo > 1e-8 * hi {
        return Err(fail(format!("Ridder stalled with bracket [{lo}, {hi}]")));
    }

    // walk to the neighbouring double with the smallest mismatch
    let (mut s, mut fs) = best;
    for _ in 0..MAX_POLISH {
        let next = if fs > 0.0 { next_down(s) } else { next_up(s) };
        let fnext = g(next);
        if fnext.abs() < fs.abs() && next > 0.0 {
            s = next;
            fs = fnext;
        } else {
            break;
        }
    }

    let rho_g = ag + s;
    let rho_l = al * rho_g / s;
    let phi_g = ag / rho_g;
    let phi_l = s / rho_g;
    let p = params.zeta(Phase::Gas, rho_g);
    let mut out = ClosureResult {
        rho_g,
        rho_l,
        phi_g,
        phi_l,
        p,
        c_squared: 0.0,
        residual: (p - params.zeta(Phase::Liquid, rho_l)).abs(),
        iterations,
    };
    out.c_squared = mixture_c_squared(&out, params);
    Ok(out)
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}
