//! Step 2 (and the end of step 5): nodal recovery of `(φ_k, ρ_k, p)` from
//! the partial densities.

use crate::eos::{mixture_c_squared, EosParams};
use crate::error::{Error, Result};

/// Nodal closure fields, indexed by phase.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalClosure {
    pub phi: [Vec<f64>; 2],
    pub rho: [Vec<f64>; 2],
    pub p: Vec<f64>,
    /// Mixture coefficient `C²`.
    pub c2: Vec<f64>,
    /// Largest pressure mismatch `|ζ_g(ρ_g) − ζ_l(ρ_l)|` over the nodes.
    pub max_residual: f64,
}

pub fn nodal_closure(eos: &EosParams, alpha_g: &[f64], alpha_l: &[f64]) -> Result<NodalClosure> {
    if alpha_g.len() != alpha_l.len() {
        return Err(Error::InvalidArgument("alpha fields differ in length".into()));
    }
    let n = alpha_g.len();
    let mut out = NodalClosure {
        phi: [Vec::with_capacity(n), Vec::with_capacity(n)],
        rho: [Vec::with_capacity(n), Vec::with_capacity(n)],
        p: Vec::with_capacity(n),
        c2: Vec::with_capacity(n),
        max_residual: 0.0,
    };
    for (i, (&ag, &al)) in alpha_g.iter().zip(alpha_l).enumerate() {
        let c = eos.closure(ag, al).map_err(|e| Error::ClosureAtNode {
            node: i,
            source: Box::new(e),
        })?;
        out.phi[0].push(c.phi_g);
        out.phi[1].push(c.phi_l);
        out.rho[0].push(c.rho_g);
        out.rho[1].push(c.rho_l);
        out.p.push(c.p);
        out.c2.push(mixture_c_squared(&c, eos));
        out.max_residual = out.max_residual.max(c.residual);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_pointwise_closure() {
        let eos = EosParams::two_gas();
        let ag = [1.0, 0.5, 0.01];
        let al = [2.0, 3.0, 3.9];
        let c = nodal_closure(&eos, &ag, &al).unwrap();
        for i in 0..3 {
            let r = eos.closure(ag[i], al[i]).unwrap();
            assert_eq!(c.p[i], r.p);
            assert_eq!(c.rho[0][i], r.rho_g);
            assert_eq!(c.phi[1][i], r.phi_l);
            assert!(c.c2[i] > 0.0);
        }
        assert!(c.max_residual <= 1e-9 * c.p.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn reports_failing_node() {
        let eos = EosParams::two_gas();
        let err = nodal_closure(&eos, &[1.0, f64::NAN], &[2.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::ClosureAtNode { node: 1, .. }));
    }
}
