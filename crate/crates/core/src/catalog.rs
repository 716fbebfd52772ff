//! Registered continuous minimal functions that can feed the pipeline.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::PwlExpr;
use crate::gauge::{check_b, GaugeSimplex};
use crate::geometry::on_grid;
use crate::grid::GridFunction;
use crate::rational::{lcm_of_denominators, RatVec, Rational};
use crate::verify::{minimality_certificate, Certificate, CheckOptions, Property, Verdict, Witness};

/// Random probes used at registration.
pub const REGISTRATION_PROBES: usize = 10_000;

/// A minimal function with the data the pipeline needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalFunctionSpec {
    pub name: String,
    pub n: usize,
    pub b: RatVec,
    pub expr: Arc<PwlExpr>,
    pub lipschitz: Option<Rational>,
    /// Grid step on which the function is exactly piecewise linear.
    pub native_delta: Option<Rational>,
}

impl MinimalFunctionSpec {
    pub fn eval(&self, x: &RatVec) -> Rational {
        self.expr.eval(x)
    }

    /// Resolution used for the registration certificate.
    pub fn registration_resolution(&self) -> Rational {
        self.native_delta.clone().unwrap_or_else(|| Rational::new(1, 16))
    }

    /// Minimality certificate at the registration resolution plus random probes.
    pub fn registration_certificate(&self, seed: u64) -> Result<Certificate> {
        let opts = CheckOptions {
            resolution: Some(self.registration_resolution()),
            probes: REGISTRATION_PROBES,
            seed,
            ..Default::default()
        };
        minimality_certificate(&self.expr, &self.b, &opts)
    }

    /// Validate `b`, require continuity data, and run the registration certificate.
    pub fn register(self) -> Result<Self> {
        check_b(&self.b)?;
        if self.b.dim() != self.n || self.expr.dim() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: self.expr.dim(),
            });
        }
        if self.lipschitz.is_none() && self.native_delta.is_none() {
            return Err(Error::Precondition(format!(
                "{}: a Lipschitz constant or a native grid is required",
                self.name
            )));
        }
        let cert = self.registration_certificate(0)?;
        if cert.verdict != Verdict::Pass {
            return Err(Error::CertificateFailed {
                message: format!("{} is not minimal: {}", self.name, describe_failure(&cert)),
                certificate: Box::new(cert),
            });
        }
        Ok(self)
    }

    /// Lipschitz constant, computed from the native grid when not given.
    pub fn lipschitz_or_bound(&self) -> Rational {
        self.lipschitz.clone().unwrap_or_else(|| self.expr.lipschitz_bound())
    }
}

/// Name the first violated condition and its witness.
pub fn describe_failure(cert: &Certificate) -> String {
    let failing = if cert.components.is_empty() {
        cert
    } else {
        cert.components
            .iter()
            .find(|c| c.verdict != Verdict::Pass)
            .unwrap_or(cert)
    };
    let cond = match failing.property {
        Property::C1 => "condition (C1) π(ℤⁿ) = 0, π ≥ 0",
        Property::C2 => "condition (C2) π(x) + π(b − x) = 1",
        Property::Subadditive => "condition (C3) subadditivity",
        _ => "certificate",
    };
    let w = match &failing.witness {
        Some(Witness::Point { x, value }) => format!("π({x}) = {value}"),
        Some(Witness::Symmetry { x, reflected, sum, .. }) => {
            format!("π({x}) + π({reflected}) = {sum}")
        }
        Some(Witness::Pair { x, y, delta, .. }) => format!("Δπ({x}, {y}) = {delta}"),
        _ => "no witness".into(),
    };
    format!("{cond} violated: {w}")
}

/// Smallest `p` with `b ∈ U_{1/p}`.
pub fn b_denominator(b: &RatVec) -> u64 {
    use num_traits::ToPrimitive;
    lcm_of_denominators(b.iter()).to_u64().unwrap_or(u64::MAX)
}

/// The Gomory mixed-integer function with right-hand side `b ∈ (0,1)`.
pub fn gmic(b: &Rational) -> Result<MinimalFunctionSpec> {
    if !b.is_positive() || b >= &Rational::one() {
        return Err(Error::InvalidB(format!("gmic requires 0 < b < 1 (b ∈ ℚⁿ∖ℤⁿ reduced modulo ℤⁿ), got {b}")));
    }
    let bv = RatVec::new(vec![b.clone()]);
    let p = b_denominator(&bv);
    MinimalFunctionSpec {
        name: format!("gmic({b})"),
        n: 1,
        lipschitz: Some(b.recip().max((Rational::one() - b).recip())),
        native_delta: Some(Rational::new(1, p as i64)),
        expr: Arc::new(PwlExpr::Gmic { b: b.clone() }),
        b: bv,
    }
    .register()
}

/// `π_aux(x) = δ3·min_z γ(x − z)` for the gauge simplex of `b` and `δ3`.
pub fn nd_gauge_minimal(b: &RatVec, delta3: &Rational) -> Result<MinimalFunctionSpec> {
    let gauge = Arc::new(GaugeSimplex::new(b, delta3)?);
    let expr = Arc::new(PwlExpr::PiAux { gauge });
    MinimalFunctionSpec {
        name: format!("gauge({b}; {delta3})"),
        n: b.dim(),
        b: b.clone(),
        lipschitz: Some(expr.lipschitz_bound()),
        native_delta: None,
        expr,
    }
    .register()
}

/// `t·f + (1−t)·g`.
pub fn convex_combination(
    f: &MinimalFunctionSpec,
    g: &MinimalFunctionSpec,
    t: &Rational,
) -> Result<MinimalFunctionSpec> {
    if f.n != g.n {
        return Err(Error::Dimension {
            expected: f.n,
            got: g.n,
        });
    }
    if f.b != g.b {
        return Err(Error::Precondition(format!(
            "right-hand sides differ: {} vs {}",
            f.b, g.b
        )));
    }
    if t.is_negative() || t > &Rational::one() {
        return Err(Error::Precondition(format!("t = {t} must lie in [0,1]")));
    }
    let s = Rational::one() - t;
    let lipschitz = match (&f.lipschitz, &g.lipschitz) {
        (Some(a), Some(b)) => Some(t * a + &s * b),
        _ => None,
    };
    let native_delta = match (&f.native_delta, &g.native_delta) {
        (Some(a), Some(b)) => {
            let p = num_integer::lcm(a.denom_u64().unwrap_or(1), b.denom_u64().unwrap_or(1));
            Some(Rational::new(1, p as i64))
        }
        _ => None,
    };
    MinimalFunctionSpec {
        name: format!("{t}·{} + {s}·{}", f.name, g.name),
        n: f.n,
        b: f.b.clone(),
        expr: Arc::new(PwlExpr::affine(t.clone(), f.expr.clone(), s, g.expr.clone(), Rational::zero())),
        lipschitz: lipschitz.or_else(|| Some(t * f.lipschitz_or_bound() + (Rational::one() - t) * g.lipschitz_or_bound())),
        native_delta,
    }
    .register()
}

/// Wrap a grid function as a spec, after registration.
pub fn from_grid(name: &str, grid: GridFunction) -> Result<MinimalFunctionSpec> {
    let b = grid.b().clone();
    if !on_grid(&b, grid.grid().p) {
        return Err(Error::InvalidB(format!(
            "b = {b} is not a vertex of the grid with step {}",
            grid.delta()
        )));
    }
    MinimalFunctionSpec {
        name: name.to_string(),
        n: grid.n(),
        b,
        lipschitz: Some(grid.lipschitz_constant()),
        native_delta: Some(grid.delta()),
        expr: Arc::new(PwlExpr::grid(grid)),
    }
    .register()
}

pub fn from_grid_document(name: &str, doc: &str) -> Result<MinimalFunctionSpec> {
    let grid: GridFunction = serde_json::from_str(doc).map_err(|e| Error::Parse(e.to_string()))?;
    from_grid(name, grid)
}

pub fn from_grid_file(path: &Path) -> Result<MinimalFunctionSpec> {
    let doc = std::fs::read_to_string(path)?;
    from_grid_document(&path.display().to_string(), &doc)
}

/// Catalog entry: a name pattern with a short description.
pub struct CatalogEntry {
    pub pattern: &'static str,
    pub description: &'static str,
    pub example: &'static str,
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            pattern: "gmic:<b>",
            description: "one-dimensional Gomory mixed-integer function, 0 < b < 1",
            example: "gmic:3/4",
        },
        CatalogEntry {
            pattern: "gauge:<b1,...,bn>:<delta3>",
            description: "n-dimensional (n+1)-slope function δ3·min_z γ(x − z) built from the gauge simplex",
            example: "gauge:3/4,1/2:1/4",
        },
        CatalogEntry {
            pattern: "<path>.json",
            description: "grid function document {n, delta, b, values}",
            example: "gmic.json",
        },
    ]
}

/// Resolve a catalog name or a grid file path.
pub fn resolve(name: &str) -> Result<MinimalFunctionSpec> {
    if let Some(rest) = name.strip_prefix("gmic:") {
        return gmic(&rest.trim().parse()?);
    }
    if let Some(rest) = name.strip_prefix("gauge:") {
        let (b, d) = rest
            .rsplit_once(':')
            .ok_or_else(|| Error::Parse(format!("expected gauge:<b>:<delta3>, got {name}")))?;
        return nd_gauge_minimal(&b.parse()?, &d.trim().parse()?);
    }
    let path = Path::new(name);
    if path.exists() {
        return from_grid_file(path);
    }
    Err(Error::Parse(format!("unknown spec {name}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn gmic_examples() {
        let f = gmic(&r("3/4")).unwrap();
        assert_eq!(f.eval(&"3/8".parse().unwrap()), r("1/2"));
        assert_eq!(f.eval(&"3/4".parse().unwrap()), r("1"));
        assert_eq!(f.lipschitz, Some(r("4")));
        assert_eq!(f.native_delta, Some(r("1/4")));
        assert!(gmic(&r("0")).is_err());
        assert!(gmic(&r("1")).is_err());
    }

    #[test]
    fn resolve_names() {
        assert_eq!(resolve("gmic:1/3").unwrap().n, 1);
        assert_eq!(resolve("gauge:3/4,1/2:1/4").unwrap().n, 2);
        assert!(resolve("nope").is_err());
    }
}
