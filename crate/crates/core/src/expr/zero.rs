//! Three-valued zero testing: exact proof by normalization where the normal
//! form can see it, randomized sampling as the fallback. Verdicts always say
//! which of the two happened.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::Expr;
use crate::error::Error;

/// Default deterministic seed for all sampling.
pub const DEFAULT_SEED: u64 = 0xAC0_FFEE;

/// Configuration for randomized zero testing.
#[derive(Clone, Debug)]
pub struct SamplingConfig {
    /// Number of valid sample points requested.
    pub samples: usize,
    /// Sampling box `[lo, hi]` applied to every symbol.
    pub box_lo: f64,
    pub box_hi: f64,
    /// Residual tolerance for the numeric verdict.
    pub tol: f64,
    /// Minimum number of valid samples before the verdict is trusted.
    pub min_valid: usize,
    /// RNG seed; fixed seed makes every report reproducible.
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            samples: 100,
            box_lo: -1.0,
            box_hi: 1.0,
            tol: 1e-9,
            min_valid: 50,
            seed: DEFAULT_SEED,
        }
    }
}

/// A concrete refutation: an assignment and the value found there.
#[derive(Clone, Debug)]
pub struct Witness {
    pub point: Vec<(String, f64)>,
    pub value: f64,
}

/// Outcome of a zero test.
#[derive(Clone, Debug)]
pub enum ZeroVerdict {
    /// The normal form is the zero polynomial.
    ProvedZero,
    /// All sampled values stayed within tolerance.
    NumericallyZero { max_residual: f64 },
    /// A sample exceeded tolerance.
    NonZero(Witness),
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero(_))
    }

    pub fn residual(&self) -> f64 {
        match self {
            ZeroVerdict::ProvedZero => 0.0,
            ZeroVerdict::NumericallyZero { max_residual } => *max_residual,
            ZeroVerdict::NonZero(w) => w.value.abs(),
        }
    }

    /// Aggregate componentwise verdicts: any refutation wins, otherwise the
    /// weakest proof quality is reported.
    pub fn combine<I: IntoIterator<Item = ZeroVerdict>>(verdicts: I) -> ZeroVerdict {
        let mut acc = ZeroVerdict::ProvedZero;
        for v in verdicts {
            match (&acc, &v) {
                (_, ZeroVerdict::NonZero(_)) => return v,
                (ZeroVerdict::ProvedZero, ZeroVerdict::NumericallyZero { .. }) => acc = v,
                (
                    ZeroVerdict::NumericallyZero { max_residual: a },
                    ZeroVerdict::NumericallyZero { max_residual: b },
                ) => {
                    if b > a {
                        acc = v;
                    }
                }
                _ => {}
            }
        }
        acc
    }
}

impl std::fmt::Display for ZeroVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ZeroVerdict::ProvedZero => write!(f, "proved zero"),
            ZeroVerdict::NumericallyZero { max_residual } => {
                write!(f, "numerically zero (max residual {max_residual:.3e})")
            }
            ZeroVerdict::NonZero(w) => {
                write!(f, "NONZERO (value {:.6e} at ", w.value)?;
                for (i, (name, v)) in w.point.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{name}={v:.4}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Deterministic stream of sample points over the symbols of an expression
/// set, with rejection of points where any guard expression is undefined or
/// smaller in magnitude than its floor.
pub struct Sampler<'a> {
    rng: ChaCha8Rng,
    cfg: &'a SamplingConfig,
    symbols: Vec<super::context::SymbolId>,
    n_symbols_total: usize,
    guards: &'a [(Expr, f64)],
}

impl<'a> Sampler<'a> {
    pub fn new(
        exprs: &[&Expr],
        cfg: &'a SamplingConfig,
        guards: &'a [(Expr, f64)],
    ) -> Result<Sampler<'a>, Error> {
        let mut set = std::collections::BTreeSet::new();
        let mut total = 0usize;
        for e in exprs {
            set.extend(e.symbols()?);
            total = total.max(e.context().n_symbols());
        }
        for (g, _) in guards {
            set.extend(g.symbols()?);
            total = total.max(g.context().n_symbols());
        }
        Ok(Sampler {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            symbols: set.into_iter().collect(),
            n_symbols_total: total,
            guards,
        })
    }

    /// Draw the next valid point, or `None` when the attempt budget runs out.
    pub fn next_point(&mut self) -> Option<Vec<f64>> {
        'attempt: for _ in 0..64 {
            let mut values = vec![f64::NAN; self.n_symbols_total];
            for id in &self.symbols {
                values[id.index()] = self.rng.gen_range(self.cfg.box_lo..=self.cfg.box_hi);
            }
            for (guard, floor) in self.guards {
                match guard.eval(&values) {
                    Ok(v) if v.is_finite() && v.abs() >= *floor => {}
                    _ => continue 'attempt,
                }
            }
            return Some(values);
        }
        None
    }
}

/// Sampling-backed zero test. Returns an error only when too few valid
/// samples could be drawn for the verdict to mean anything.
pub fn is_zero(e: &Expr, cfg: &SamplingConfig) -> Result<ZeroVerdict, Error> {
    is_zero_guarded(e, cfg, &[])
}

/// Like [`is_zero`], with guard expressions that reject sample points (used
/// for frame-degeneracy floors).
pub fn is_zero_guarded(
    e: &Expr,
    cfg: &SamplingConfig,
    guards: &[(Expr, f64)],
) -> Result<ZeroVerdict, Error> {
    if e.is_provably_zero()? {
        return Ok(ZeroVerdict::ProvedZero);
    }
    let ctx = e.context().clone();
    let symbols = e.symbols()?;
    if symbols.is_empty() && guards.is_empty() {
        // constant expression: a single evaluation settles it
        let v = e.eval(&vec![f64::NAN; ctx.n_symbols()])?;
        if !v.is_finite() {
            return Err(Error::Domain("constant evaluates to non-finite value".into()));
        }
        if v.abs() <= cfg.tol {
            return Ok(ZeroVerdict::NumericallyZero { max_residual: v.abs() });
        }
        return Ok(ZeroVerdict::NonZero(Witness {
            point: Vec::new(),
            value: v,
        }));
    }

    let mut sampler = Sampler::new(&[e], cfg, guards)?;
    let mut valid = 0usize;
    let mut max_residual = 0.0f64;
    while valid < cfg.samples {
        let Some(values) = sampler.next_point() else {
            break;
        };
        let v = match e.eval(&values) {
            Ok(v) if v.is_finite() => v,
            _ => continue,
        };
        valid += 1;
        if v.abs() > cfg.tol {
            let point = symbols
                .iter()
                .map(|id| (ctx.name(*id).to_string(), values[id.index()]))
                .collect();
            return Ok(ZeroVerdict::NonZero(Witness { point, value: v }));
        }
        max_residual = max_residual.max(v.abs());
    }
    if valid < cfg.min_valid {
        return Err(Error::InsufficientSamples {
            valid,
            required: cfg.min_valid,
        });
    }
    Ok(ZeroVerdict::NumericallyZero { max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::Context;
    use crate::expr::parser::parse;

    #[test]
    fn proved_zero_by_normalization() {
        let c = Context::new(&["x1"], &[]).unwrap();
        let e = parse("x1 - x1", &c).unwrap();
        assert!(matches!(
            is_zero(&e, &SamplingConfig::default()).unwrap(),
            ZeroVerdict::ProvedZero
        ));
    }

    #[test]
    fn hyperbolic_identity_is_numeric_not_proved() {
        let c = Context::new(&[], &["lambda"]).unwrap();
        let e = parse("cosh(lambda)^2 - sinh(lambda)^2 - 1", &c).unwrap();
        match is_zero(&e, &SamplingConfig::default()).unwrap() {
            ZeroVerdict::NumericallyZero { max_residual } => assert!(max_residual <= 1e-12),
            other => panic!("expected numeric zero, got {other:?}"),
        }
    }

    #[test]
    fn nonzero_symbol_has_witness() {
        let c = Context::new(&["x1"], &[]).unwrap();
        let e = parse("x1", &c).unwrap();
        match is_zero(&e, &SamplingConfig::default()).unwrap() {
            ZeroVerdict::NonZero(w) => {
                assert_eq!(w.point.len(), 1);
                assert_eq!(w.point[0].0, "x1");
                assert!((w.point[0].1 - w.value).abs() < 1e-15);
            }
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn domain_rejection_keeps_verdict_meaningful() {
        // ln(x1) is undefined on half the box; sqrt keeps rejecting too
        let c = Context::new(&["x1"], &[]).unwrap();
        let e = parse("ln(x1) - ln(x1)", &c).unwrap();
        // normal form cancels exactly, so this is proved without sampling
        assert!(matches!(
            is_zero(&e, &SamplingConfig::default()).unwrap(),
            ZeroVerdict::ProvedZero
        ));
        let f = parse("sqrt(x1)*sqrt(x1) - x1", &c).unwrap();
        assert!(is_zero(&f, &SamplingConfig::default()).unwrap().is_zero());
    }

    #[test]
    fn insufficient_samples_is_an_error() {
        // every point is rejected: guard can never clear its floor
        let c = Context::new(&["x1"], &[]).unwrap();
        let e = parse("x1", &c).unwrap();
        let guard = parse("0*x1", &c).unwrap();
        let res = is_zero_guarded(&e, &SamplingConfig::default(), &[(guard, 1e-6)]);
        assert!(matches!(res, Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let c = Context::new(&["x1", "x2"], &[]).unwrap();
        let e = parse("x1*x2 + 0.3", &c).unwrap();
        let cfg = SamplingConfig::default();
        let (w1, w2) = match (is_zero(&e, &cfg).unwrap(), is_zero(&e, &cfg).unwrap()) {
            (ZeroVerdict::NonZero(a), ZeroVerdict::NonZero(b)) => (a, b),
            other => panic!("expected refutations, got {other:?}"),
        };
        assert_eq!(w1.value, w2.value);
        assert_eq!(w1.point, w2.point);
    }
}
