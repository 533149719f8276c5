//! A single chart with a global frame: brackets, coframe, frame/coordinate
//! conversion, directional derivatives, and exterior derivatives of 1- and
//! 2-forms. Everything is immutable after load.

use std::sync::Arc;

use crate::check::{Check, CheckSet};
use crate::error::Error;
use crate::expr::{is_zero_guarded, Context, Expr, SamplingConfig, ZeroVerdict};
use crate::matrix::ExprMatrix;

/// Which basis the components of a [`VecField`] refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Frame,
    Coordinate,
}

/// A vector field given by components in the frame or coordinate basis.
#[derive(Clone, Debug)]
pub struct VecField {
    pub components: Vec<Expr>,
    pub basis: Basis,
}

impl VecField {
    pub fn frame(components: Vec<Expr>) -> VecField {
        VecField {
            components,
            basis: Basis::Frame,
        }
    }

    pub fn coordinate(components: Vec<Expr>) -> VecField {
        VecField {
            components,
            basis: Basis::Coordinate,
        }
    }
}

/// A 1-form in coframe components: `α = Σ components[i] θ^i`.
#[derive(Clone, Debug)]
pub struct OneForm {
    pub components: Vec<Expr>,
}

/// A 2-form stored as the full antisymmetric matrix `β(e_i, e_j)`.
#[derive(Clone, Debug)]
pub struct TwoForm {
    pub components: ExprMatrix,
}

impl TwoForm {
    /// Build from an action on index pairs; the lower triangle is mirrored
    /// with a sign so the matrix is antisymmetric by construction.
    pub fn from_action(
        ctx: &Arc<Context>,
        dim: usize,
        f: impl Fn(usize, usize) -> Expr,
    ) -> TwoForm {
        let mut m = ExprMatrix::zeros(ctx, dim, dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = f(i, j);
                m.set(i, j, v.clone());
                m.set(j, i, -&v);
            }
        }
        TwoForm { components: m }
    }

    /// Validate exact antisymmetry of a full matrix and wrap it.
    pub fn from_matrix(m: ExprMatrix) -> Result<TwoForm, Error> {
        let n = m.n_rows();
        for i in 0..n {
            if !m.get(i, i).is_provably_zero()? {
                return Err(Error::Input(format!(
                    "2-form has nonzero diagonal entry at ({i},{i})"
                )));
            }
            for j in (i + 1)..n {
                if !m.get(i, j).equivalent(&-m.get(j, i))? {
                    return Err(Error::Input(format!(
                        "2-form matrix is not antisymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(TwoForm { components: m })
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        self.components.get(i, j)
    }
}

/// A 3-form stored by strictly increasing index triples.
#[derive(Clone, Debug)]
pub struct ThreeForm {
    pub components: Vec<((usize, usize, usize), Expr)>,
}

/// Structure functions `c^k_{ij}` with `[e_i, e_j] = Σ_k c^k_{ij} e_k`,
/// indexed `c[i][j][k]` and antisymmetric in `(i, j)` exactly.
#[derive(Clone, Debug)]
pub struct StructureFunctions {
    pub c: Vec<Vec<Vec<Expr>>>,
}

/// A chart with a global frame of vector fields. Column `j` of `frame` holds
/// the coordinate-basis components of `e_j`.
#[derive(Debug)]
pub struct FramedPatch {
    ctx: Arc<Context>,
    dim: usize,
    frame: ExprMatrix,
    coframe: ExprMatrix,
    frame_det: Expr,
    structure: StructureFunctions,
}

/// Floor below which `|det F|` rejects a sample point.
pub const FRAME_DET_FLOOR: f64 = 1e-6;

impl FramedPatch {
    /// Load a patch: checks the dimension is even and matches the coordinate
    /// count, proves the frame nondegenerate (the determinant must have a
    /// `NonZero` verdict), and precomputes the coframe and structure
    /// functions.
    pub fn new(
        ctx: Arc<Context>,
        frame: ExprMatrix,
        cfg: &SamplingConfig,
    ) -> Result<Arc<FramedPatch>, Error> {
        let dim = ctx.n_coordinates();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Input(format!(
                "dimension {dim} is not a positive even number"
            )));
        }
        if frame.n_rows() != dim || frame.n_cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: frame.n_rows(),
            });
        }
        let frame_det = frame.det()?;
        match crate::expr::is_zero(&frame_det, cfg)? {
            ZeroVerdict::NonZero(_) => {}
            v => {
                return Err(Error::DegenerateFrame(format!(
                    "det F must be nonzero, got verdict: {v}"
                )))
            }
        }
        let coframe = frame.inverse()?;
        let mut patch = FramedPatch {
            ctx,
            dim,
            frame,
            coframe,
            frame_det,
            structure: StructureFunctions { c: Vec::new() },
        };
        patch.structure = patch.compute_structure_functions()?;
        Ok(Arc::new(patch))
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self) -> &ExprMatrix {
        &self.frame
    }

    /// Rows are the coframe 1-forms `θ^i` in the coordinate differentials.
    pub fn coframe(&self) -> &ExprMatrix {
        &self.coframe
    }

    pub fn frame_det(&self) -> &Expr {
        &self.frame_det
    }

    pub fn structure_functions(&self) -> &StructureFunctions {
        &self.structure
    }

    /// The `j`-th frame field as a [`VecField`] with frame components.
    pub fn frame_field(&self, j: usize) -> VecField {
        let ctx = &self.ctx;
        VecField::frame(
            (0..self.dim)
                .map(|i| {
                    if i == j {
                        Expr::one(ctx)
                    } else {
                        Expr::zero(ctx)
                    }
                })
                .collect(),
        )
    }

    pub fn to_coordinates(&self, v: &VecField) -> VecField {
        match v.basis {
            Basis::Coordinate => v.clone(),
            Basis::Frame => VecField::coordinate(self.frame.mul_vec(&v.components)),
        }
    }

    pub fn to_frame(&self, v: &VecField) -> VecField {
        match v.basis {
            Basis::Frame => v.clone(),
            Basis::Coordinate => VecField::frame(self.coframe.mul_vec(&v.components)),
        }
    }

    /// Directional derivative `X f` of a scalar.
    pub fn apply(&self, x: &VecField, f: &Expr) -> Result<Expr, Error> {
        let xc = self.to_coordinates(x);
        let mut acc = Expr::zero(&self.ctx);
        for (i, comp) in xc.components.iter().enumerate() {
            let df = f.differentiate_id(self.ctx.coordinate(i))?;
            acc = &acc + &(comp * &df);
        }
        Ok(acc)
    }

    /// Lie bracket via the coordinate formula
    /// `[X,Y]^k = Σ_i (X^i ∂_i Y^k − Y^i ∂_i X^k)`, returned in frame
    /// components.
    pub fn bracket(&self, x: &VecField, y: &VecField) -> Result<VecField, Error> {
        let xc = self.to_coordinates(x);
        let yc = self.to_coordinates(y);
        let mut comps = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let mut acc = Expr::zero(&self.ctx);
            for i in 0..self.dim {
                let id = self.ctx.coordinate(i);
                let dyk = yc.components[k].differentiate_id(id)?;
                let dxk = xc.components[k].differentiate_id(id)?;
                acc = &acc + &(&(&xc.components[i] * &dyk) - &(&yc.components[i] * &dxk));
            }
            comps.push(acc);
        }
        Ok(self.to_frame(&VecField::coordinate(comps)))
    }

    fn compute_structure_functions(&self) -> Result<StructureFunctions, Error> {
        let n = self.dim;
        let zero = Expr::zero(&self.ctx);
        let mut c = vec![vec![vec![zero; n]; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let br = self.bracket(&self.frame_field(i), &self.frame_field(j))?;
                for k in 0..n {
                    let v = br.components[k].normalize()?;
                    c[i][j][k] = v.clone();
                    c[j][i][k] = -&v;
                }
            }
        }
        Ok(StructureFunctions { c })
    }

    /// `dα(e_i, e_j) = e_i(α(e_j)) − e_j(α(e_i)) − α([e_i, e_j])`.
    pub fn d_one_form(&self, alpha: &OneForm) -> Result<TwoForm, Error> {
        if alpha.components.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: alpha.components.len(),
            });
        }
        let n = self.dim;
        let mut m = ExprMatrix::zeros(&self.ctx, n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let ei_aj = self.apply(&self.frame_field(i), &alpha.components[j])?;
                let ej_ai = self.apply(&self.frame_field(j), &alpha.components[i])?;
                let mut corr = Expr::zero(&self.ctx);
                for k in 0..n {
                    corr = &corr + &(&self.structure.c[i][j][k] * &alpha.components[k]);
                }
                let v = &(&ei_aj - &ej_ai) - &corr;
                m.set(i, j, v.clone());
                m.set(j, i, -&v);
            }
        }
        Ok(TwoForm { components: m })
    }

    /// The three-term frame formula with bracket corrections:
    /// `dβ(e_i,e_j,e_k) = Σ_cyc e_i(β(e_j,e_k)) − Σ_cyc β([e_i,e_j], e_k)`.
    pub fn d_two_form(&self, beta: &TwoForm) -> Result<ThreeForm, Error> {
        let n = self.dim;
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let t1 = self.apply(&self.frame_field(i), beta.get(j, k))?;
                    let t2 = self.apply(&self.frame_field(j), beta.get(i, k))?;
                    let t3 = self.apply(&self.frame_field(k), beta.get(i, j))?;
                    let mut corr = Expr::zero(&self.ctx);
                    for m in 0..n {
                        corr = &corr + &(&self.structure.c[i][j][m] * beta.get(m, k));
                        corr = &corr - &(&self.structure.c[i][k][m] * beta.get(m, j));
                        corr = &corr + &(&self.structure.c[j][k][m] * beta.get(m, i));
                    }
                    let v = &(&(&t1 - &t2) + &t3) - &corr;
                    out.push(((i, j, k), v));
                }
            }
        }
        Ok(ThreeForm { components: out })
    }

    /// Zero verdict with the frame-degeneracy guard `|det F| ≥ 1e-6`.
    pub fn zero_verdict(&self, e: &Expr, cfg: &SamplingConfig) -> Result<ZeroVerdict, Error> {
        is_zero_guarded(e, cfg, &[(self.frame_det.clone(), FRAME_DET_FLOOR)])
    }

    /// Combined verdict over a list of expressions.
    pub fn zero_verdict_all(
        &self,
        exprs: &[Expr],
        cfg: &SamplingConfig,
    ) -> Result<ZeroVerdict, Error> {
        let mut vs = Vec::with_capacity(exprs.len());
        for e in exprs {
            vs.push(self.zero_verdict(e, cfg)?);
        }
        Ok(ZeroVerdict::combine(vs))
    }

    /// Jacobi identity `Σ_cyc [e_i, [e_j, e_k]] = 0` for all frame triples.
    pub fn jacobi_checks(&self, cfg: &SamplingConfig) -> CheckSet {
        let mut set = CheckSet::new();
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let verdict: Result<ZeroVerdict, Error> = (|| {
                        let mut comps: Option<Vec<Expr>> = None;
                        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                            let inner =
                                self.bracket(&self.frame_field(b), &self.frame_field(c))?;
                            let outer = self.bracket(&self.frame_field(a), &inner)?;
                            comps = Some(match comps {
                                None => outer.components,
                                Some(prev) => prev
                                    .iter()
                                    .zip(&outer.components)
                                    .map(|(p, q)| p + q)
                                    .collect(),
                            });
                        }
                        self.zero_verdict_all(&comps.unwrap(), cfg)
                    })();
                    set.push(Check::from_result(
                        format!("jacobi(e{},e{},e{})", i + 1, j + 1, k + 1),
                        verdict,
                    ));
                }
            }
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    pub(crate) fn heisenberg_patch() -> Arc<FramedPatch> {
        let ctx = Context::new(&["x1", "x2", "x3", "x4"], &["lambda"]).unwrap();
        let rows: Vec<Vec<Expr>> = [
            ["1", "0", "0", "0"],
            ["0", "x1", "1", "0"],
            ["0", "1", "0", "0"],
            ["0", "0", "0", "1"],
        ]
        .iter()
        .map(|r| r.iter().map(|s| parse(s, &ctx).unwrap()).collect())
        .collect();
        // file rows list e_j components; the frame matrix wants them as columns
        let frame = ExprMatrix::from_rows(rows).unwrap().transpose();
        FramedPatch::new(ctx, frame, &SamplingConfig::default()).unwrap()
    }

    #[test]
    fn heisenberg_coframe_rows() {
        let p = heisenberg_patch();
        let ctx = p.context().clone();
        // θ^2 = dx3, θ^3 = dx2 − x1 dx3
        let cf = p.coframe();
        let expect = |s: &str| parse(s, &ctx).unwrap();
        assert!(cf.get(1, 0).equivalent(&expect("0")).unwrap());
        assert!(cf.get(1, 1).equivalent(&expect("0")).unwrap());
        assert!(cf.get(1, 2).equivalent(&expect("1")).unwrap());
        assert!(cf.get(2, 1).equivalent(&expect("1")).unwrap());
        assert!(cf.get(2, 2).equivalent(&expect("-x1")).unwrap());
        // coframe * frame = identity exactly
        let prod = p.coframe().mul(p.frame());
        assert!(prod.equivalent(&ExprMatrix::identity(&ctx, 4)).unwrap());
    }

    #[test]
    fn identity_frame_has_identity_coframe() {
        let ctx = Context::new(&["x1", "x2"], &[]).unwrap();
        let frame = ExprMatrix::identity(&ctx, 2);
        let p = FramedPatch::new(ctx.clone(), frame, &SamplingConfig::default()).unwrap();
        assert!(p
            .coframe()
            .equivalent(&ExprMatrix::identity(&ctx, 2))
            .unwrap());
    }

    #[test]
    fn rejects_odd_dimension_and_degenerate_frames() {
        let ctx = Context::new(&["x1", "x2"], &[]).unwrap();
        let mut frame = ExprMatrix::identity(&ctx, 2);
        frame.set(1, 1, Expr::zero(&ctx));
        assert!(matches!(
            FramedPatch::new(ctx, frame, &SamplingConfig::default()),
            Err(Error::DegenerateFrame(_))
        ));
        let ctx3 = Context::new(&["x1", "x2", "x3"], &[]).unwrap();
        let frame3 = ExprMatrix::identity(&ctx3, 3);
        assert!(FramedPatch::new(ctx3, frame3, &SamplingConfig::default()).is_err());
    }

    #[test]
    fn brackets_on_heisenberg() {
        let p = heisenberg_patch();
        // [e1, e2] = e3
        let br = p.bracket(&p.frame_field(0), &p.frame_field(1)).unwrap();
        for k in 0..4 {
            let expected = if k == 2 { 1 } else { 0 };
            assert!(br.components[k]
                .equivalent(&Expr::integer(p.context(), expected))
                .unwrap());
        }
        // [X, X] = 0
        let xx = p.bracket(&p.frame_field(1), &p.frame_field(1)).unwrap();
        assert!(xx.components.iter().all(|c| c.is_provably_zero().unwrap()));
    }

    #[test]
    fn bracket_with_scaled_field_uses_leibniz() {
        // [e2, x4 e2] = (e2 x4) e2 = 0 since e2 x4 = 0
        let p = heisenberg_patch();
        let ctx = p.context().clone();
        let x4 = parse("x4", &ctx).unwrap();
        let e2 = p.frame_field(1);
        let scaled = VecField::frame(e2.components.iter().map(|c| c * &x4).collect());
        let br = p.bracket(&e2, &scaled).unwrap();
        assert!(br.components.iter().all(|c| c.is_provably_zero().unwrap()));
    }

    #[test]
    fn structure_functions_match_heisenberg() {
        let p = heisenberg_patch();
        let c = &p.structure_functions().c;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let expected = if (i, j, k) == (0, 1, 2) {
                        1
                    } else if (i, j, k) == (1, 0, 2) {
                        -1
                    } else {
                        0
                    };
                    assert!(
                        c[i][j][k]
                            .equivalent(&Expr::integer(p.context(), expected))
                            .unwrap(),
                        "c[{i}][{j}][{k}]"
                    );
                }
            }
        }
    }

    #[test]
    fn coordinate_frame_has_zero_structure_functions() {
        let ctx = Context::new(&["x1", "x2"], &[]).unwrap();
        let p = FramedPatch::new(
            ctx.clone(),
            ExprMatrix::identity(&ctx, 2),
            &SamplingConfig::default(),
        )
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(p.structure_functions().c[i][j][k].is_provably_zero().unwrap());
                }
            }
        }
    }

    #[test]
    fn scaling_frame_scales_structure_functions() {
        // [2e_i, 2e_j] = 4[e_i, e_j] = 2 c^k_{ij} (2e_k)
        let ctx = Context::new(&["x1", "x2", "x3", "x4"], &[]).unwrap();
        let rows: Vec<Vec<Expr>> = [
            ["2", "0", "0", "0"],
            ["0", "2*x1", "2", "0"],
            ["0", "2", "0", "0"],
            ["0", "0", "0", "2"],
        ]
        .iter()
        .map(|r| r.iter().map(|s| parse(s, &ctx).unwrap()).collect())
        .collect();
        let frame = ExprMatrix::from_rows(rows).unwrap().transpose();
        let p = FramedPatch::new(ctx.clone(), frame, &SamplingConfig::default()).unwrap();
        let two = Expr::integer(&ctx, 2);
        assert!(p.structure_functions().c[0][1][2].equivalent(&two).unwrap());
    }

    #[test]
    fn apply_examples() {
        let p = heisenberg_patch();
        let ctx = p.context().clone();
        // e2(x2) = x1 with e2 = x1 ∂2 + ∂3
        let v = p
            .apply(&p.frame_field(1), &parse("x2", &ctx).unwrap())
            .unwrap();
        assert!(v.equivalent(&parse("x1", &ctx).unwrap()).unwrap());
        // e4(x4) = 1
        let v = p
            .apply(&p.frame_field(3), &parse("x4", &ctx).unwrap())
            .unwrap();
        assert!(v.equivalent(&Expr::one(&ctx)).unwrap());
        // e1(lambda*x2) = 0
        let v = p
            .apply(&p.frame_field(0), &parse("lambda*x2", &ctx).unwrap())
            .unwrap();
        assert!(v.is_provably_zero().unwrap());
    }

    #[test]
    fn d_theta3_is_minus_theta1_wedge_theta2() {
        let p = heisenberg_patch();
        let ctx = p.context().clone();
        // θ^3 has coframe components (0, 0, 1, 0)
        let alpha = OneForm {
            components: vec![
                Expr::zero(&ctx),
                Expr::zero(&ctx),
                Expr::one(&ctx),
                Expr::zero(&ctx),
            ],
        };
        let d = p.d_one_form(&alpha).unwrap();
        assert!(d.get(0, 1).equivalent(&Expr::integer(&ctx, -1)).unwrap());
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
            assert!(d.get(i, j).is_provably_zero().unwrap());
        }
    }

    #[test]
    fn d_of_coordinate_differential_vanishes() {
        // dx2 = x1 θ^2 + θ^3 is closed
        let p = heisenberg_patch();
        let ctx = p.context().clone();
        let alpha = OneForm {
            components: vec![
                Expr::zero(&ctx),
                parse("x1", &ctx).unwrap(),
                Expr::one(&ctx),
                Expr::zero(&ctx),
            ],
        };
        let d = p.d_one_form(&alpha).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!(d.components.get(i, j).is_provably_zero().unwrap());
            }
        }
    }

    #[test]
    fn jacobi_holds_on_heisenberg() {
        let p = heisenberg_patch();
        let checks = p.jacobi_checks(&SamplingConfig::default());
        assert!(checks.all_passed(), "{checks}");
    }

    #[test]
    fn d_squared_vanishes_on_random_functions() {
        let p = heisenberg_patch();
        let ctx = p.context().clone();
        let polys = [
            "x1",
            "x2",
            "x3",
            "x4",
            "x1*x2",
            "x3*x4",
            "x1^2",
            "x2^2 - x3",
            "x4^2 + x1",
            "x1*x3 - 2*x2",
            "x2*x4",
            "x1 + x2 + x3 + x4",
            "3*x1^2 - x2*x3",
            "x4*x1",
            "x3^2",
            "x2*x3 + x4",
            "x1*x4 - x2^2",
            "2*x3*x1",
            "x2 - 5*x4^2",
            "x1^2 - x4",
        ];
        assert_eq!(polys.len(), 20);
        for s in polys {
            let f = parse(s, &ctx).unwrap();
            let df = OneForm {
                components: (0..4)
                    .map(|i| p.apply(&p.frame_field(i), &f).unwrap())
                    .collect(),
            };
            let ddf = p.d_one_form(&df).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!(
                        ddf.components.get(i, j).is_provably_zero().unwrap(),
                        "d²({s}) at ({i},{j})"
                    );
                }
            }
        }
    }
}
