//! Clamped–free Euler–Bernoulli modes and the modal integrals used by the
//! discretised equations of motion.
//!
//! Shape functions are the eigenfunctions of the *bare* uniform beam,
//! normalised to unit tip deflection. The integrals, on the other hand, use
//! the piecewise (patch-covered / bare) section properties, so the shapes
//! are assumed modes rather than exact eigenfunctions of the composite beam.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::{derive_sections, RobotParams, SectionProperties, MAX_MODES};
use crate::quadrature;

/// Gauss points per beam segment.
pub const POINTS_PER_SEGMENT: usize = 64;

const ROOT_ITER_CAP: usize = 200;

/// First `n` positive roots of `1 + cos(x)·cosh(x) = 0`.
///
/// Root `k` is bracketed in `((k-1)π, kπ)` and bisected on the scaled
/// function `cos(x) + 1/cosh(x)`, which has the same zeros but stays O(1);
/// `tol` applies to that scaled residual.
pub fn characteristic_roots(n: usize, tol: f64) -> Result<Vec<f64>> {
    if n == 0 || n > MAX_MODES {
        return Err(Error::Domain(format!("mode count must lie in 1..={MAX_MODES}, got {n}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let h = |x: f64| x.cos() + 1.0 / x.cosh();
    let mut roots = Vec::with_capacity(n);
    for k in 1..=n {
        let (mut lo, mut hi) = ((k - 1) as f64 * PI, k as f64 * PI);
        let (mut flo, fhi) = (h(lo), h(hi));
        if flo * fhi > 0.0 {
            return Err(Error::Numerical(format!("no sign change in bracket [{lo}, {hi}]")));
        }
        // Bisect to the floating-point limit, then judge the residual.
        for _ in 0..ROOT_ITER_CAP {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = h(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm * flo > 0.0 {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        let x = if h(lo).abs() <= h(hi).abs() { lo } else { hi };
        if h(x).abs() >= tol {
            return Err(Error::Numerical(format!(
                "root {k} did not converge to {tol:e} within bracket [{lo}, {hi}]"
            )));
        }
        roots.push(x);
    }
    Ok(roots)
}

/// Circular natural frequency of the bare uniform beam for root `beta_l`.
pub fn natural_frequency(beta_l: f64, p: &RobotParams) -> f64 {
    let area = p.beam_width * p.beam_thickness;
    let inertia = p.beam_width * p.beam_thickness.powi(3) / 12.0;
    let wave = beta_l / p.beam_length;
    wave * wave * (p.beam_modulus * inertia / (p.beam_density * area)).sqrt()
}

/// Deflection and first three spatial derivatives of one shape function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeValue {
    pub w: f64,
    pub dw: f64,
    pub d2w: f64,
    pub d3w: f64,
}

/// One clamped–free shape `A1 (sin βx − sinh βx) + A2 (cos βx − cosh βx)`.
///
/// Evaluated as `sin + σ cos − ½[(1+σ)e^{βx} − (1−σ)e^{−βx}]`, with `1+σ`
/// computed without cancellation, so high modes keep full precision.
#[derive(Debug, Clone, Copy)]
pub struct ModeShape {
    pub beta: f64,
    sigma: f64,
    one_plus_sigma: f64,
    scale: f64,
}

impl ModeShape {
    fn new(beta_l: f64, length: f64) -> Self {
        let (s, c) = beta_l.sin_cos();
        let denom = c + beta_l.cosh();
        let sigma = -(s + beta_l.sinh()) / denom;
        let one_plus_sigma = (c - s + (-beta_l).exp()) / denom;
        let mut shape = ModeShape {
            beta: beta_l / length,
            sigma,
            one_plus_sigma,
            scale: 1.0,
        };
        shape.scale = 1.0 / shape.raw(length).w;
        shape
    }

    fn raw(&self, x: f64) -> ModeValue {
        let b = self.beta;
        let y = b * x;
        let (s, c) = y.sin_cos();
        let (ep, em) = (y.exp(), (-y).exp());
        let (a, m) = (self.one_plus_sigma, 2.0 - self.one_plus_sigma);
        let hyp_odd = 0.5 * (a * ep - m * em); // sinh + σ cosh
        let hyp_even = 0.5 * (a * ep + m * em); // cosh + σ sinh
        ModeValue {
            w: s + self.sigma * c - hyp_odd,
            dw: b * (c - self.sigma * s - hyp_even),
            d2w: b * b * (-s - self.sigma * c - hyp_odd),
            d3w: b * b * b * (-c + self.sigma * s - hyp_even),
        }
    }

    /// Unit-tip-normalised value and derivatives. No range check.
    pub fn eval(&self, x: f64) -> ModeValue {
        let r = self.raw(x);
        ModeValue {
            w: r.w * self.scale,
            dw: r.dw * self.scale,
            d2w: r.d2w * self.scale,
            d3w: r.d3w * self.scale,
        }
    }

    /// `(A'_1, A'_2)` under unit-tip normalisation.
    pub fn coefficients(&self) -> (f64, f64) {
        (self.scale, self.sigma * self.scale)
    }
}

/// Roots and shapes, before any integral is evaluated.
#[derive(Debug, Clone)]
pub struct ModeShapes {
    pub length: f64,
    pub beta_l: Vec<f64>,
    pub shapes: Vec<ModeShape>,
}

impl ModeShapes {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        let beta_l = characteristic_roots(n, 1e-13)?;
        let shapes = beta_l.iter().map(|&bl| ModeShape::new(bl, length)).collect();
        Ok(ModeShapes { length, beta_l, shapes })
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }
}

/// Integrals over `[0, L]` with the piecewise section weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalIntegrals {
    /// `∫ρA W_i W_j`
    pub mass: DMatrix<f64>,
    /// `∫EI W_i'' W_j''`
    pub stiffness: DMatrix<f64>,
    /// `∫W_i W_j` (unit weight, for viscous damping)
    pub overlap: DMatrix<f64>,
    /// `∫ρA W_i`
    pub first: DVector<f64>,
    /// `∫ρA x W_i`
    pub moment: DVector<f64>,
    /// `∫W_i`
    pub plain: DVector<f64>,
    /// `W_i'(L_p)`, the patch-edge slope.
    pub patch_slope: DVector<f64>,
    /// `∫ρA`, `∫ρA x`, `∫ρA x²`
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

pub fn compute_modal_integrals(
    p: &RobotParams,
    sections: &SectionProperties,
    shapes: &ModeShapes,
) -> Result<ModalIntegrals> {
    let coarse = integrate(p, sections, shapes, POINTS_PER_SEGMENT);
    let fine = integrate(p, sections, shapes, 2 * POINTS_PER_SEGMENT);
    let checks: [(&str, f64); 7] = [
        ("mass", rel_change(coarse.mass.as_slice(), fine.mass.as_slice())),
        ("stiffness", rel_change(coarse.stiffness.as_slice(), fine.stiffness.as_slice())),
        ("overlap", rel_change(coarse.overlap.as_slice(), fine.overlap.as_slice())),
        ("first", rel_change(coarse.first.as_slice(), fine.first.as_slice())),
        ("moment", rel_change(coarse.moment.as_slice(), fine.moment.as_slice())),
        ("plain", rel_change(coarse.plain.as_slice(), fine.plain.as_slice())),
        ("p", rel_change(&[coarse.p0, coarse.p1, coarse.p2], &[fine.p0, fine.p1, fine.p2])),
    ];
    for (name, change) in checks {
        if change.is_nan() || change > 1e-10 {
            return Err(Error::Numerical(format!(
                "modal integral table `{name}` not converged: relative change {change:e} on refinement"
            )));
        }
    }
    Ok(coarse)
}

fn rel_change(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn integrate(p: &RobotParams, sections: &SectionProperties, shapes: &ModeShapes, points: usize) -> ModalIntegrals {
    let n = shapes.len();
    let mut out = ModalIntegrals {
        mass: DMatrix::zeros(n, n),
        stiffness: DMatrix::zeros(n, n),
        overlap: DMatrix::zeros(n, n),
        first: DVector::zeros(n),
        moment: DVector::zeros(n),
        plain: DVector::zeros(n),
        patch_slope: DVector::from_iterator(n, shapes.shapes.iter().map(|s| s.eval(p.piezo_length).dw)),
        p0: 0.0,
        p1: 0.0,
        p2: 0.0,
    };
    let segments = [
        (0.0, p.piezo_length, sections.rho_a_inner, sections.ei_inner),
        (p.piezo_length, p.beam_length, sections.rho_a_outer, sections.ei_outer),
    ];
    let mut vals = vec![ModeValue { w: 0.0, dw: 0.0, d2w: 0.0, d3w: 0.0 }; n];
    for (a, b, rho_a, ei) in segments {
        for (x, wt) in quadrature::mapped(points, a, b) {
            for (v, s) in vals.iter_mut().zip(&shapes.shapes) {
                *v = s.eval(x);
            }
            out.p0 += wt * rho_a;
            out.p1 += wt * rho_a * x;
            out.p2 += wt * rho_a * x * x;
            for i in 0..n {
                out.first[i] += wt * rho_a * vals[i].w;
                out.moment[i] += wt * rho_a * x * vals[i].w;
                out.plain[i] += wt * vals[i].w;
                for j in 0..=i {
                    out.mass[(i, j)] += wt * rho_a * vals[i].w * vals[j].w;
                    out.stiffness[(i, j)] += wt * ei * vals[i].d2w * vals[j].d2w;
                    out.overlap[(i, j)] += wt * vals[i].w * vals[j].w;
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            out.mass[(j, i)] = out.mass[(i, j)];
            out.stiffness[(j, i)] = out.stiffness[(i, j)];
            out.overlap[(j, i)] = out.overlap[(i, j)];
        }
    }
    out
}

/// Everything the equations of motion need to know about one beam.
/// Both beams are identical, so one basis serves the pair.
#[derive(Debug, Clone)]
pub struct BeamModalBasis {
    pub length: f64,
    pub piezo_length: f64,
    pub beta_l: Vec<f64>,
    /// Wavenumbers, 1/m.
    pub beta: Vec<f64>,
    /// Bare-beam circular frequencies, rad/s.
    pub omega: Vec<f64>,
    pub shapes: ModeShapes,
    pub integrals: ModalIntegrals,
    /// Gram matrix of `{1, x, W_1..W_n}` under the `ρA` weight.
    pub gram: DMatrix<f64>,
}

impl BeamModalBasis {
    pub fn new(p: &RobotParams) -> Result<Self> {
        let sections = derive_sections(p);
        Self::with_sections(p, &sections)
    }

    pub fn with_sections(p: &RobotParams, sections: &SectionProperties) -> Result<Self> {
        let shapes = ModeShapes::new(p.n_modes, p.beam_length)?;
        let integrals = compute_modal_integrals(p, sections, &shapes)?;
        let n = shapes.len();
        let mut gram = DMatrix::zeros(n + 2, n + 2);
        gram[(0, 0)] = integrals.p0;
        gram[(0, 1)] = integrals.p1;
        gram[(1, 0)] = integrals.p1;
        gram[(1, 1)] = integrals.p2;
        for i in 0..n {
            gram[(0, i + 2)] = integrals.first[i];
            gram[(i + 2, 0)] = integrals.first[i];
            gram[(1, i + 2)] = integrals.moment[i];
            gram[(i + 2, 1)] = integrals.moment[i];
            for j in 0..n {
                gram[(i + 2, j + 2)] = integrals.mass[(i, j)];
            }
        }
        Ok(BeamModalBasis {
            length: p.beam_length,
            piezo_length: p.piezo_length,
            beta: shapes.beta_l.iter().map(|bl| bl / p.beam_length).collect(),
            omega: shapes.beta_l.iter().map(|&bl| natural_frequency(bl, p)).collect(),
            beta_l: shapes.beta_l.clone(),
            shapes,
            integrals,
            gram,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.shapes.len()
    }

    pub fn coefficients(&self) -> Vec<(f64, f64)> {
        self.shapes.shapes.iter().map(|s| s.coefficients()).collect()
    }

    pub fn mode_shape(&self, x: f64, mode: usize) -> Result<ModeValue> {
        mode_shape(x, mode, self)
    }

    /// Natural frequencies (Hz) of one beam with its root clamped, from the
    /// assumed-mode mass and stiffness matrices with the patch included.
    pub fn clamped_frequencies_hz(&self) -> Result<Vec<f64>> {
        let chol = self
            .integrals
            .mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("modal mass matrix is not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        let reduced = &linv * &self.integrals.stiffness * linv.transpose();
        let reduced = 0.5 * (&reduced + reduced.transpose());
        let mut eig: Vec<f64> = reduced.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        Ok(eig.into_iter().map(|l| l.max(0.0).sqrt() / (2.0 * PI)).collect())
    }
}

/// Shape function `mode` (zero-based) at `x ∈ [0, L]`.
pub fn mode_shape(x: f64, mode: usize, basis: &BeamModalBasis) -> Result<ModeValue> {
    if !(0.0..=basis.length).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, {}]", basis.length)));
    }
    let shape = basis
        .shapes
        .shapes
        .get(mode)
        .ok_or_else(|| Error::Domain(format!("mode {mode} out of range (n = {})", basis.n_modes())))?;
    Ok(shape.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Plain bisection on the unscaled characteristic function.
    fn bisect_oracle(mut lo: f64, mut hi: f64) -> f64 {
        let f = |x: f64| 1.0 + x.cos() * x.cosh();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn first_roots_match_bisection() {
        let roots = characteristic_roots(3, 1e-13).unwrap();
        for (k, r) in roots.iter().enumerate() {
            let oracle = bisect_oracle(k as f64 * PI, (k + 1) as f64 * PI);
            assert!((r - oracle).abs() < 1e-10, "{r} vs {oracle}");
        }
        for (r, want) in roots.iter().zip([1.875104, 4.694091, 7.854757]) {
            assert!((r - want).abs() < 1e-6);
        }
    }

    #[test]
    fn high_roots_approach_odd_half_pi() {
        let roots = characteristic_roots(10, 1e-13).unwrap();
        for (k, r) in roots.iter().enumerate().skip(4) {
            let asym = (2 * k + 1) as f64 * PI / 2.0;
            assert!((r - asym).abs() < 1e-4, "root {} = {r}, asymptote {asym}", k + 1);
        }
        assert!(roots.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn root_residuals() {
        let roots = characteristic_roots(MAX_MODES, 1e-13).unwrap();
        for (k, r) in roots.iter().enumerate() {
            assert!((r.cos() + 1.0 / r.cosh()).abs() < 1e-9);
            // Unscaled residual is only representable for the low roots.
            if k < 4 {
                assert!((1.0 + r.cos() * r.cosh()).abs() < 1e-9, "root {k}");
            }
        }
        assert!(characteristic_roots(MAX_MODES + 1, 1e-9).is_err());
        assert!(characteristic_roots(0, 1e-9).is_err());
    }

    #[test]
    fn frequency_scaling() {
        let p = RobotParams::default();
        let w1 = natural_frequency(1.875104, &p);
        let doubled = RobotParams {
            beam_length: 2.0 * p.beam_length,
            ..p.clone()
        };
        assert!((natural_frequency(1.875104, &doubled) / w1 - 0.25).abs() < 1e-14);
        let w2 = natural_frequency(4.694091, &p);
        assert!((w2 / w1 - 6.267).abs() < 1e-3);
    }

    #[test]
    fn boundary_conditions() {
        let basis = BeamModalBasis::new(&RobotParams {
            n_modes: MAX_MODES,
            ..RobotParams::default()
        })
        .unwrap();
        for k in 0..basis.n_modes() {
            let root = basis.mode_shape(0.0, k).unwrap();
            assert!(root.w.abs() < 1e-12 && root.dw.abs() < 1e-10, "mode {k}: {root:?}");
            let tip = basis.mode_shape(basis.length, k).unwrap();
            assert!((tip.w - 1.0).abs() < 1e-12);
            let curvature_scale = basis.beta[k] * basis.beta[k];
            assert!(tip.d2w.abs() < 1e-9 * curvature_scale, "mode {k}: {tip:?}");
            assert!(tip.d3w.abs() < 1e-8 * curvature_scale * basis.beta[k], "mode {k}: {tip:?}");
        }
        assert!(basis.mode_shape(-1e-3, 0).is_err());
        assert!(basis.mode_shape(basis.length * 1.01, 0).is_err());
        assert!(basis.mode_shape(0.1, MAX_MODES).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let basis = BeamModalBasis::new(&RobotParams {
            n_modes: 4,
            ..RobotParams::default()
        })
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..20 {
            let x = rng.gen_range(0.01..basis.length - 0.01);
            for k in 0..4 {
                let v = |x| basis.mode_shape(x, k).unwrap();
                let c = v(x);
                let (lo, hi) = (v(x - h), v(x + h));
                let b = basis.beta[k];
                assert!(((hi.w - lo.w) / (2.0 * h) - c.dw).abs() < 1e-6 * b, "W' mode {k}");
                assert!(((hi.dw - lo.dw) / (2.0 * h) - c.d2w).abs() < 1e-6 * b * b, "W'' mode {k}");
                assert!(((hi.d2w - lo.d2w) / (2.0 * h) - c.d3w).abs() < 1e-6 * b * b * b);
            }
        }
    }

    fn bare_params() -> RobotParams {
        // Patch with the same density and stiffness per unit length as nothing.
        RobotParams {
            piezo_density: 0.0,
            piezo_modulus: 0.0,
            n_modes: 6,
            ..RobotParams::default()
        }
    }

    #[test]
    fn bare_beam_modes_are_orthogonal() {
        let p = bare_params();
        let basis = BeamModalBasis::new(&p).unwrap();
        let b = &basis.shapes;
        // High-resolution trapezoid oracle, independent of the Gauss rule.
        let steps = 200_000;
        let dx = p.beam_length / steps as f64;
        let mut m = [[0.0; 2]; 2];
        for s in 0..=steps {
            let x = s as f64 * dx;
            let wt = if s == 0 || s == steps { 0.5 * dx } else { dx };
            let (w1, w2) = (b.shapes[0].eval(x).w, b.shapes[1].eval(x).w);
            m[0][0] += wt * w1 * w1;
            m[0][1] += wt * w1 * w2;
            m[1][1] += wt * w2 * w2;
        }
        assert!(m[0][1].abs() < 1e-8 * m[0][0], "{m:?}");
        let mm = &basis.integrals.mass;
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(mm[(i, j)].abs() < 1e-10 * mm[(i, i)]);
                }
            }
        }
        let rho_a = p.beam_density * p.beam_width * p.beam_thickness;
        assert!((basis.integrals.p0 - rho_a * p.beam_length).abs() < 1e-14);
    }

    #[test]
    fn rayleigh_quotient_matches_bare_frequency() {
        let basis = BeamModalBasis::new(&bare_params()).unwrap();
        let ints = &basis.integrals;
        for i in 0..6 {
            let ratio = ints.stiffness[(i, i)] / ints.mass[(i, i)];
            let w2 = basis.omega[i] * basis.omega[i];
            assert!((ratio / w2 - 1.0).abs() < 1e-6, "mode {i}");
        }
    }

    #[test]
    fn composite_tables_are_symmetric_positive_definite() {
        let basis = BeamModalBasis::new(&RobotParams {
            n_modes: 6,
            ..RobotParams::default()
        })
        .unwrap();
        for m in [&basis.integrals.mass, &basis.integrals.stiffness, &basis.gram] {
            let asym = (m - m.transpose()).amax();
            assert!(asym <= 1e-12 * m.amax());
            assert!(m.clone().cholesky().is_some());
        }
        assert!(basis.integrals.patch_slope[0] > 0.0);
        // Patch slope against a finite difference of the shape itself.
        let h = 1e-6;
        let lp = basis.piezo_length;
        let fd = (basis.mode_shape(lp + h, 0).unwrap().w - basis.mode_shape(lp - h, 0).unwrap().w) / (2.0 * h);
        assert!((fd - basis.integrals.patch_slope[0]).abs() < 1e-6);
    }

    #[test]
    fn clamped_frequencies_stiffen_with_patch() {
        let p = RobotParams::default();
        let basis = BeamModalBasis::new(&p).unwrap();
        let hz = basis.clamped_frequencies_hz().unwrap();
        assert!(hz[0] > basis.omega[0] / (2.0 * PI));
        let bare = BeamModalBasis::new(&bare_params()).unwrap();
        let bare_hz = bare.clamped_frequencies_hz().unwrap();
        for (f, w) in bare_hz.iter().zip(&bare.omega) {
            assert!((f / (w / (2.0 * PI)) - 1.0).abs() < 1e-6);
        }
    }
}
