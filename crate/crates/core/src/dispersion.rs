//! Propagating SH guided modes of the intact bilayer plate.
//!
//! In each layer the mode shape is a cosine (or hyperbolic cosine, when the
//! wavenumber exceeds the layer's bulk shear wavenumber) anchored at the
//! traction-free face, so
//!
//! ```text
//! layer A:  u(x2) = C_A * cos(beta_A (x2 - h_A))      0 <= x2 <= h_A
//! layer B:  u(x2) = C_B * cos(beta_B (x2 + h_B))   -h_B <= x2 <= 0
//! ```
//!
//! with `beta^2 = omega^2 / c_T^2 - k^2`. Displacement and traction
//! continuity at the interface give the dispersion relation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::{BilayerPlate, Layer};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Points of the per-layer Gauss–Legendre rule used for thickness integrals.
pub const THICKNESS_QUADRATURE_POINTS: usize = 32;

/// Uniform scan resolution of the wavenumber interval.
pub const SCAN_POINTS: usize = 2048;

/// Default relative bisection tolerance for wavenumbers.
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

const MAX_SCAN_REFINEMENTS: usize = 4;

/// Propagation direction along x1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Oscillatory,
    Decaying,
}

/// Thickness profile of a mode inside one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerShape {
    pub kind: ShapeKind,
    /// Transverse wavenumber (oscillatory) or decay rate (decaying), rad/m.
    pub beta: f64,
    /// Coefficient of the cos/cosh profile after normalization.
    pub amplitude: f64,
    pub mu: f64,
    pub thickness: f64,
}

impl LayerShape {
    fn from_q(q: f64, mu: f64, thickness: f64) -> Self {
        let (kind, beta) = if q >= 0.0 {
            (ShapeKind::Oscillatory, q.sqrt())
        } else {
            (ShapeKind::Decaying, (-q).sqrt())
        };
        Self {
            kind,
            beta,
            amplitude: 1.0,
            mu,
            thickness,
        }
    }

    /// Profile value at distance `s` (signed, s = 0 at the free face).
    fn profile(&self, s: f64) -> f64 {
        match self.kind {
            ShapeKind::Oscillatory => (self.beta * s).cos(),
            ShapeKind::Decaying => (self.beta * s).cosh(),
        }
    }

    fn profile_slope(&self, s: f64) -> f64 {
        match self.kind {
            ShapeKind::Oscillatory => -self.beta * (self.beta * s).sin(),
            ShapeKind::Decaying => self.beta * (self.beta * s).sinh(),
        }
    }

    fn max_abs_profile(&self) -> f64 {
        match self.kind {
            // cos reaches 1 at the free face
            ShapeKind::Oscillatory => 1.0,
            ShapeKind::Decaying => (self.beta * self.thickness).cosh(),
        }
    }
}

/// One propagating SH mode at fixed frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidedMode {
    /// 1-based position in decreasing-k order.
    pub index: usize,
    pub omega: f64,
    pub k: f64,
    pub layer_a: LayerShape,
    pub layer_b: LayerShape,
    /// Factor applied to the raw continuity solution to reach max|u| = 1.
    pub norm: f64,
    /// Time-averaged energy flux per unit width, W/m.
    pub power: f64,
}

impl GuidedMode {
    fn layer(&self, layer: Layer) -> &LayerShape {
        match layer {
            Layer::A => &self.layer_a,
            Layer::B => &self.layer_b,
        }
    }

    fn local_coordinate(&self, layer: Layer, x2: f64) -> f64 {
        match layer {
            Layer::A => x2 - self.layer_a.thickness,
            Layer::B => x2 + self.layer_b.thickness,
        }
    }

    pub fn h_a(&self) -> f64 {
        self.layer_a.thickness
    }

    pub fn h_b(&self) -> f64 {
        self.layer_b.thickness
    }

    pub fn mu(&self, layer: Layer) -> f64 {
        self.layer(layer).mu
    }

    /// Displacement profile evaluated with `layer`'s formula (no range check).
    pub fn shape_in_layer(&self, layer: Layer, x2: f64) -> f64 {
        let l = self.layer(layer);
        l.amplitude * l.profile(self.local_coordinate(layer, x2))
    }

    /// d(u)/d(x2) evaluated with `layer`'s formula.
    pub fn slope_in_layer(&self, layer: Layer, x2: f64) -> f64 {
        let l = self.layer(layer);
        l.amplitude * l.profile_slope(self.local_coordinate(layer, x2))
    }

    fn check_range(&self, x2: f64, lower: f64, upper: f64) -> Result<()> {
        let slack = 1e-12 * (self.h_a() + self.h_b());
        if x2 < lower - slack || x2 > upper + slack || !x2.is_finite() {
            return Err(Error::Domain { x2, lower, upper });
        }
        Ok(())
    }

    /// Mode shape u(x2) on -h_b <= x2 <= h_a.
    pub fn shape(&self, x2: f64) -> Result<f64> {
        self.check_range(x2, -self.h_b(), self.h_a())?;
        let layer = if x2 >= 0.0 { Layer::A } else { Layer::B };
        Ok(self.shape_in_layer(layer, x2))
    }

    /// sigma_31 of the mode travelling in `direction`, per unit modal amplitude
    /// and without the e^{±ikx1} factor: `± i mu k u(x2)`. The caller names the
    /// layer, which resolves the jump in mu at the interface.
    pub fn stress(&self, x2: f64, direction: Direction, layer: Layer) -> Result<Complex64> {
        match layer {
            Layer::A => self.check_range(x2, 0.0, self.h_a())?,
            Layer::B => self.check_range(x2, -self.h_b(), 0.0)?,
        }
        let value = direction.sign() * self.mu(layer) * self.k * self.shape_in_layer(layer, x2);
        Ok(Complex64::new(0.0, value))
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k
    }

    pub fn phase_velocity(&self) -> f64 {
        self.omega / self.k
    }

    /// Integral of mu * u^2 over the thickness.
    pub fn weighted_norm_sq(&self) -> f64 {
        thickness_integral(self.h_a(), self.h_b(), |layer, x2| {
            self.mu(layer) * self.shape_in_layer(layer, x2).powi(2)
        })
    }

    /// Same mode with its amplitude multiplied by `factor`; power follows.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        m.layer_a.amplitude *= factor;
        m.layer_b.amplitude *= factor;
        m.norm *= factor;
        m.power = mode_power(&m);
        m
    }
}

/// Integrates `f(layer, x2)` across both layers with the per-layer 32-point rule.
pub fn thickness_integral(h_a: f64, h_b: f64, f: impl Fn(Layer, f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(THICKNESS_QUADRATURE_POINTS);
    let mut sum = 0.0;
    for (layer, lo, hi) in [(Layer::B, -h_b, 0.0), (Layer::A, 0.0, h_a)] {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        sum += half
            * x.iter()
                .zip(&w)
                .map(|(xi, wi)| wi * f(layer, mid + half * xi))
                .sum::<f64>();
    }
    sum
}

fn layer_q(omega: f64, k: f64, mu: f64, rho: f64) -> f64 {
    omega * omega * rho / mu - k * k
}

/// Bilayer SH dispersion function
/// `D(k) = mu_A g_A t_A + mu_B g_B t_B`, with `g t = beta tan(beta h)` for
/// oscillatory layers and `-gamma tanh(gamma h)` for decaying ones.
/// Propagating wavenumbers are its zeros.
pub fn dispersion_residual(k: f64, omega: f64, plate: &BilayerPlate) -> f64 {
    let term = |layer: Layer| {
        let m = plate.material(layer);
        let h = plate.layer_thickness(layer);
        let q = layer_q(omega, k, m.mu, m.rho);
        let gt = if q >= 0.0 {
            let b = q.sqrt();
            b * (b * h).tan()
        } else {
            let g = (-q).sqrt();
            -g * (g * h).tanh()
        };
        m.mu * gt
    };
    term(Layer::A) + term(Layer::B)
}

/// Pole-free form of the dispersion function: `D` multiplied by
/// `cos(beta_A h_A) cos(beta_B h_B)` (cosh factors divided out for decaying
/// layers). Used for root bracketing since `tan` poles also change sign, and
/// it stays finite on roots where both layers have a node at the interface.
pub fn regularized_residual(k: f64, omega: f64, plate: &BilayerPlate) -> f64 {
    let terms = |layer: Layer| {
        let m = plate.material(layer);
        let h = plate.layer_thickness(layer);
        let q = layer_q(omega, k, m.mu, m.rho);
        if q >= 0.0 {
            let b = q.sqrt();
            (m.mu * b * (b * h).sin(), (b * h).cos())
        } else {
            let g = (-q).sqrt();
            (-m.mu * g * (g * h).tanh(), 1.0)
        }
    };
    let (sa, ca) = terms(Layer::A);
    let (sb, cb) = terms(Layer::B);
    sa * cb + sb * ca
}

fn scan_roots(omega: f64, plate: &BilayerPlate, points: usize, tol: f64) -> Vec<f64> {
    let k_max = omega / plate.min_shear_speed();
    // a hair past k_max both layers decay and the function is strictly negative,
    // so a root sitting exactly at k_max (homogeneous fundamental) is bracketed
    let k_end = k_max * (1.0 + 1e-7);
    let f = |k: f64| regularized_residual(k, omega, plate);
    let mut roots: Vec<f64> = Vec::new();
    let mut k_prev = 0.0;
    let mut f_prev = f(0.0);
    for i in 1..=points {
        let k = k_end * i as f64 / points as f64;
        let fk = f(k);
        if fk == 0.0 {
            roots.push(k);
        } else if f_prev != 0.0 && (f_prev < 0.0) != (fk < 0.0) {
            roots.push(bisect(&f, k_prev, k, f_prev, tol));
        }
        k_prev = k;
        f_prev = fk;
    }
    let cutoff_floor = 1e-9 * k_max;
    roots.retain(|&k| k > cutoff_floor);
    for k in roots.iter_mut() {
        *k = k.min(k_max);
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 10.0 * tol * a.abs().max(b.abs()));
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * hi.abs() {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Every propagating mode at `omega`, sorted by decreasing wavenumber.
pub fn find_propagating_modes(
    omega: f64,
    plate: &BilayerPlate,
    tol: f64,
) -> Result<Vec<GuidedMode>> {
    if !(omega > 0.0) {
        return Err(crate::error::invalid("omega must be positive"));
    }
    let mut points = SCAN_POINTS;
    let mut roots = scan_roots(omega, plate, points, tol);
    let mut settled = false;
    for _ in 0..MAX_SCAN_REFINEMENTS {
        let finer = scan_roots(omega, plate, 4 * points, tol);
        if finer.len() == roots.len() {
            settled = true;
            break;
        }
        points *= 4;
        roots = finer;
    }
    if !settled || roots.is_empty() {
        return Err(Error::RootCount { omega });
    }
    Ok(roots
        .into_iter()
        .enumerate()
        .map(|(i, k)| build_mode(i + 1, omega, k, plate))
        .collect())
}

/// Builds the normalized mode for a known root `k`.
pub fn build_mode(index: usize, omega: f64, k: f64, plate: &BilayerPlate) -> GuidedMode {
    let (ma, mb) = (&plate.layer_a, &plate.layer_b);
    let mut la = LayerShape::from_q(layer_q(omega, k, ma.mu, ma.rho), ma.mu, plate.h_a);
    let mut lb = LayerShape::from_q(layer_q(omega, k, mb.mu, mb.rho), mb.mu, plate.h_b);

    // interface values and slopes of the unit profiles
    let ca = la.profile(-plate.h_a);
    let cb = lb.profile(plate.h_b);
    let sa = la.profile_slope(-plate.h_a);
    let sb = lb.profile_slope(plate.h_b);
    // continuity: C_A ca = C_B cb ; traction: mu_A C_A sa = mu_B C_B sb
    let (mut amp_a, mut amp_b) = if ca.hypot(cb) > 1e-3 {
        (cb, ca)
    } else {
        (mb.mu * sb, ma.mu * sa)
    };
    let peak = (amp_a.abs() * la.max_abs_profile()).max(amp_b.abs() * lb.max_abs_profile());
    let sign = if amp_b.abs() > 1e-14 * peak {
        amp_b.signum()
    } else {
        amp_a.signum()
    };
    let norm = sign / peak;
    amp_a *= norm;
    amp_b *= norm;
    la.amplitude = amp_a;
    lb.amplitude = amp_b;
    let mut mode = GuidedMode {
        index,
        omega,
        k,
        layer_a: la,
        layer_b: lb,
        norm,
        power: 0.0,
    };
    mode.power = mode_power(&mode);
    mode
}

/// Time-averaged energy flux `(omega k / 2) * integral(mu u^2)`, W/m.
pub fn mode_power(mode: &GuidedMode) -> f64 {
    0.5 * mode.omega * mode.k * mode.weighted_norm_sq()
}

/// `G[m][n] = integral(mu u_m u_n dx2)` over the thickness.
pub fn gram_matrix(modes: &[GuidedMode]) -> DMatrix<f64> {
    let n = modes.len();
    let mut g = DMatrix::zeros(n, n);
    if n == 0 {
        return g;
    }
    let (h_a, h_b) = (modes[0].h_a(), modes[0].h_b());
    for i in 0..n {
        for j in i..n {
            let v = thickness_integral(h_a, h_b, |layer, x2| {
                modes[i].mu(layer)
                    * modes[i].shape_in_layer(layer, x2)
                    * modes[j].shape_in_layer(layer, x2)
            });
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Largest off-diagonal magnitude divided by the smallest diagonal magnitude.
pub fn orthogonality_ratio(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows();
    let min_diag = (0..n).map(|i| gram[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    let mut max_off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_off = max_off.max(gram[(i, j)].abs());
            }
        }
    }
    max_off / min_diag
}
