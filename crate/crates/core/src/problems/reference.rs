//! Pseudo-spectral reference solution of the periodic reaction–diffusion
//! problem `u_t = ν u_xx + ρ u(1 − u)`.
//!
//! The solver uses Fourier collocation in x and exponential time differencing
//! (ETDRK4, coefficients evaluated by contour averaging) in t, so the stiff
//! diffusion term is integrated exactly.
//!
//! # File layout
//!
//! One UTF-8 JSON header line terminated by `\n`, then three little-endian
//! f64 arrays with no padding: `x` (`nx + 1` nodes, `0..=2π`), `t` (`nt`
//! slices) and the values, row-major `[t][x]`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::reaction::{ReactionDiffusion, DIFFUSION, GROWTH, T_FINAL};
use crate::error::{Error, Result};

const FORMAT: &str = "gbpinn-reference";
const VERSION: u32 = 1;

/// Space-resolution and time-step change thresholds of the self-checks.
pub const SPACE_TOLERANCE: f64 = 1e-6;
pub const TIME_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    /// Number of periodic collocation nodes (even).
    pub nx: usize,
    pub steps: usize,
    /// Store a slice every this many steps.
    pub output_every: usize,
    pub contour_points: usize,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            nx: 256,
            steps: 1000,
            output_every: 10,
            contour_points: 32,
        }
    }
}

impl ReferenceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 256 || !self.nx.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "reference nx must be even and >= 256, got {}",
                self.nx
            )));
        }
        if self.steps < 1000 {
            return Err(Error::Config(format!(
                "reference needs >= 1000 time steps, got {}",
                self.steps
            )));
        }
        if self.output_every == 0 || !self.steps.is_multiple_of(self.output_every) {
            return Err(Error::Config(format!(
                "output_every = {} must divide steps = {}",
                self.output_every, self.steps
            )));
        }
        if self.contour_points < 8 {
            return Err(Error::Config("at least 8 contour points are needed".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        T_FINAL / self.steps as f64
    }

    pub fn slices(&self) -> usize {
        self.steps / self.output_every + 1
    }

    /// Hex prefix of the SHA-256 of the solver metadata, used as cache key.
    pub fn cache_key(&self) -> String {
        let meta = serde_json::json!({
            "problem": "reaction",
            "nu": DIFFUSION,
            "rho": GROWTH,
            "t_final": T_FINAL,
            "scheme": SCHEME,
            "spec": self,
        });
        let digest = Sha256::digest(meta.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn file_name(&self) -> String {
        format!("reaction_{}.bin", self.cache_key())
    }
}

const SCHEME: &str = "fourier-etdrk4";

/// Self-convergence results attached to a checked grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfCheck {
    /// Relative l2 change (root form) against twice the space resolution.
    pub space_change: f64,
    /// Relative l2 change (root form) against half the time step.
    pub time_change: f64,
    pub min_value: f64,
    pub max_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    dtype: String,
    layout: String,
    nx: usize,
    nt: usize,
    scheme: String,
    nu: f64,
    rho: f64,
    spec: ReferenceSpec,
    check: Option<SelfCheck>,
}

#[derive(Clone, Debug)]
pub struct ReferenceGrid {
    pub spec: ReferenceSpec,
    /// `nx + 1` nodes covering `[0, 2π]`; the last repeats the first.
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// Row-major `[t][x]` over `x`.
    pub values: Vec<f64>,
    pub check: Option<SelfCheck>,
    coefficients: Vec<Vec<Complex64>>,
}

impl PartialEq for ReferenceGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.x == other.x
            && self.t == other.t
            && self.values == other.values
            && self.check == other.check
    }
}

struct Solver {
    nx: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
    scratch: Vec<Complex64>,
}

fn wavenumber(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

impl Solver {
    fn new(nx: usize, dt: f64, contour_points: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(nx);
        let inverse = planner.plan_fft_inverse(nx);
        let roots: Vec<Complex64> = (1..=contour_points)
            .map(|j| Complex64::from_polar(1.0, std::f64::consts::PI * (j as f64 - 0.5) / contour_points as f64))
            .collect();
        let m = contour_points as f64;
        let mut s = Self {
            nx,
            forward,
            inverse,
            e: Vec::with_capacity(nx),
            e2: Vec::with_capacity(nx),
            q: Vec::with_capacity(nx),
            f1: Vec::with_capacity(nx),
            f2: Vec::with_capacity(nx),
            f3: Vec::with_capacity(nx),
            scratch: vec![Complex64::new(0.0, 0.0); nx],
        };
        for j in 0..nx {
            let k = wavenumber(j, nx);
            let hl = -DIFFUSION * k * k * dt;
            s.e.push(hl.exp());
            s.e2.push((hl / 2.0).exp());
            let (mut q, mut f1, mut f2, mut f3) = (0.0, 0.0, 0.0, 0.0);
            for &r in &roots {
                let z = r + hl;
                let ez = z.exp();
                let z3 = z * z * z;
                q += (((z / 2.0).exp() - 1.0) / z).re;
                f1 += ((-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3).re;
                f2 += ((2.0 + z + ez * (z - 2.0)) / z3).re;
                f3 += ((-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3).re;
            }
            s.q.push(dt * q / m);
            s.f1.push(dt * f1 / m);
            s.f2.push(dt * f2 / m);
            s.f3.push(dt * f3 / m);
        }
        s
    }

    fn to_spectral(&mut self, u: &[f64]) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut v);
        v
    }

    fn to_physical(&mut self, v: &[Complex64], out: &mut [f64]) {
        self.scratch.copy_from_slice(v);
        self.inverse.process(&mut self.scratch);
        let scale = 1.0 / self.nx as f64;
        for (o, c) in out.iter_mut().zip(&self.scratch) {
            *o = c.re * scale;
        }
    }

    /// Fourier transform of `ρ u (1 − u)`.
    fn nonlinear(&mut self, v: &[Complex64], buf: &mut [f64]) -> Vec<Complex64> {
        self.to_physical(v, buf);
        for u in buf.iter_mut() {
            *u = GROWTH * *u * (1.0 - *u);
        }
        self.to_spectral(buf)
    }

    fn step(&mut self, v: &mut [Complex64], buf: &mut [f64]) {
        let n = self.nx;
        let nv = self.nonlinear(v, buf);
        let a: Vec<Complex64> = (0..n).map(|j| v[j] * self.e2[j] + nv[j] * self.q[j]).collect();
        let na = self.nonlinear(&a, buf);
        let b: Vec<Complex64> = (0..n).map(|j| v[j] * self.e2[j] + na[j] * self.q[j]).collect();
        let nb = self.nonlinear(&b, buf);
        let c: Vec<Complex64> = (0..n)
            .map(|j| a[j] * self.e2[j] + (nb[j] * 2.0 - nv[j]) * self.q[j])
            .collect();
        let nc = self.nonlinear(&c, buf);
        for j in 0..n {
            v[j] = v[j] * self.e[j] + nv[j] * self.f1[j] + (na[j] + nb[j]) * (2.0 * self.f2[j]) + nc[j] * self.f3[j];
        }
    }
}

/// Solution slices on the periodic nodes, without the repeated end node.
fn integrate(spec: &ReferenceSpec) -> Vec<Vec<f64>> {
    let nx = spec.nx;
    let mut solver = Solver::new(nx, spec.dt(), spec.contour_points);
    let h = std::f64::consts::TAU / nx as f64;
    let u0: Vec<f64> = (0..nx)
        .map(|i| ReactionDiffusion::<f64>::initial_profile(i as f64 * h))
        .collect();
    let mut v = solver.to_spectral(&u0);
    let mut buf = vec![0.0; nx];
    let mut slices = vec![u0];
    for step in 1..=spec.steps {
        solver.step(&mut v, &mut buf);
        if step % spec.output_every == 0 {
            let mut u = vec![0.0; nx];
            solver.to_physical(&v, &mut u);
            slices.push(u);
        }
    }
    slices
}

fn relative_change(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

impl ReferenceGrid {
    /// Integrates without the self-convergence checks.
    pub fn solve(spec: &ReferenceSpec) -> Result<Self> {
        spec.validate()?;
        let slices = integrate(spec);
        Ok(Self::from_slices(spec.clone(), &slices, None))
    }

    fn from_slices(spec: ReferenceSpec, slices: &[Vec<f64>], check: Option<SelfCheck>) -> Self {
        let nx = spec.nx;
        let h = std::f64::consts::TAU / nx as f64;
        let mut x: Vec<f64> = (0..nx).map(|i| i as f64 * h).collect();
        x.push(std::f64::consts::TAU);
        let dt_out = spec.dt() * spec.output_every as f64;
        let t: Vec<f64> = (0..slices.len()).map(|k| k as f64 * dt_out).collect();
        let mut values = Vec::with_capacity(slices.len() * (nx + 1));
        for s in slices {
            values.extend_from_slice(s);
            values.push(s[0]);
        }
        let mut grid = Self {
            spec,
            x,
            t,
            values,
            check,
            coefficients: Vec::new(),
        };
        grid.build_coefficients();
        grid
    }

    fn build_coefficients(&mut self) {
        let nx = self.spec.nx;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(nx);
        self.coefficients = (0..self.t.len())
            .map(|k| {
                let mut v: Vec<Complex64> = self.slice(k)[..nx].iter().map(|&u| Complex64::new(u, 0.0)).collect();
                fft.process(&mut v);
                v
            })
            .collect();
    }

    pub fn nx(&self) -> usize {
        self.spec.nx
    }

    /// Values of slice `k` on all `nx + 1` nodes.
    pub fn slice(&self, k: usize) -> &[f64] {
        let w = self.x.len();
        &self.values[k * w..(k + 1) * w]
    }

    /// Trigonometric interpolant of slice `k` at `x`.
    fn slice_at(&self, k: usize, x: f64) -> f64 {
        let n = self.spec.nx;
        let c = &self.coefficients[k];
        let mut sum = c[0].re;
        for j in 1..n / 2 {
            sum += 2.0 * (c[j] * Complex64::from_polar(1.0, j as f64 * x)).re;
        }
        sum += c[n / 2].re * (n as f64 / 2.0 * x).cos();
        sum / n as f64
    }

    /// Spectral in x, cubic Lagrange in t between stored slices.
    pub fn value_at(&self, x: f64, t: f64) -> f64 {
        let nt = self.t.len();
        let dt = self.t[1] - self.t[0];
        let pos = (t - self.t[0]) / dt;
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 && nearest >= 0.0 && (nearest as usize) < nt {
            return self.slice_at(nearest as usize, x);
        }
        let base = (pos.floor() as isize - 1).clamp(0, nt as isize - 4) as usize;
        let mut sum = 0.0;
        for i in 0..4 {
            let ti = self.t[base + i];
            let mut w = 1.0;
            for j in 0..4 {
                if j != i {
                    let tj = self.t[base + j];
                    w *= (t - tj) / (ti - tj);
                }
            }
            sum += w * self.slice_at(base + i, x);
        }
        sum
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            dtype: "f64-le".into(),
            layout: "x[nx+1], t[nt], values[nt][nx+1]".into(),
            nx: self.spec.nx,
            nt: self.t.len(),
            scheme: SCHEME.into(),
            nu: DIFFUSION,
            rho: GROWTH,
            spec: self.spec.clone(),
            check: self.check.clone(),
        };
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
            serde_json::to_writer(&mut *w, &header)?;
            w.write_all(b"\n")?;
            for v in self.x.iter().chain(&self.t).chain(&self.values) {
                w.write_all(&v.to_le_bytes())?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing header line"))?;
        let header: Header = serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(&format!("bad header: {e}")))?;
        if header.format != FORMAT || header.version != VERSION {
            return Err(bad("unsupported format or version"));
        }
        let w = header.nx + 1;
        let count = w + header.nt + header.nt * w;
        let body = &bytes[nl + 1..];
        if body.len() != count * 8 {
            return Err(bad(&format!("expected {} data bytes, found {}", count * 8, body.len())));
        }
        let data: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite values"));
        }
        let mut grid = Self {
            spec: header.spec,
            x: data[..w].to_vec(),
            t: data[w..w + header.nt].to_vec(),
            values: data[w + header.nt..].to_vec(),
            check: header.check,
            coefficients: Vec::new(),
        };
        grid.build_coefficients();
        Ok(grid)
    }
}

/// Solves and verifies convergence against a run with doubled space
/// resolution and one with halved time step, and checks that all values lie
/// in (0, 1].
pub fn rd_reference(spec: &ReferenceSpec) -> Result<ReferenceGrid> {
    spec.validate()?;
    let base = integrate(spec);

    let fine_space = integrate(&ReferenceSpec {
        nx: spec.nx * 2,
        ..spec.clone()
    });
    let coarse: Vec<f64> = base.iter().flatten().copied().collect();
    let restricted: Vec<f64> = fine_space.iter().flat_map(|s| s.iter().step_by(2).copied()).collect();
    let space_change = relative_change(&coarse, &restricted);

    let fine_time = integrate(&ReferenceSpec {
        steps: spec.steps * 2,
        output_every: spec.output_every * 2,
        ..spec.clone()
    });
    let refined: Vec<f64> = fine_time.iter().flatten().copied().collect();
    let time_change = relative_change(&coarse, &refined);

    let (min_value, max_value) = coarse.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let check = SelfCheck {
        space_change,
        time_change,
        min_value,
        max_value,
    };
    log::info!("reference self-check: {check:?}");
    let mut failures = Vec::new();
    if !(space_change < SPACE_TOLERANCE) {
        failures.push(format!("space refinement changed the solution by {space_change:e}"));
    }
    if !(time_change < TIME_TOLERANCE) {
        failures.push(format!("time refinement changed the solution by {time_change:e}"));
    }
    if !(min_value > 0.0 && max_value <= 1.0) {
        failures.push(format!("values left (0, 1]: min {min_value:e}, max {max_value}"));
    }
    if !failures.is_empty() {
        return Err(Error::ReferenceNotConverged(failures.join("; ")));
    }
    Ok(ReferenceGrid::from_slices(spec.clone(), &base, Some(check)))
}

/// Loads the grid for `spec` from `dir`, or builds, checks and stores it.
pub fn cached_reference(dir: &Path, spec: &ReferenceSpec) -> Result<(ReferenceGrid, PathBuf)> {
    let path = dir.join(spec.file_name());
    if path.exists() {
        let grid = ReferenceGrid::load(&path)?;
        if grid.spec == *spec && grid.check.is_some() {
            return Ok((grid, path));
        }
        log::warn!(
            "{} does not match the requested solver settings; rebuilding",
            path.display()
        );
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let grid = rd_reference(spec)?;
    let tmp = path.with_extension("bin.partial");
    grid.save(&tmp)?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok((grid, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_are_symmetric() {
        let ks: Vec<f64> = (0..8).map(|j| wavenumber(j, 8)).collect();
        assert_eq!(ks, [0.0, 1.0, 2.0, 3.0, 4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn zero_mode_coefficients_match_plain_rk_weights() {
        let dt = 1e-3;
        let s = Solver::new(256, dt, 32);
        assert!((s.q[0] - dt / 2.0).abs() < 1e-15);
        assert!((s.f1[0] - dt / 6.0).abs() < 1e-15);
        assert!((s.f2[0] - dt / 6.0).abs() < 1e-15);
        assert!((s.f3[0] - dt / 6.0).abs() < 1e-15);
    }

    #[test]
    fn spatially_uniform_state_follows_the_logistic_ode() {
        // with u(x, 0) ≡ c the solution is c e^{ρt} / (1 − c + c e^{ρt})
        let spec = ReferenceSpec::default();
        let mut solver = Solver::new(spec.nx, spec.dt(), spec.contour_points);
        let c = 0.2;
        let mut v = solver.to_spectral(&vec![c; spec.nx]);
        let mut buf = vec![0.0; spec.nx];
        for _ in 0..spec.steps {
            solver.step(&mut v, &mut buf);
        }
        let mut u = vec![0.0; spec.nx];
        solver.to_physical(&v, &mut u);
        let g = (GROWTH * T_FINAL).exp();
        let exact = c * g / (1.0 - c + c * g);
        assert!(u.iter().all(|&x| (x - exact).abs() < 1e-10));
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let grid = ReferenceGrid::solve(&ReferenceSpec::default()).unwrap();
        for k in [0, 37, 100] {
            for i in [0, 5, 128, 255, 256] {
                let t = grid.t[k];
                let v = grid.value_at(grid.x[i], t);
                assert!((v - grid.slice(k)[i]).abs() < 1e-12, "k={k} i={i}");
            }
        }
        let mid = grid.value_at(1.0, 0.505);
        let lo = grid.value_at(1.0, 0.50);
        let hi = grid.value_at(1.0, 0.51);
        assert!(mid > lo.min(hi) - 1e-9 && mid < lo.max(hi) + 1e-9);
    }

    #[test]
    fn cache_key_depends_on_settings() {
        let a = ReferenceSpec::default();
        let b = ReferenceSpec { nx: 512, ..a.clone() };
        assert_eq!(a.cache_key().len(), 16);
        assert_ne!(a.cache_key(), b.cache_key());
        assert_eq!(a.file_name(), format!("reaction_{}.bin", a.cache_key()));
    }

    #[test]
    fn rejects_low_resolution() {
        let spec = ReferenceSpec {
            nx: 128,
            ..Default::default()
        };
        assert!(matches!(ReferenceGrid::solve(&spec), Err(Error::Config(_))));
    }
}
