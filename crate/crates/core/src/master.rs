//! The fixed-point system for the limit singular-value law of `Y - z`.
//!
//! For `t > 0` the pair `(h, d)` solves
//!
//! ```text
//! -t h + conj(z) d = u(h, d) - gamma
//!  z h +  t d      = v(h, d)
//! ```
//!
//! with `u = (h^2 + |d|^2) I(h, d) + d J(h, d)` and `v = h conj(J(h, d))`, where `I`
//! and `J` are the angular integrals evaluated in closed form below. The system is
//! covariant under `z -> z e^{i phi}`, `d -> d e^{i phi}`, so the solver works
//! on real `z = |z|` and real `d` and rotates back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsd::LsdModel;
use crate::matrix::c64;

/// `(a^2 + |u|^2 + 1)^2 - 4|u|^2`, factored to avoid cancellation near `|u| = 1`.
fn discriminant(a: f64, m: f64) -> f64 {
    let a2 = a * a;
    (a2 + (m - 1.0) * (m - 1.0)) * (a2 + (m + 1.0) * (m + 1.0))
}

fn check_nondegenerate(a: f64, u: c64) -> Result<()> {
    if !(a.is_finite() && u.re.is_finite() && u.im.is_finite()) {
        return Err(Error::invalid("(a, u)", format!("({a}, {u})"), "must be finite"));
    }
    if discriminant(a, u.norm()) <= 0.0 {
        return Err(Error::invalid(
            "(a, u)",
            format!("({a}, {u})"),
            "degenerate: a = 0 and |u| = 1",
        ));
    }
    Ok(())
}

/// `(1/2pi) int dtheta / (a^2 + |1 + u e^{i theta}|^2)`.
pub fn integral_i(a: f64, u: c64) -> Result<f64> {
    check_nondegenerate(a, u)?;
    Ok(discriminant(a, u.norm()).sqrt().recip())
}

/// `(1/2pi) int e^{i theta} dtheta / (a^2 + |1 + u e^{i theta}|^2)`.
pub fn integral_j(a: f64, u: c64) -> Result<c64> {
    check_nondegenerate(a, u)?;
    let m = u.norm();
    if m == 0.0 {
        return Ok(c64::new(0.0, 0.0));
    }
    // Rotating theta by arg(u) gives J(a, u) = conj(u)/|u| * J(a, |u|).
    Ok(u.conj() * (real_j(a, m) / m))
}

/// `J(a, m)` for real `m`, written without the `1/(2u)` prefactor:
/// `(1/2u)(1 - A/S) = -2u / (S (S + A))` with `A = a^2 + u^2 + 1`, `S = sqrt(disc)`.
fn real_j(a: f64, m: f64) -> f64 {
    let big_a = a * a + m * m + 1.0;
    let s = discriminant(a, m.abs()).sqrt();
    -2.0 * m / (s * (s + big_a))
}

fn real_i(a: f64, m: f64) -> f64 {
    discriminant(a, m.abs()).sqrt().recip()
}

/// `(u(h, d), v(h, d))`.
pub fn uv_rhs(h: f64, d: c64) -> Result<(c64, c64)> {
    let i = integral_i(h, d)?;
    let j = integral_j(h, d)?;
    let u = (h * h + d.norm_sqr()) * i + d * j;
    Ok((u, j.conj() * h))
}

fn real_uv(h: f64, d: f64) -> (f64, f64) {
    let i = real_i(h, d);
    let j = real_j(h, d);
    ((h * h + d * d) * i + d * j, h * j)
}

/// Residuals `(|-t h + conj(z) d - u + gamma|, |z h + t d - v|)` of the complex system.
pub fn residuals(z: c64, t: f64, gamma: f64, h: f64, d: c64) -> Result<(f64, f64)> {
    let (u, v) = uv_rhs(h, d)?;
    let res_u = (-t * h + z.conj() * d - u + gamma).norm();
    let res_v = (z * h + d * t - v).norm();
    Ok((res_u, res_v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual tolerance of both equations.
    pub tol: f64,
    /// Iteration cap per continuation step.
    pub max_iter: usize,
    /// Geometric continuation factor `t_{k+1} = ratio * t_k`.
    pub continuation_ratio: f64,
    /// Fixed-point iterations tried at each step before Newton polishing.
    pub fixed_point_budget: usize,
    /// Polish each step with Newton iterations when the fixed-point map is slow.
    pub newton: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            continuation_ratio: 0.9,
            fixed_point_budget: 60,
            newton: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasterSolution {
    pub z: c64,
    pub t: f64,
    pub h: f64,
    pub d: c64,
    pub res_u: f64,
    pub res_v: f64,
    /// Total iterations over the whole continuation path.
    pub iterations: usize,
}

impl MasterSolution {
    pub fn max_residual(&self) -> f64 {
        self.res_u.max(self.res_v)
    }
}

/// One real, rotated instance of the system: `z = rho >= 0`, `d` real.
struct RealSystem {
    rho: f64,
    t: f64,
    gamma: f64,
}

impl RealSystem {
    fn residual(&self, x: [f64; 2]) -> [f64; 2] {
        let (u, v) = real_uv(x[0], x[1]);
        [
            -self.t * x[0] + self.rho * x[1] - u + self.gamma,
            self.rho * x[0] + self.t * x[1] - v,
        ]
    }

    fn norm(&self, x: [f64; 2]) -> f64 {
        let r = self.residual(x);
        r[0].abs().max(r[1].abs())
    }

    /// The map whose fixed points solve the system.
    fn map(&self, x: [f64; 2]) -> [f64; 2] {
        let (u, v) = real_uv(x[0], x[1]);
        let den = self.t * self.t + self.rho * self.rho;
        let (a, b) = (u - self.gamma, v);
        [(-self.t * a + self.rho * b) / den, (self.rho * a + self.t * b) / den]
    }

    fn newton_step(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let r = self.residual(x);
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let step = 1e-6 * x[k].abs().max(1e-3);
            let (mut hi, mut lo) = (x, x);
            hi[k] += step;
            lo[k] -= step;
            if lo[0] <= 0.0 {
                let f_hi = self.residual(hi);
                for row in 0..2 {
                    jac[row][k] = (f_hi[row] - r[row]) / step;
                }
                continue;
            }
            let (f_hi, f_lo) = (self.residual(hi), self.residual(lo));
            for row in 0..2 {
                jac[row][k] = (f_hi[row] - f_lo[row]) / (2.0 * step);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            return None;
        }
        Some([
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ])
    }
}

fn start_t(z: c64, gamma: f64) -> f64 {
    10f64.max(4.0 * gamma).max(4.0 * z.norm())
}

fn validate(t: f64, gamma: f64, opts: &SolverOptions) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", t, "must be positive and finite"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", gamma, "must be positive and finite"));
    }
    if !(opts.continuation_ratio > 0.0 && opts.continuation_ratio < 1.0) {
        return Err(Error::invalid("continuation_ratio", opts.continuation_ratio, "must lie in (0, 1)"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", opts.tol, "must be positive"));
    }
    Ok(())
}

/// Damped fixed-point iteration, with Newton polishing when enabled.
/// Returns the new iterate and the iteration count, or the failing trajectory.
fn solve_step(
    sys: &RealSystem,
    mut x: [f64; 2],
    opts: &SolverOptions,
) -> std::result::Result<([f64; 2], usize), (f64, usize, Vec<(f64, f64)>)> {
    // Aim below the reported tolerance so the complex re-evaluation passes too.
    let target = opts.tol * 1e-2;
    let mut resid = sys.norm(x);
    let mut iters = 0;
    let mut trajectory = vec![(x[0], x[1])];
    let mut damping = 1.0;
    let fixed_budget = if opts.newton { opts.fixed_point_budget } else { opts.max_iter };

    while resid > target && iters < fixed_budget.min(opts.max_iter) {
        let fx = sys.map(x);
        let next = [
            (1.0 - damping) * x[0] + damping * fx[0],
            (1.0 - damping) * x[1] + damping * fx[1],
        ];
        let next_resid = if next[0] > 0.0 { sys.norm(next) } else { f64::INFINITY };
        iters += 1;
        if next_resid >= resid && damping > 1.0 / 1024.0 {
            damping *= 0.5;
            continue;
        }
        x = next;
        resid = next_resid;
        if trajectory.len() < 64 {
            trajectory.push((x[0], x[1]));
        }
    }

    while opts.newton && resid > target && iters < opts.max_iter {
        let Some(dx) = sys.newton_step(x) else { break };
        iters += 1;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-8 {
            let cand = [x[0] + lambda * dx[0], x[1] + lambda * dx[1]];
            if cand[0] > 0.0 {
                let r = sys.norm(cand);
                if r < resid {
                    x = cand;
                    resid = r;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if trajectory.len() < 64 {
            trajectory.push((x[0], x[1]));
        }
        if !accepted {
            break;
        }
    }

    if resid <= opts.tol {
        Ok((x, iters))
    } else {
        Err((resid, iters, trajectory))
    }
}

/// Solutions at each `t` of `ts` (any order), sharing one continuation path
/// from the large-`t` contraction regime down to `min(ts)`.
pub fn solve_master_path(
    z: c64,
    ts: &[f64],
    gamma: f64,
    opts: &SolverOptions,
) -> Result<Vec<MasterSolution>> {
    for &t in ts {
        validate(t, gamma, opts)?;
    }
    if ts.is_empty() {
        return Ok(Vec::new());
    }
    let rho = z.norm();
    let phase = if rho > 0.0 { z / rho } else { c64::new(1.0, 0.0) };

    let t0 = start_t(z, gamma);
    let mut grid: Vec<f64> = Vec::new();
    let t_min = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let mut t = t0.max(t_max);
    while t > t_min {
        grid.push(t);
        t *= opts.continuation_ratio;
    }
    grid.extend(ts.iter().copied());
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();

    let mut x = [gamma / grid[0], 0.0];
    let mut total = 0;
    let mut solved: Vec<(f64, [f64; 2])> = Vec::with_capacity(grid.len());
    for &t in &grid {
        let sys = RealSystem { rho, t, gamma };
        match solve_step(&sys, x, opts) {
            Ok((next, iters)) => {
                x = next;
                total += iters;
                solved.push((t, x));
            }
            Err((residual, iters, trajectory)) => {
                return Err(Error::NoConvergence {
                    z,
                    t,
                    residual,
                    iterations: total + iters,
                    trajectory,
                });
            }
        }
    }

    ts.iter()
        .map(|&t| {
            let (_, x) = solved
                .iter()
                .find(|(s, _)| *s == t)
                .expect("every requested t is on the grid");
            let d = phase * x[1];
            let (res_u, res_v) = residuals(z, t, gamma, x[0], d)?;
            Ok(MasterSolution {
                z,
                t,
                h: x[0],
                d,
                res_u,
                res_v,
                iterations: total,
            })
        })
        .collect()
}

pub fn solve_master(z: c64, t: f64, gamma: f64, opts: &SolverOptions) -> Result<MasterSolution> {
    Ok(solve_master_path(z, &[t], gamma, opts)?.remove(0))
}

/// `gamma^{-1} p(z, it) = i h(z, t) / gamma`.
pub fn stieltjes_limit(z: c64, t: f64, gamma: f64) -> Result<c64> {
    let sol = solve_master(z, t, gamma, &SolverOptions::default())?;
    Ok(c64::new(0.0, sol.h / gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Bulk,
    Outer,
    InnerHole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitB {
    pub z: c64,
    pub b: c64,
    pub regime: Regime,
}

/// Boundary points `|z|^2 in {(gamma-1)^3/gamma, gamma(gamma+1)}` (relative
/// tolerance 1e-12) are assigned to the bulk branch.
pub fn classify(z: c64, gamma: f64) -> Regime {
    let r2 = z.norm_sqr();
    let outer = gamma * (gamma + 1.0);
    let inner = if gamma > 1.0 { (gamma - 1.0).powi(3) / gamma } else { 0.0 };
    if gamma > 1.0 && r2 < inner * (1.0 - 1e-12) {
        Regime::InnerHole
    } else if r2 > outer * (1.0 + 1e-12) {
        Regime::Outer
    } else {
        Regime::Bulk
    }
}

/// The pointwise limit of `d(z, it)` as `t -> 0`.
pub fn limit_b(z: c64, gamma: f64) -> Result<LimitB> {
    if z == c64::new(0.0, 0.0) {
        return Err(Error::UndefinedAtOrigin);
    }
    let model = LsdModel::new(gamma)?;
    let regime = classify(z, gamma);
    let numerator = match regime {
        Regime::InnerHole => gamma - 1.0,
        Regime::Outer => gamma,
        Regime::Bulk => {
            let (lo, hi) = model.t_range();
            model.g_inverse(z.norm_sqr().clamp(lo, hi))?
        }
    };
    Ok(LimitB {
        z,
        b: -numerator / z.conj(),
        regime,
    })
}
