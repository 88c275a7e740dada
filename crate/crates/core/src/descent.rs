//! Search for `∂̄_A`-holomorphic line subbundles by energy descent.
//!
//! The energy of a projector field is the collocation form of `‖π⊥∂̄_Aπ‖²`,
//!
//! ```text
//! E(π) = Σ w ‖π⊥ D‖²,   D = e^{−λ}∂̄π + [A₋₁, π],
//! ```
//!
//! with `w` the Sasaki weights. Its gradient for the pairing `Σ w Re tr(G*δπ)`
//! is `G = 2(−RD* − w⁻¹∂(w e^{−λ}R) + [A₋₁*, R])` with `R = π⊥D`. Steps use
//! the tangent part of `G`, smoothed by `(1 + c|k|²)⁻¹`, followed by the
//! pointwise retraction onto rank-one projectors and Armijo backtracking.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{complement, Mat2};
use crate::backlund::{holomorphic_line_residual, LineSeed, Provenance};
use crate::error::{Error, Result};
use crate::operators::QuadratureWeight;
use crate::spectral::{map_entries, Derivative};
use crate::thetafield::{Connection, Metric};

/// Residual below which a line counts as found.
pub const SUCCESS_RESIDUAL: f64 = 1e-5;

pub const DEFAULT_ITERATIONS: usize = 2000;

#[derive(Debug, Clone)]
pub struct DescentOptions {
    pub attempts: usize,
    pub seed: u64,
    /// Iteration budget per attempt.
    pub iterations: usize,
    pub target: f64,
    /// Sobolev smoothing constant `c` of the preconditioner.
    pub smoothing: f64,
    /// Total amplitude of the perturbation of even-numbered starts (below 1
    /// keeps them in the degree-zero sector).
    pub perturbation: f64,
    /// Total amplitude of odd-numbered starts, which may lie in any sector.
    pub wide_perturbation: f64,
}

impl DescentOptions {
    pub fn new(attempts: usize, seed: u64) -> Self {
        DescentOptions {
            attempts,
            seed,
            iterations: DEFAULT_ITERATIONS,
            target: SUCCESS_RESIDUAL,
            smoothing: 0.05,
            perturbation: 0.5,
            wide_perturbation: 6.0,
        }
    }
}

/// The energy `E` and its gradient for a fixed connection.
pub struct LineEnergy {
    metric: Arc<Metric>,
    a_minus: Vec<Mat2>,
    weights: Vec<f64>,
    inv_conformal: Vec<f64>,
}

impl LineEnergy {
    pub fn new(a: &Connection) -> Self {
        let metric = a.metric().clone();
        let q = QuadratureWeight::new(&metric);
        LineEnergy {
            a_minus: a.minus().to_vec(),
            weights: q.weights().iter().map(|w| w * q.theta_factor()).collect(),
            inv_conformal: metric.lambda().iter().map(|l| (-l).exp()).collect(),
            metric,
        }
    }

    fn dbar(&self, pi: &[Mat2]) -> Vec<Mat2> {
        let sp = &self.metric.spectral;
        map_entries(pi, |e| sp.derivative(e, Derivative::Dbar))
            .into_iter()
            .zip(&self.inv_conformal)
            .zip(pi.iter().zip(&self.a_minus))
            .map(|((d, s), (p, a))| d.scale_re(*s) + a.commutator(p))
            .collect()
    }

    fn residual(&self, pi: &[Mat2]) -> (Vec<Mat2>, Vec<Mat2>) {
        let d = self.dbar(pi);
        let r = pi.iter().zip(&d).map(|(p, d)| complement(p) * *d).collect();
        (d, r)
    }

    pub fn energy(&self, pi: &[Mat2]) -> f64 {
        let (_, r) = self.residual(pi);
        r.iter().zip(&self.weights).map(|(r, w)| w * r.frob_sq()).sum()
    }

    /// `(E, G)` with `G` the gradient for the weighted pairing.
    pub fn energy_and_gradient(&self, pi: &[Mat2]) -> (f64, Vec<Mat2>) {
        let (d, r) = self.residual(pi);
        let e = r.iter().zip(&self.weights).map(|(r, w)| w * r.frob_sq()).sum();
        let weighted: Vec<Mat2> = r
            .iter()
            .zip(self.weights.iter().zip(&self.inv_conformal))
            .map(|(r, (w, s))| r.scale_re(w * s))
            .collect();
        let sp = &self.metric.spectral;
        let transport = map_entries(&weighted, |e| sp.derivative(e, Derivative::D));
        let g = (0..pi.len())
            .map(|k| {
                let local = -(r[k] * d[k].adjoint()) + self.a_minus[k].adjoint().commutator(&r[k]);
                (local - transport[k].scale_re(1.0 / self.weights[k])) * 2.0
            })
            .collect();
        (e, g)
    }

    /// `Σ w Re tr(G* H)`.
    pub fn pairing(&self, g: &[Mat2], h: &[Mat2]) -> f64 {
        g.iter()
            .zip(h)
            .zip(&self.weights)
            .map(|((g, h), w)| w * (g.adjoint() * *h).trace().re)
            .sum()
    }
}

fn tangent(pi: &[Mat2], g: &[Mat2]) -> Vec<Mat2> {
    pi.iter()
        .zip(g)
        .map(|(p, g)| {
            let h = g.hermitian_part();
            let q = complement(p);
            *p * h * q + q * h * *p
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct AttemptRecord {
    pub attempt: usize,
    /// `√E` after each accepted iteration, starting with the initial value.
    pub curve: Vec<f64>,
    /// Dealiased `π⊥∂̄_Aπ` residual of the final iterate.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct DescentReport {
    pub attempts: Vec<AttemptRecord>,
    pub best_attempt: usize,
    pub best_residual: f64,
    pub best: Option<LineSeed>,
    pub success: bool,
}

impl DescentReport {
    /// Descent curve of the best attempt as CSV with columns `iteration, energy`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "energy"])?;
        if let Some(rec) = self.attempts.iter().find(|r| r.attempt == self.best_attempt) {
            for (k, e) in rec.curve.iter().enumerate() {
                w.write_record([k.to_string(), format!("{:.17e}", e * e)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// A random line `v₀ + Σ c_k e^{ik·x}` over wavenumbers `|kx|, |ky| ≤ 2`.
///
/// With `Σ|c_k| < |v₀| = 1` the line never reaches `v₀⊥`, so the start lies in
/// the degree-zero sector; larger amplitudes sample other sectors.
fn random_start(metric: &Metric, rng: &mut ChaCha8Rng, amplitude: f64) -> Vec<Mat2> {
    let mut gauss = || Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
    let mut v0 = [gauss(), gauss()];
    let n0 = (v0[0].norm_sqr() + v0[1].norm_sqr()).sqrt().max(1e-3);
    v0 = [v0[0] / n0, v0[1] / n0];
    let mut terms = Vec::new();
    for kx in -2i32..=2 {
        for ky in -2i32..=2 {
            if kx != 0 || ky != 0 {
                terms.push((kx, ky, [gauss(), gauss()]));
            }
        }
    }
    let total: f64 = terms.iter().map(|(_, _, c)| (c[0].norm_sqr() + c[1].norm_sqr()).sqrt()).sum();
    let s = amplitude / total;
    let g = *metric.grid();
    g.points()
        .map(|(x, y)| {
            let mut v = v0;
            for (kx, ky, c) in &terms {
                let ph = Complex64::from_polar(
                    s,
                    2.0 * std::f64::consts::PI * (*kx as f64 * x / g.lx + *ky as f64 * y / g.ly),
                );
                v[0] += c[0] * ph;
                v[1] += c[1] * ph;
            }
            if v[0].norm() + v[1].norm() == 0.0 {
                v = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
            }
            Mat2::line_projector(v)
        })
        .collect()
}

fn run_attempt(
    energy: &LineEnergy,
    a: &Connection,
    opts: &DescentOptions,
    attempt: usize,
) -> Result<(AttemptRecord, LineSeed)> {
    let metric = energy.metric.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(attempt as u64));
    let amplitude = if attempt % 2 == 0 { opts.perturbation } else { opts.wide_perturbation };
    let mut pi = random_start(&metric, &mut rng, amplitude);
    let stop = (0.01 * opts.target).powi(2);
    let (mut e, mut g) = energy.energy_and_gradient(&pi);
    let mut curve = vec![e.sqrt()];
    let mut step = 1.0;
    let sp = &metric.spectral;
    let c = opts.smoothing;
    let precondition = |t: &[Mat2]| {
        map_entries(t, |x| sp.filter(x, |kx, ky| 1.0 / (1.0 + c * (kx * kx + ky * ky))))
    };
    let mut prev: Option<(Vec<Mat2>, Vec<Mat2>, f64)> = None;
    for _ in 0..opts.iterations {
        if e <= stop {
            break;
        }
        let tg = tangent(&pi, &g);
        let z = tangent(&pi, &precondition(&tg));
        let gz = energy.pairing(&tg, &z);
        // Polak-Ribiere+ with the previous direction moved by tangent projection
        let mut dir: Vec<Mat2> = z.iter().map(|m| -*m).collect();
        if let Some((old_tg, old_dir, old_gz)) = &prev {
            let diff: Vec<Mat2> = tg.iter().zip(&tangent(&pi, old_tg)).map(|(a, b)| *a - *b).collect();
            let beta = (energy.pairing(&z, &diff) / old_gz).max(0.0);
            if beta > 0.0 {
                let moved = tangent(&pi, old_dir);
                dir = dir.iter().zip(&moved).map(|(d, o)| *d + *o * beta).collect();
            }
        }
        let mut slope = energy.pairing(&g, &dir);
        if !(slope < 0.0) {
            dir = z.iter().map(|m| -*m).collect();
            slope = -gz;
        }
        if !(slope < 0.0) {
            break;
        }
        let mut accepted = None;
        let mut s = step;
        for _ in 0..40 {
            let trial: Vec<Mat2> = pi
                .iter()
                .zip(&dir)
                .map(|(p, d)| (*p + *d * s).nearest_line_projector())
                .collect();
            let et = energy.energy(&trial);
            if et <= e + 1e-4 * s * slope {
                accepted = Some(trial);
                break;
            }
            s *= 0.5;
        }
        let Some(next) = accepted else { break };
        step = (2.0 * s).min(1e3);
        pi = next;
        prev = Some((tg, dir, gz));
        (e, g) = energy.energy_and_gradient(&pi);
        curve.push(e.sqrt());
    }
    let seed = LineSeed::new(metric, pi, Provenance::Solver)?;
    let residual = holomorphic_line_residual(a, &seed)
        .map(|r| r.r3)
        .or_else(|err| match err {
            Error::EquivalenceViolated { r3, .. } => Ok(r3),
            other => Err(other),
        })?;
    Ok((
        AttemptRecord {
            attempt,
            curve,
            residual,
        },
        seed,
    ))
}

/// Multi-start descent with default options.
pub fn find_holomorphic_line(a: &Connection, attempts: usize, seed: u64) -> Result<(LineSeed, DescentReport)> {
    find_holomorphic_line_with(a, &DescentOptions::new(attempts, seed))
}

/// Runs independent attempts from seeded random band-limited lines and keeps
/// the one with the smallest residual; fails with [`Error::NoLineFound`] if no
/// attempt reaches `opts.target`.
pub fn find_holomorphic_line_with(a: &Connection, opts: &DescentOptions) -> Result<(LineSeed, DescentReport)> {
    if opts.attempts < 1 {
        return Err(Error::InvalidArgument("at least one descent attempt is required".into()));
    }
    let energy = LineEnergy::new(a);
    let runs = (0..opts.attempts)
        .into_par_iter()
        .map(|k| run_attempt(&energy, a, opts, k))
        .collect::<Result<Vec<_>>>()?;
    let (best_index, _) = runs
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .0.residual.total_cmp(&y.1 .0.residual))
        .expect("at least one attempt");
    let best_residual = runs[best_index].0.residual;
    let best_seed = runs[best_index].1.clone();
    let success = best_residual <= opts.target;
    let report = DescentReport {
        attempts: runs.into_iter().map(|(r, _)| r).collect(),
        best_attempt: best_index,
        best_residual,
        best: Some(best_seed.clone()),
        success,
    };
    if success {
        Ok((best_seed, report))
    } else {
        Err(Error::NoLineFound {
            best_residual,
            report: Box::new(report),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thetafield::TorusGrid;

    fn flat(n: usize) -> Arc<Metric> {
        Metric::flat(TorusGrid::square(n).unwrap())
    }

    fn hermitian_direction(metric: &Metric, rng: &mut ChaCha8Rng) -> Vec<Mat2> {
        let mut c = || Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let (a, b, d) = (c(), c(), c());
        metric
            .grid()
            .points()
            .map(|(x, y)| {
                let s = (2.0 * std::f64::consts::PI * (x + 2.0 * y)).sin();
                Mat2([a * s, b, b * (1.0 + s), d * s]).hermitian_part()
            })
            .collect()
    }

    fn check_gradient(a: &Connection) {
        let metric = a.metric().clone();
        let energy = LineEnergy::new(a);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pi = random_start(&metric, &mut rng, 0.3);
        let (_, g) = energy.energy_and_gradient(&pi);
        for _ in 0..3 {
            let h = hermitian_direction(&metric, &mut rng);
            let eps = 1e-5;
            let shifted = |s: f64| -> Vec<Mat2> { pi.iter().zip(&h).map(|(p, d)| *p + *d * s).collect() };
            let fd = (energy.energy(&shifted(eps)) - energy.energy(&shifted(-eps))) / (2.0 * eps);
            let an = energy.pairing(&g, &h);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-12), "fd {fd} analytic {an}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = flat(16);
        check_gradient(&Connection::trivial(m.clone()));
        let p = Mat2([
            Complex64::new(0.2, 0.1),
            Complex64::new(-0.3, 0.4),
            Complex64::new(0.1, 0.0),
            Complex64::new(-0.2, -0.1),
        ]);
        check_gradient(&Connection::constant(m, p).unwrap());
        let g = TorusGrid::square(16).unwrap();
        let curved = Metric::with_lambda(g, |x, y| 0.3 * (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).cos())
            .unwrap();
        check_gradient(&Connection::constant(curved, p).unwrap());
    }

    #[test]
    fn finds_a_line_for_the_trivial_connection() {
        let m = flat(16);
        let (seed, report) = find_holomorphic_line(&Connection::trivial(m), 2, 9).unwrap();
        assert!(report.success && report.best_residual <= 1e-6, "{}", report.best_residual);
        assert_eq!(seed.provenance(), Provenance::Solver);
        let curve = &report.attempts[report.best_attempt].curve;
        assert!(curve.last().unwrap() < curve.first().unwrap());
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iteration,energy"));
    }

    #[test]
    fn failure_carries_report() {
        let m = flat(8);
        let p = Mat2::diag(Complex64::new(0.0, 3.0), Complex64::new(0.0, -3.0));
        let a = Connection::constant(m, p).unwrap();
        let opts = DescentOptions {
            iterations: 2,
            ..DescentOptions::new(1, 0)
        };
        match find_holomorphic_line_with(&a, &opts) {
            Err(Error::NoLineFound { best_residual, report }) => {
                assert_eq!(report.best_residual, best_residual);
                assert!(!report.success);
            }
            Ok((_, r)) => assert!(r.success),
            Err(e) => panic!("{e}"),
        }
        assert!(find_holomorphic_line(&Connection::trivial(flat(8)), 0, 0).is_err());
    }
}
