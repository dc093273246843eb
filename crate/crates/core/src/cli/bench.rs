//! Forward-pass timing and the large-squeezing error sweep.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolve::{self, contract, evolve_single_large_r, full_g_tensor_with_limit, DEFAULT_FULL_TENSOR_LIMIT};
use crate::params::{compute_cmusigma, GaussianParams};
use crate::state::FockState;
use crate::C64;

/// Largest entrywise difference tolerated between the two methods.
pub const AGREEMENT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub cutoff: usize,
    pub method: &'static str,
    /// `None` when the method was refused for memory.
    pub median_seconds: Option<f64>,
    pub elements: u64,
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Moderate random gate parameters for benchmarking.
pub fn bench_params<R: Rng>(rng: &mut R, modes: usize) -> GaussianParams {
    let mut p = GaussianParams::identity(modes).unwrap();
    for i in 0..modes {
        p.gamma[i] = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        p.r[i] = rng.gen_range(0.0..0.5);
        p.delta[i] = rng.gen_range(-PI..PI);
        p.phi[i] = rng.gen_range(-PI..PI);
    }
    if modes == 2 {
        p.bs_pre = Some((rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)));
        p.bs_post = Some((rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)));
    }
    p
}

/// Time direct evolution against building the full tensor and contracting,
/// on the same random gate and state. Both outputs must agree.
pub fn bench_forward(modes: usize, cutoffs: &[usize], reps: usize, seed: u64) -> Result<Vec<BenchRow>> {
    bench_forward_with_limit(modes, cutoffs, reps, seed, DEFAULT_FULL_TENSOR_LIMIT)
}

pub fn bench_forward_with_limit(
    modes: usize,
    cutoffs: &[usize],
    reps: usize,
    seed: u64,
    limit: usize,
) -> Result<Vec<BenchRow>> {
    if reps == 0 {
        return Err(Error::Config("repetitions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &n in cutoffs {
        let p = bench_params(&mut rng, modes);
        let psi = FockState::random(modes, n, &mut rng)?;
        let cms = compute_cmusigma(&p)?;

        let mut times = Vec::with_capacity(reps);
        let mut direct = None;
        for _ in 0..reps {
            let t = Instant::now();
            let out = evolve::evolve(&cms, &psi)?;
            times.push(t.elapsed().as_secs_f64());
            direct = Some(out);
        }
        let (out_direct, r) = direct.unwrap();
        rows.push(BenchRow {
            cutoff: n,
            method: "direct",
            median_seconds: Some(median(&mut times)),
            elements: r.counter().elements_computed,
        });

        let entries = (n as u128).pow(2 * modes as u32).min(u64::MAX as u128) as u64;
        let mut times = Vec::with_capacity(reps);
        let mut full = None;
        for _ in 0..reps {
            let t = Instant::now();
            let g = match full_g_tensor_with_limit(&cms, n, modes, limit) {
                Ok(g) => g,
                Err(Error::MemoryBudget { .. }) => break,
                Err(e) => return Err(e),
            };
            let out = contract(&g, &psi)?;
            times.push(t.elapsed().as_secs_f64());
            full = Some((out, g.counter.elements_computed));
        }
        match full {
            Some((out_full, elements)) => {
                let diff = out_full.max_abs_diff(&out_direct)?;
                if diff > AGREEMENT_TOL {
                    return Err(Error::InvalidParams(format!(
                        "direct and full-tensor outputs differ by {diff:e} at cutoff {n}"
                    )));
                }
                rows.push(BenchRow {
                    cutoff: n,
                    method: "full",
                    median_seconds: Some(median(&mut times)),
                    elements,
                });
            }
            None => rows.push(BenchRow {
                cutoff: n,
                method: "full",
                median_seconds: None,
                elements: entries,
            }),
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("N,method,median_seconds,elements_computed\n");
    for r in rows {
        let t = r.median_seconds.map_or("skipped".to_string(), |t| format!("{t:.9e}"));
        writeln!(s, "{},{},{},{}", r.cutoff, r.method, t, r.elements).unwrap();
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub trial: usize,
    pub overlap_error: f64,
}

/// `1 - |<exact|approx>| / (|exact| |approx|)` for a pure squeezer of
/// magnitude `r` acting on `psi`.
pub fn large_r_overlap_error(r: f64, psi: &FockState) -> Result<f64> {
    let p = GaussianParams::single(C64::new(0.0, 0.0), r, 0.0, 0.0);
    let exact = evolve::evolve_single(&compute_cmusigma(&p)?, psi)?.0;
    let approx = evolve_single_large_r(&p, psi)?;
    Ok(1.0 - exact.normalized_overlap(&approx)?)
}

/// The same `trials` random states (drawn once from `seed`) are used for
/// every `r` in the grid.
pub fn sweep_large_r(grid: &[f64], trials: usize, cutoff: usize, seed: u64) -> Result<Vec<SweepRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<FockState> = (0..trials)
        .map(|_| FockState::random(1, cutoff, &mut rng))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(grid.len() * trials);
    for &r in grid {
        for (trial, psi) in states.iter().enumerate() {
            rows.push(SweepRow {
                r,
                trial,
                overlap_error: large_r_overlap_error(r, psi)?,
            });
        }
    }
    Ok(rows)
}

/// Mean error per grid point, in grid order.
pub fn sweep_means(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for row in rows {
        match out.iter_mut().find(|(r, _, _)| *r == row.r) {
            Some(e) => {
                e.1 += row.overlap_error;
                e.2 += 1;
            }
            None => out.push((row.r, row.overlap_error, 1)),
        }
    }
    out.into_iter().map(|(r, s, n)| (r, s / n as f64)).collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("r,trial,overlap_error\n");
    for row in rows {
        writeln!(s, "{},{},{:.9e}", row.r, row.trial, row.overlap_error).unwrap();
    }
    s
}
