use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::params::{compute_cmusigma, GaussianParams};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn cms(p: &GaussianParams) -> CMuSigma {
    compute_cmusigma(p).unwrap()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn random_params<R: Rng>(rng: &mut R, modes: usize) -> GaussianParams {
    let mut a = || rng.gen_range(-PI..PI);
    let mut p = GaussianParams::identity(modes).unwrap();
    for i in 0..modes {
        p.gamma[i] = C64::new(0.0, 0.0);
        p.delta[i] = a();
        p.phi[i] = a();
    }
    if modes == 2 {
        p.bs_pre = Some((a(), a()));
        p.bs_post = Some((a(), a()));
    }
    for i in 0..modes {
        p.gamma[i] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        p.r[i] = rng.gen_range(0.0..1.0);
    }
    p
}

#[test]
fn first_row_anchors() {
    let g = g_first_row(&cms(&GaussianParams::single(ZERO, 0.0, 0.0, 0.0)), 6);
    assert_eq!(g, vec![ONE, ZERO, ZERO, ZERO, ZERO, ZERO]);

    let g = g_first_row(&cms(&GaussianParams::single(ZERO, 0.6f64.atanh(), 0.0, 0.0)), 4);
    let c = 1.0 / 1.25f64.sqrt();
    let expect = [c, 0.0, 0.6 / 2f64.sqrt() * c, 0.0];
    for (a, b) in g.iter().zip(expect) {
        assert!((a - b).norm() < 1e-12, "{a} vs {b}");
    }
    assert!((g[2].re - 0.379473).abs() < 1e-6);

    // coherent bra row <0|D(1)|n> = e^{-1/2} (-1)^n / sqrt(n!)
    let g = g_first_row(&cms(&GaussianParams::single(ONE, 0.0, 0.0, 0.0)), 8);
    for (n, z) in g.iter().enumerate() {
        let expect = (-0.5f64).exp() * (-1f64).powi(n as i32) / factorial(n).sqrt();
        assert!((z - expect).norm() < 1e-14);
    }
}

#[test]
fn first_row_matches_full_tensor() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let c = cms(&random_params(&mut rng, 1));
        let g = g_first_row(&c, 12);
        let full = full_g_tensor(&c, 12, 1).unwrap();
        for (n, gn) in g.iter().enumerate() {
            assert!((gn - full.get(0, n)).norm() < 1e-12);
        }
    }
}

#[test]
fn identity_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for modes in 1..=2 {
        let psi = FockState::random(modes, 7, &mut rng).unwrap();
        let c = cms(&GaussianParams::identity(modes).unwrap());
        let (out, _) = evolve(&c, &psi).unwrap();
        assert!(out.max_abs_diff(&psi).unwrap() < 1e-15);
    }
}

#[test]
fn coherent_state_amplitudes() {
    let n = 20;
    let c = cms(&GaussianParams::single(ONE, 0.0, 0.0, 0.0));
    let (out, _) = evolve_single(&c, &FockState::vacuum(1, n).unwrap()).unwrap();
    for m in 0..n {
        let expect = (-0.5f64).exp() / factorial(m).sqrt();
        assert!((out.amplitudes()[m] - expect).norm() < 1e-12);
    }
    let a = out.amplitudes();
    for (z, e) in a.iter().zip([0.606531, 0.606531, 0.428882, 0.247615]) {
        assert!((z.re - e).abs() < 1e-6);
    }
}

#[test]
fn squeezed_vacuum_amplitudes() {
    let n = 30;
    let (r, delta) = (0.6f64.atanh(), 0.0);
    let c = cms(&GaussianParams::single(ZERO, r, delta, 0.0));
    let (out, _) = evolve_single(&c, &FockState::vacuum(1, n).unwrap()).unwrap();
    for m in 0..n {
        let expect = if m % 2 == 1 {
            ZERO
        } else {
            let k = m / 2;
            (-C64::from_polar(r.tanh(), delta)).powu(k as u32) * factorial(m).sqrt()
                / (2f64.powi(k as i32) * factorial(k))
                / r.cosh().sqrt()
        };
        assert!((out.amplitudes()[m] - expect).norm() < 1e-12, "m={m}");
    }
    let a = out.amplitudes();
    for (z, e) in a.iter().zip([0.894427, 0.0, -0.379473, 0.0, 0.197181, 0.0]) {
        assert!((z.re - e).abs() < 1e-6);
    }
}

#[test]
fn rotation_is_diagonal_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let psi = FockState::random(1, 15, &mut rng).unwrap();
    let c = cms(&GaussianParams::single(ZERO, 0.0, 0.0, FRAC_PI_3));
    let (out, _) = evolve_single(&c, &psi).unwrap();
    for k in 0..15 {
        let expect = psi.amplitudes()[k] * C64::from_polar(1.0, k as f64 * FRAC_PI_3);
        assert!((out.amplitudes()[k] - expect).norm() < 1e-12);
    }
}

#[test]
fn single_mode_triangle_discipline() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [1usize, 2, 10, 37, 100] {
        let psi = FockState::random(1, n, &mut rng).unwrap();
        let c = cms(&random_params(&mut rng, 1));
        let (_, r) = evolve_single(&c, &psi).unwrap();
        assert_eq!(op_counts(&r).elements_computed, single_element_count(n));
        let RTensor::Single(s) = &r else { panic!() };
        for m in 0..n {
            for k in n - m..n {
                assert_eq!(s.raw()[m * n + k], ZERO, "wrote outside triangle at ({m},{k})");
            }
        }
    }
    let (_, r) = evolve_single(
        &cms(&GaussianParams::single(ZERO, 0.0, 0.0, 0.0)),
        &FockState::vacuum(1, 10).unwrap(),
    )
    .unwrap();
    assert_eq!(r.counter().elements_computed, 55);
}

#[test]
fn two_mode_element_count_within_quarter() {
    let psi = FockState::vacuum(2, 10).unwrap();
    let (_, r) = evolve_two(&cms(&GaussianParams::identity(2).unwrap()), &psi).unwrap();
    let count = r.counter().elements_computed;
    assert!(count as f64 <= 0.26 * 1e4, "{count}");
    assert_eq!(count, two_mode_element_count(10));
}

/// Independent count of the two-mode index set by enumeration.
fn two_mode_element_count(n: usize) -> u64 {
    let mut c = 0;
    for m in 0..n {
        for nn in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let needed = if m == 0 { j + k + nn <= 2 * n - 2 } else { j + k < n - m };
                    c += needed as u64;
                }
            }
        }
    }
    c
}

#[test]
fn two_mode_layout_rows_are_disjoint() {
    for n in [1usize, 2, 5, 8] {
        let layout = TwoLayout::new(n);
        let mut seen = vec![false; layout.len()];
        for m in 0..n {
            for nn in 0..n {
                let jmax = if m == 0 { n } else { n - m };
                for j in 0..jmax {
                    let len = layout.row_len(m, nn, j);
                    for k in 0..len {
                        let i = layout.index(m, nn, j, k);
                        assert!(!seen[i], "overlap at ({m},{nn},{j},{k})");
                        seen[i] = true;
                    }
                }
            }
        }
    }
}

#[test]
fn hong_ou_mandel() {
    let mut p = GaussianParams::identity(2).unwrap();
    p.bs_pre = Some((FRAC_PI_4, 0.0));
    let c = cms(&p);
    let psi = FockState::fock(2, 4, &[1, 1]).unwrap();
    let (out, _) = evolve_two(&c, &psi).unwrap();
    assert!(out.get(&[1, 1]).norm() < 1e-14);
    assert!((out.get(&[2, 0]).norm() - 0.5f64.sqrt()).abs() < 1e-14);
    assert!((out.get(&[0, 2]).norm() - 0.5f64.sqrt()).abs() < 1e-14);
    let full = full_g_tensor(&c, 4, 2).unwrap();
    assert!(contract(&full, &psi).unwrap().max_abs_diff(&out).unwrap() < 1e-14);
}

#[test]
fn oracle_equivalence_single() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.gen_range(1..=20);
        let c = cms(&random_params(&mut rng, 1));
        let psi = FockState::random(1, n, &mut rng).unwrap();
        let (out, _) = evolve_single(&c, &psi).unwrap();
        let full = contract(&full_g_tensor(&c, n, 1).unwrap(), &psi).unwrap();
        assert!(out.max_abs_diff(&full).unwrap() <= 1e-10);
    }
}

#[test]
fn oracle_equivalence_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..60 {
        let n = rng.gen_range(1..=8);
        let c = cms(&random_params(&mut rng, 2));
        let psi = FockState::random(2, n, &mut rng).unwrap();
        let (out, _) = evolve_two(&c, &psi).unwrap();
        let full = contract(&full_g_tensor(&c, n, 2).unwrap(), &psi).unwrap();
        let err = out.max_abs_diff(&full).unwrap();
        assert!(err <= 1e-10, "n={n} err={err:e}");
    }
}

#[test]
fn full_tensor_anchors() {
    let full = full_g_tensor(&cms(&GaussianParams::single(ZERO, 0.0, 0.0, 0.0)), 5, 1).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let e = if i == j { ONE } else { ZERO };
            assert!((full.get(i, j) - e).norm() < 1e-15);
        }
    }
    let full = full_g_tensor(&cms(&GaussianParams::single(ONE, 0.0, 0.0, 0.0)), 8, 1).unwrap();
    for m in 0..8 {
        assert!((full.get(m, 0) - (-0.5f64).exp() / factorial(m).sqrt()).norm() < 1e-14);
    }
    let c = cms(&GaussianParams::identity(2).unwrap());
    assert!(matches!(
        full_g_tensor_with_limit(&c, 10, 2, 9999),
        Err(Error::MemoryBudget {
            entries: 10000,
            limit: 9999
        })
    ));
}

#[test]
fn norm_contract_and_truncation_deficit() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let c = cms(&random_params(&mut rng, 1));
        let psi = FockState::random(1, 15, &mut rng).unwrap();
        let (out, _) = evolve_single(&c, &psi).unwrap();
        assert!(out.norm_sqr() <= 1.0 + 1e-9);
        let c2 = cms(&random_params(&mut rng, 2));
        let psi2 = FockState::random(2, 6, &mut rng).unwrap();
        let (out2, _) = evolve_two(&c2, &psi2).unwrap();
        assert!(out2.norm_sqr() <= 1.0 + 1e-9);
    }
    let p = GaussianParams::single(C64::new(0.7, -0.5), 0.9, 0.3, 1.1);
    let c = cms(&p);
    let deficits: Vec<f64> = [10, 20, 40]
        .iter()
        .map(|&n| {
            1.0 - evolve_single(&c, &FockState::vacuum(1, n).unwrap())
                .unwrap()
                .0
                .norm_sqr()
        })
        .collect();
    assert!(deficits[0] > deficits[1] && deficits[1] > deficits[2], "{deficits:?}");
}

#[test]
fn kerr_gate() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let psi = FockState::random(1, 12, &mut rng).unwrap();
    assert_eq!(apply_kerr(&[0.0], &psi).unwrap(), psi);
    let out = apply_kerr(&[PI], &psi).unwrap();
    for k in 0..12 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        assert!((out.amplitudes()[k] - psi.amplitudes()[k] * sign).norm() < 1e-12);
    }
    let psi2 = FockState::random(2, 7, &mut rng).unwrap();
    let out2 = apply_kerr(&[0.3, -1.7], &psi2).unwrap();
    assert!((out2.norm_sqr() - psi2.norm_sqr()).abs() < 1e-15);
    assert!((out2.get(&[2, 3]) - psi2.get(&[2, 3]) * C64::from_polar(1.0, 0.3 * 4.0 - 1.7 * 9.0)).norm() < 1e-12);
    assert!(apply_kerr(&[0.1], &psi2).is_err());
}

#[test]
fn rejects_shape_errors() {
    let c1 = cms(&GaussianParams::identity(1).unwrap());
    let psi2 = FockState::vacuum(2, 3).unwrap();
    assert!(evolve(&c1, &psi2).is_err());
    assert!(evolve_single(&c1, &psi2).is_err());
    assert!(contract(&full_g_tensor(&c1, 4, 1).unwrap(), &FockState::vacuum(1, 3).unwrap()).is_err());
}

fn large_r_error(r: f64, psi: &FockState) -> f64 {
    let p = GaussianParams::single(ZERO, r, 0.0, 0.0);
    let exact = evolve_single(&cms(&p), psi).unwrap().0;
    let approx = evolve_single_large_r(&p, psi).unwrap();
    1.0 - exact.normalized_overlap(&approx).unwrap()
}

#[test]
fn large_r_vacuum_overlap() {
    let vac = FockState::vacuum(1, 50).unwrap();
    assert!(1.0 - large_r_error(6.0, &vac) >= 0.999);
}

#[test]
fn large_r_error_shrinks_with_r() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let states: Vec<_> = (0..10).map(|_| FockState::random(1, 50, &mut rng).unwrap()).collect();
    let mean = |r: f64| states.iter().map(|s| large_r_error(r, s)).sum::<f64>() / states.len() as f64;
    let grid = [1.0, 1.5, 2.0, 2.5, 3.0];
    let errs: Vec<f64> = grid.iter().map(|&r| mean(r)).collect();
    for w in errs.windows(2) {
        assert!(w[1] <= w[0], "{errs:?}");
    }
    assert!(errs[4] < errs[0]);
    // dropped terms are O(sech r), so the overlap error falls like sech^2 r ~ e^{-2r}
    let (e5, e6, e7) = (mean(5.0), mean(6.0), mean(7.0));
    assert!(e6 < 0.25 * e5 && e7 < 0.25 * e6, "{e5:e} {e6:e} {e7:e}");
}

#[test]
fn large_r_scales_to_thousands() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let psi = FockState::random(1, 1000, &mut rng).unwrap();
    let p = GaussianParams::single(C64::new(0.2, 0.1), 4.0, 0.3, 0.2);
    let t = std::time::Instant::now();
    let out = evolve_single_large_r(&p, &psi).unwrap();
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert!(out.is_finite());
    assert!(evolve_single_large_r(&GaussianParams::identity(2).unwrap(), &psi).is_err());
}
