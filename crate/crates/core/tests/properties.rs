use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nodesparse::harness::{preset, ExperimentConfig, Rule, PRESETS};
use nodesparse::linalg::{self, Matrix};
use nodesparse::model::{self, NoiseFamily, NoiseSpec, SymmetricMatrix};
use nodesparse::refine;
use nodesparse::spectral::{self, RankRDecomposition};
use nodesparse::support::{self, CostMode, GroupLassoOptions, SdpSolution};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn noisy(n: usize, seed: u64) -> SymmetricMatrix {
    model::sample_noise(n, &NoiseSpec::gaussian(1.0), &mut rng(seed)).unwrap()
}

fn family() -> impl Strategy<Value = NoiseFamily> {
    prop::sample::select(NoiseFamily::ALL.to_vec())
}

fn orthogonal(r: usize, seed: u64) -> Matrix {
    linalg::haar_stiefel(r, r, &mut rng(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn noise_is_symmetric_and_finite(n in 1usize..25, fam in family(), seed in any::<u64>()) {
        let spec = match fam {
            NoiseFamily::GaussianEntryHetero | NoiseFamily::GaussianRowHetero => NoiseSpec::heteroscedastic(fam, 0.8, 1.3),
            _ => NoiseSpec::new(fam, 1.0),
        };
        let w = model::sample_noise(n, &spec, &mut rng(seed)).unwrap();
        prop_assert_eq!(linalg::max_asymmetry(w.as_matrix()), 0.0);
        prop_assert!(w.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn truncated_noise_is_bounded(n in 2usize..20, bound in 0.1f64..3.0, seed in any::<u64>()) {
        let spec = NoiseSpec::new(NoiseFamily::ScaledT4, 1.0).with_truncation(bound);
        let w = model::sample_noise(n, &spec, &mut rng(seed)).unwrap();
        prop_assert!(linalg::max_abs(w.as_matrix()) <= bound);
    }

    #[test]
    fn ustar_is_orthonormal_with_valid_mu(n in 6usize..60, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let r = 3;
        let max = n as f64 / r as f64;
        let target = 1.0 + frac * (max - 1.0);
        let (u, mu) = model::generate_ustar(n, r, target, &mut rng(seed)).unwrap();
        let gram = u.transpose() * &u;
        prop_assert!((gram - Matrix::identity(r, r)).amax() < 1e-10);
        prop_assert!(mu >= 1.0 - 1e-9 && mu <= max + 1e-9);
        prop_assert!((model::incoherence(&u) - mu).abs() < 1e-12);
    }

    #[test]
    fn bstar_support_matches(n in 8usize..40, m in 1usize..4, seed in any::<u64>()) {
        let p = model::generate_bstar(n, m, 1.0, &mut rng(seed)).unwrap();
        prop_assert_eq!(p.support.len(), m);
        let found = model::node_support(&p.matrix, model::default_support_tol(p.matrix.as_matrix()));
        prop_assert_eq!(&found.indices, &p.support);
        for i in 0..n {
            for j in 0..n {
                if !p.support.contains(&i) && !p.support.contains(&j) {
                    prop_assert_eq!(p.matrix[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn screening_is_monotone(n in 4usize..40, c1 in 0.0f64..4.0, c2 in 0.0f64..4.0, seed in any::<u64>()) {
        let u = linalg::haar_stiefel(n, 2, &mut rng(seed));
        let dec = RankRDecomposition::symmetric(u, vec![2.0, 1.0]);
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let small = spectral::select_low_coherence(&dec, lo).map(|s| s.kept).unwrap_or_default();
        let big = spectral::select_low_coherence(&dec, hi).map(|s| s.kept).unwrap_or_default();
        prop_assert!(small.iter().all(|i| big.contains(i)));
    }

    #[test]
    fn cost_matrices_respect_their_modes(n in 2usize..20, tau in 0.1f64..3.0, seed in any::<u64>()) {
        let y = noisy(n, seed);
        let single = support::build_cost(std::slice::from_ref(&y), CostMode::Single, None).unwrap();
        let trunc = support::build_cost(std::slice::from_ref(&y), CostMode::Truncated, Some(tau)).unwrap();
        prop_assert!(single.c.iter().all(|&v| v >= 0.0));
        prop_assert!(trunc.c.iter().all(|&v| v <= tau * tau));
        prop_assert_eq!(linalg::max_asymmetry(&single.c), 0.0);
        prop_assert_eq!(linalg::max_asymmetry(&trunc.c), 0.0);
    }

    #[test]
    fn support_extraction_is_scale_invariant(n in 3usize..20, m in 1usize..3, s in 0.1f64..10.0, seed in any::<u64>()) {
        prop_assume!(m < n);
        let x = linalg::gaussian_matrix(n, 3, &mut rng(seed));
        let sol = |x: Matrix| SdpSolution {
            x,
            k: n - m,
            objective: 0.0,
            trace_residual: 0.0,
            sum_residual: 0.0,
            negativity: 0.0,
            diag_excess: 0.0,
            iterations: 0,
            converged: true,
            restart_objectives: vec![],
        };
        let a = support::extract_support(&sol(x.clone()), m);
        let b = support::extract_support(&sol(x * s), m);
        prop_assert_eq!(&a.indices, &b.indices);
        prop_assert_eq!(a.indices.len(), m);
        prop_assert!(a.indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn hard_threshold_is_scale_invariant(n in 3usize..20, s in 0.1f64..10.0, seed in any::<u64>()) {
        let y = noisy(n, seed);
        let scaled = SymmetricMatrix::new(y.as_matrix() * s).unwrap();
        let a = support::hard_threshold(&y, 2).unwrap();
        let b = support::hard_threshold(&scaled, 2).unwrap();
        prop_assert_eq!(a.indices, b.indices);
    }

    #[test]
    fn two_inf_error_ignores_rotations(n in 4usize..30, seed in any::<u64>(), qseed in any::<u64>()) {
        let r = 3;
        let ustar = linalg::haar_stiefel(n, r, &mut rng(seed));
        let uest = linalg::haar_stiefel(n, r, &mut rng(seed.wrapping_add(1)));
        let q = orthogonal(r, qseed);
        let a = refine::error_2inf(&uest, &ustar).unwrap();
        let b = refine::error_2inf(&(&uest * q.clone()), &ustar).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!(refine::error_2inf(&(&ustar * q), &ustar).unwrap() < 1e-9);
    }

    #[test]
    fn signed_error_ignores_column_flips(n in 4usize..30, flips in 0u8..8, seed in any::<u64>()) {
        let u = linalg::haar_stiefel(n, 3, &mut rng(seed));
        let mut v = u.clone();
        for k in 0..3 {
            if flips >> k & 1 == 1 {
                v.column_mut(k).neg_mut();
            }
        }
        prop_assert!(refine::error_2inf_signed(&v, &u).unwrap() < 1e-12);
    }

    #[test]
    fn psihat_is_invariant_to_swapping_copies(seed in any::<u64>()) {
        let n = 40;
        let r = 2;
        let mut g = rng(seed);
        let (u, _) = model::generate_ustar(n, r, 2.0, &mut g).unwrap();
        let ms = &u * Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![40.0, 30.0])) * u.transpose();
        let copy = |g: &mut ChaCha8Rng| {
            let w = model::sample_noise(n, &NoiseSpec::gaussian(0.5), g).unwrap();
            SymmetricMatrix::new(&ms + w.as_matrix()).unwrap()
        };
        let c: Vec<SymmetricMatrix> = (0..4).map(|_| copy(&mut g)).collect();
        let comp = refine::asymmetric_combine(&c[0..1], &c[1..2]).unwrap();
        let dec = refine::eig_asym(&comp, r).unwrap();
        let a = refine::psihat(&dec, c[2].as_matrix(), c[3].as_matrix()).unwrap();
        let b = refine::psihat(&dec, c[3].as_matrix(), c[2].as_matrix()).unwrap();
        prop_assert!((&a.psihat - &b.psihat).amax() < 1e-9);
        prop_assert!(linalg::max_asymmetry(&a.psihat) <= 1e-10);
        prop_assert!(a.psihat.clone().symmetric_eigen().eigenvalues.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn composite_takes_each_triangle_from_its_source(n in 1usize..15, seed in any::<u64>()) {
        let a = noisy(n, seed);
        let b = noisy(n, seed.wrapping_add(7));
        let c = refine::asymmetric_combine(std::slice::from_ref(&a), std::slice::from_ref(&b)).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i < j { a[(i, j)] } else { b[(i, j)] };
                prop_assert_eq!(c.m[(i, j)], want);
            }
        }
    }

    #[test]
    fn masking_zeroes_exactly_the_removed_nodes(n in 2usize..15, pick in any::<u16>(), seed in any::<u64>()) {
        let y = noisy(n, seed);
        let idx: Vec<usize> = (0..n).filter(|i| pick >> (i % 16) & 1 == 1).collect();
        let z = refine::mask_rows_cols(&y, &idx).unwrap();
        for i in 0..n {
            for j in 0..n {
                let removed = idx.contains(&i) || idx.contains(&j);
                prop_assert_eq!(z[(i, j)], if removed { 0.0 } else { y[(i, j)] });
            }
        }
    }

    #[test]
    fn improved_eigenvectors_are_bounded(seed in any::<u64>()) {
        let n = 30;
        let u = linalg::haar_stiefel(n, 2, &mut rng(seed));
        let y = SymmetricMatrix::new(&u * Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![20.0, 10.0])) * u.transpose() + noisy(n, seed ^ 1).as_matrix()).unwrap();
        let comp = refine::asymmetric_combine(std::slice::from_ref(&y), std::slice::from_ref(&noisy(n, seed ^ 2))).unwrap();
        if let Ok(dec) = refine::eig_asym(&comp, 2) {
            if let Ok(uh) = refine::improved_eigvectors(&dec) {
                prop_assert!(uh.iter().all(|v| v.abs() <= 1.0 + 1e-12));
                let m1 = refine::mhat1(&uh, &dec.eigenvalues).unwrap();
                prop_assert!(linalg::max_asymmetry(m1.as_matrix()) <= 1e-12);
            }
        }
    }

    #[test]
    fn group_lasso_alphas_nonnegative(n in 2usize..15, frac in 0.0f64..1.2, seed in any::<u64>()) {
        let y = noisy(n, seed);
        let lmax = support::glasso::lambda_max(&y);
        let fit = support::group_lasso(&y, frac * lmax, &GroupLassoOptions::default()).unwrap();
        prop_assert!(fit.alpha.iter().all(|&a| a >= 0.0));
        if frac > 1.0 {
            prop_assert!(fit.alpha.iter().all(|&a| a == 0.0));
        }
    }

    #[test]
    fn fnr_is_a_rate(est in prop::collection::btree_set(0usize..20, 0..6), truth in prop::collection::btree_set(0usize..20, 1..6)) {
        let est: Vec<usize> = est.into_iter().collect();
        let truth: Vec<usize> = truth.into_iter().collect();
        let f = support::fnr(&est, &truth).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(support::fnr(&truth, &truth).unwrap(), 0.0);
    }

    #[test]
    fn rule_division_is_real(n in 1usize..10_000) {
        let r = Rule::parse("n/4 + 3/4").unwrap();
        let want = n as f64 / 4.0 + 0.75;
        prop_assert!((r.eval(n, 0, 0.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn config_text_round_trips(which in 0usize..PRESETS.len(), trials in 1usize..100, seed in any::<u32>()) {
        let cfg = ExperimentConfig { trials, seed: seed as u64, ..preset(PRESETS[which]).unwrap() };
        let text = cfg.to_map().to_text();
        let map = nodesparse::harness::parse_config_text(&text, std::path::Path::new("mem")).unwrap();
        let back = ExperimentConfig::from_map(&map, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
