use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use seafield::bivar::BivariateModel;
use seafield::estimation::*;
use seafield::latent::LatentField;
use seafield::mesh::{regular_grid, Mesh};
use seafield::paramfield::{isotropic_h_for_range, BoundingBox, CosineField, CrossCorrField, DeformationParams};
use seafield::sparse::factorize;
use seafield::CsrMatrix;

fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.nrows(), a.ncols(), &a.to_dense())
}

fn mvn_loglik(s: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let chol = s.clone().cholesky().expect("covariance SPD");
    let v = DVector::from_vec(x.to_vec());
    let sol = chol.solve(&v);
    let logdet: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    -0.5 * (n as f64 * (2.0 * PI).ln() + logdet + v.dot(&sol))
}

/// Sum over replicates of the dense Gaussian log-density of the observed entries.
fn dense_loglik(cov: &DMatrix<f64>, reps: &[Vec<f64>]) -> f64 {
    reps.iter()
        .map(|x| {
            let idx: Vec<usize> = (0..x.len()).filter(|&i| !x[i].is_nan()).collect();
            let s = DMatrix::from_fn(idx.len(), idx.len(), |i, j| cov[(idx[i], idx[j])]);
            mvn_loglik(&s, &idx.iter().map(|&i| x[i]).collect::<Vec<_>>())
        })
        .sum()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normals(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn bbox(w: f64, h: f64) -> BoundingBox {
    BoundingBox::new([0.0, 0.0], [w, h]).unwrap()
}

fn random_locations(r: &mut ChaCha8Rng, n: usize, lo: [f64; 2], hi: [f64; 2]) -> Vec<[f64; 2]> {
    (0..n).map(|_| [r.random_range(lo[0]..hi[0]), r.random_range(lo[1]..hi[1])]).collect()
}

#[test]
fn scalar_gaussian_case() {
    let q = CsrMatrix::identity(1);
    let chol = factorize(&q).unwrap();
    let b = CsrMatrix::identity(1);
    for (x, s2) in [(0.3, 0.1), (-1.7, 2.0), (0.0, 1e-4)] {
        let ll = latent_gaussian_loglik(&chol, &q, &b, &[s2], &[vec![x]]).unwrap();
        let expect = -0.5 * (2.0 * PI * (1.0 + s2)).ln() - x * x / (2.0 * (1.0 + s2));
        assert!((ll - expect).abs() < 1e-13, "{ll} vs {expect}");
    }
}

#[test]
fn doubling_replicates_doubles_loglik() {
    let mesh = regular_grid(6, 5, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let d = DeformationParams::isotropic(0, bbox(5.0, 4.0), isotropic_h_for_range(2.0, 2.0));
    let field = LatentField::build(&mesh, &d, 2.0, 2).unwrap();
    let mut r = rng(4);
    let locs = random_locations(&mut r, 7, [0.5, 0.5], [4.5, 3.5]);
    let a = mesh.observation_matrix(&locs).unwrap();
    let reps: Vec<Vec<f64>> = (0..3).map(|_| normals(&mut r, 7)).collect();
    let twice: Vec<Vec<f64>> = reps.iter().chain(&reps).cloned().collect();
    let l1 = marginal_loglik(&field, &a, 0.05, &reps).unwrap();
    let l2 = marginal_loglik(&field, &a, 0.05, &twice).unwrap();
    assert!((l2 - 2.0 * l1).abs() < 1e-10 * l1.abs());
}

#[test]
fn marginal_loglik_matches_dense_oracle() {
    // 20 vertices
    let mesh = regular_grid(5, 4, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let bb = bbox(4.0, 3.0);
    let mut r = rng(11);
    let locs = random_locations(&mut r, 6, [0.3, 0.3], [3.7, 2.7]);
    let a = mesh.observation_matrix(&locs).unwrap();
    let cases = [
        (DeformationParams::isotropic(0, bb, isotropic_h_for_range(1.5, 2.0)), 2.0, 0.1),
        (DeformationParams::isotropic(0, bb, isotropic_h_for_range(2.5, 1.5)), 1.5, 0.02),
        (
            DeformationParams {
                h1: CosineField::from_coefficients(1, bb, vec![0.3, 0.2, -0.1, 0.1]).unwrap(),
                h2: CosineField::from_coefficients(1, bb, vec![-0.2, 0.0, 0.3, 0.0]).unwrap(),
                h3: CosineField::from_coefficients(1, bb, vec![0.5, -0.2, 0.0, 0.1]).unwrap(),
            },
            2.7,
            0.3,
        ),
    ];
    for (d, alpha, nugget) in cases {
        let field = LatentField::build(&mesh, &d, alpha, 2).unwrap();
        let mut reps: Vec<Vec<f64>> = (0..4).map(|_| normals(&mut r, locs.len())).collect();
        reps[1][2] = f64::NAN;
        reps[3][0] = f64::NAN;
        reps[3][4] = f64::NAN;
        let sparse = marginal_loglik(&field, &a, nugget, &reps).unwrap();
        let w = dense(&field.weights);
        let sigma_u = &w * dense(field.precision()).try_inverse().unwrap() * w.transpose();
        let af = dense(&field.free_columns(&a).unwrap());
        let cov = &af * sigma_u * af.transpose() + DMatrix::identity(locs.len(), locs.len()) * nugget;
        let oracle = dense_loglik(&cov, &reps);
        assert!((sparse - oracle).abs() < 1e-6, "sparse {sparse} dense {oracle}");
    }
}

#[test]
fn joint_loglik_matches_dense_oracle() {
    let mesh = regular_grid(6, 5, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let bb = bbox(5.0, 4.0);
    let x = Arc::new(LatentField::build(&mesh, &DeformationParams::isotropic(0, bb, isotropic_h_for_range(2.0, 2.0)), 2.0, 2).unwrap());
    let y = Arc::new(LatentField::build(&mesh, &DeformationParams::isotropic(0, bb, isotropic_h_for_range(1.4, 1.8)), 1.8, 2).unwrap());
    let rho = CrossCorrField { rho: CosineField::from_coefficients(1, bb, vec![0.6, -0.3, 0.2, 0.1]).unwrap() };
    let model = BivariateModel::from_fields(&mesh, x, y, &rho).unwrap();
    let mut r = rng(5);
    let locs = random_locations(&mut r, 5, [0.5, 0.5], [4.5, 3.5]);
    let a = mesh.observation_matrix(&locs).unwrap();
    let xs: Vec<Vec<f64>> = (0..3).map(|_| normals(&mut r, 5)).collect();
    let ys: Vec<Vec<f64>> = (0..3).map(|_| normals(&mut r, 5)).collect();
    let nug = [0.05, 0.2];
    let sparse = joint_loglik(&model, &a, nug, &xs, &ys).unwrap();
    let w = dense(&model.weights_map());
    let sigma = &w * dense(&model.q_tilde).try_inverse().unwrap() * w.transpose();
    let af = dense(&model.x.free_columns(&a).unwrap());
    let (m, n) = (af.nrows(), af.ncols());
    let mut obs = DMatrix::zeros(2 * m, 2 * n);
    obs.view_mut((0, 0), (m, n)).copy_from(&af);
    obs.view_mut((m, n), (m, n)).copy_from(&af);
    let mut cov = &obs * sigma * obs.transpose();
    for i in 0..2 * m {
        cov[(i, i)] += if i < m { nug[0] } else { nug[1] };
    }
    let reps: Vec<Vec<f64>> = xs.iter().zip(&ys).map(|(a, b)| a.iter().chain(b).copied().collect()).collect();
    let oracle = dense_loglik(&cov, &reps);
    assert!((sparse - oracle).abs() < 1e-6, "sparse {sparse} dense {oracle}");
}

#[test]
fn likelihood_rejects_bad_inputs() {
    let q = CsrMatrix::identity(2);
    let chol = factorize(&q).unwrap();
    let b = CsrMatrix::identity(2);
    assert!(latent_gaussian_loglik(&chol, &q, &b, &[1.0], &[vec![0.0, 0.0]]).is_err());
    assert!(latent_gaussian_loglik(&chol, &q, &b, &[1.0, 0.0], &[vec![0.0, 0.0]]).is_err());
    assert!(latent_gaussian_loglik(&chol, &q, &b, &[1.0, 1.0], &[vec![0.0]]).is_err());
    // all-missing replicate contributes nothing
    let l = latent_gaussian_loglik(&chol, &q, &b, &[1.0, 1.0], &[vec![f64::NAN, f64::NAN]]).unwrap();
    assert_eq!(l, 0.0);
}

#[test]
fn bfgs_minimises_rosenbrock() {
    let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let r = minimize(&f, &[-1.2, 1.0], &OptimOptions::default());
    assert!(r.converged, "{r:?}");
    assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    assert!(r.grad_norm < 1e-5);
    assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn bfgs_treats_nan_as_infinite() {
    // the objective is undefined left of 0.5; the minimiser at 2 is reachable
    let f = |x: &[f64]| if x[0] < 0.5 { f64::NAN } else { (x[0] - 2.0).powi(2) };
    let r = minimize(&f, &[0.6], &OptimOptions::default());
    assert!((r.x[0] - 2.0).abs() < 1e-5);
}

#[test]
fn converged_flag_implies_small_gradient() {
    let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v).sum::<f64>();
    let opts = OptimOptions { max_iter: 2, ..Default::default() };
    let r = minimize(&f, &[1.0, -2.0, 3.0, 0.5], &opts);
    assert!(!r.converged || r.grad_norm < opts.grad_tol);
    let r = minimize(&f, &[1.0, -2.0, 3.0, 0.5], &OptimOptions::default());
    assert!(r.converged && r.grad_norm < 1e-5);
}

#[test]
fn pointwise_loglik_is_stationary_at_shrunk_correlation() {
    for (gh, o) in [(0.4, 50usize), (-0.8, 12), (0.95, 300), (0.0, 7)] {
        let g = gh * (o as f64 - 1.0) / o as f64;
        let h = 1e-6;
        let d = (pointwise_loglik(&[g + h], &[gh], &[o]) - pointwise_loglik(&[g - h], &[gh], &[o])) / (2.0 * h);
        assert!(d.abs() < 1e-5 * o as f64, "derivative {d} at γ̂ = {gh}");
        // and a maximum: neighbours are lower
        let l0 = pointwise_loglik(&[g], &[gh], &[o]);
        assert!(l0 > pointwise_loglik(&[g + 1e-3], &[gh], &[o]));
        assert!(l0 > pointwise_loglik(&[g - 1e-3], &[gh], &[o]));
    }
}

#[test]
fn pointwise_loglik_is_unbounded_below_at_unit_correlation() {
    assert_eq!(pointwise_loglik(&[1.0], &[0.5], &[10]), f64::NEG_INFINITY);
    assert!(pointwise_loglik(&[0.999999], &[0.5], &[10]) < pointwise_loglik(&[0.5], &[0.5], &[10]));
}

fn pair_fields(mesh: &Mesh, bb: BoundingBox, range: f64) -> (Arc<LatentField>, Arc<LatentField>) {
    let d = DeformationParams::isotropic(0, bb, isotropic_h_for_range(range, 2.0));
    let x = Arc::new(LatentField::build(mesh, &d, 2.0, 2).unwrap());
    (x.clone(), x)
}

#[test]
fn pointwise_fit_matches_grid_search_single_location() {
    let mesh = regular_grid(7, 7, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let bb = bbox(6.0, 6.0);
    let (x, y) = pair_fields(&mesh, bb, 2.0);
    let a = mesh.observation_matrix(&[[3.1, 2.7]]).unwrap();
    for (gh, o) in [(0.55, 400usize), (-0.3, 120)] {
        let fit = fit_rho_pointwise(&mesh, &a, x.clone(), y.clone(), &[gh], &[o], bb, &FitOptions::default()).unwrap();
        let model = BivariateModel::from_fields(&mesh, x.clone(), y.clone(), &fit.rho).unwrap();
        let g_fit = model.pointwise_crosscorr(&a).unwrap().gamma[0];
        let grid: Vec<f64> = (-999..=999).map(|i| i as f64 * 1e-3).collect();
        let best = grid
            .iter()
            .copied()
            .max_by(|p, q| pointwise_loglik(&[*p], &[gh], &[o]).partial_cmp(&pointwise_loglik(&[*q], &[gh], &[o])).unwrap())
            .unwrap();
        assert!((g_fit - best).abs() <= 1e-3, "fit {g_fit} grid {best}");
    }
}

#[test]
fn zero_sample_correlation_gives_zero_rho() {
    let mesh = regular_grid(7, 7, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let bb = bbox(6.0, 6.0);
    let (x, y) = pair_fields(&mesh, bb, 2.0);
    let locs = [[1.5, 1.5], [3.0, 4.2], [4.4, 2.2]];
    let a = mesh.observation_matrix(&locs).unwrap();
    let fit = fit_rho_pointwise(&mesh, &a, x, y, &[0.0; 3], &[50; 3], bb, &FitOptions::default()).unwrap();
    assert!(fit.rho.rho.coefficients()[0].abs() < 1e-4);
}

#[test]
fn pointwise_fit_rejects_unit_sample_correlation() {
    let mesh = regular_grid(5, 5, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let bb = bbox(4.0, 4.0);
    let (x, y) = pair_fields(&mesh, bb, 2.0);
    let a = mesh.observation_matrix(&[[2.0, 2.0]]).unwrap();
    let e = fit_rho_pointwise(&mesh, &a, x, y, &[1.0], &[10], bb, &FitOptions::default()).unwrap_err();
    assert!(matches!(e, seafield::Error::Data(_)));
}

#[test]
fn crosscorr_stats_cases() {
    let mut r = rng(8);
    let locs: Vec<[f64; 2]> = (0..4).flat_map(|i| (0..4).map(move |j| [i as f64, j as f64])).collect();
    let x: Vec<Vec<f64>> = (0..30).map(|_| normals(&mut r, 16)).collect();
    let data = Dataset::new(locs.clone(), x.clone(), x.clone()).unwrap();
    let st = sample_crosscorr_stats(&data, 0.0).unwrap();
    assert!(st.gamma_hat.iter().all(|g| (g - 1.0).abs() < 1e-12));
    assert_eq!(st.gamma_hat, st.shifted_gamma_hat);
    assert!(st.shifts.iter().all(|s| *s == [0.0, 0.0]));

    // a one-cell shift is found within radius 1
    let y: Vec<Vec<f64>> = x.iter().map(|row| (0..16).map(|k| if k >= 4 { row[k - 4] } else { r.sample(StandardNormal) }).collect()).collect();
    let data = Dataset::new(locs.clone(), x.clone(), y).unwrap();
    let st = sample_crosscorr_stats(&data, 1.0).unwrap();
    for j in 0..12 {
        assert!((st.shifted_gamma_hat[j] - 1.0).abs() < 1e-12);
        assert_eq!(st.shifts[j], [1.0, 0.0]);
    }

    // constant series are excluded
    let mut x2 = x.clone();
    for row in &mut x2 {
        row[5] = 1.0;
    }
    let data = Dataset::new(locs, x2, x).unwrap();
    let st = sample_crosscorr_stats(&data, 0.0).unwrap();
    assert_eq!(st.excluded, vec![5]);
    assert!(st.gamma_hat[5].is_nan());
}

#[test]
fn independent_fields_respect_fisher_bound() {
    let mut r = rng(21);
    let m = 500;
    let o = 60;
    let locs: Vec<[f64; 2]> = (0..m).map(|i| [i as f64, 0.0]).collect();
    let x: Vec<Vec<f64>> = (0..o).map(|_| normals(&mut r, m)).collect();
    let y: Vec<Vec<f64>> = (0..o).map(|_| normals(&mut r, m)).collect();
    let st = sample_crosscorr_stats(&Dataset::new(locs, x, y).unwrap(), 0.0).unwrap();
    let within = st.gamma_hat.iter().filter(|g| g.abs() < 3.0 / (o as f64).sqrt()).count();
    assert!(within as f64 >= 0.99 * m as f64, "{within} of {m}");
}

#[test]
fn crosscorr_stats_need_two_replicates() {
    let d = Dataset::new(vec![[0.0, 0.0]], vec![vec![1.0]], vec![vec![2.0]]).unwrap();
    assert!(sample_crosscorr_stats(&d, 1.0).is_err());
}

#[test]
fn alternate_day_split() {
    let (train, test) = split_alternate(4).unwrap();
    assert_eq!(train, vec![0, 2]);
    assert_eq!(test, vec![1, 3]);
    assert!(split_alternate(1).is_err());
    let (train, test) = split_alternate(7).unwrap();
    let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
    all.sort();
    assert_eq!(all, (0..7).collect::<Vec<_>>());
}

#[test]
fn dataset_validation() {
    assert!(Dataset::new(vec![[0.0, 0.0]], vec![vec![1.0]], vec![]).is_err());
    assert!(Dataset::new(vec![[0.0, 0.0]], vec![vec![1.0, 2.0]], vec![vec![1.0, 2.0]]).is_err());
    assert!(Dataset::new(vec![[0.0, 0.0]], vec![vec![f64::INFINITY]], vec![vec![1.0]]).is_err());
    let d = Dataset::new(vec![[0.0, 0.0], [1.0, 0.0]], vec![vec![1.0, f64::NAN], vec![2.0, 3.0]], vec![vec![1.0, 1.0], vec![0.5, 2.0]]).unwrap();
    assert_eq!(d.counts(), vec![2, 1]);
    assert_eq!(d.usable_locations(), vec![0]);
}

proptest! {
    #[test]
    fn standardisation_gives_zero_mean_unit_variance(seed in 0u64..1000, n in 3usize..40) {
        let mut r = rng(seed);
        let reps: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|j| 3.0 * j as f64 + (j as f64 + 0.5) * r.sample::<f64, _>(StandardNormal)).collect()).collect();
        let z = standardize_with(&reps, &point_stats(&reps)).unwrap();
        let s = point_stats(&z);
        for j in 0..5 {
            prop_assert!(s.mean[j].abs() < 1e-12);
            prop_assert!((s.var[j] - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn standardisation_rejects_constant_location() {
    let reps = vec![vec![1.0, 2.0], vec![1.0, 3.0]];
    assert!(standardize_with(&reps, &point_stats(&reps)).is_err());
}

fn effective_range(d: &DeformationParams, alpha: f64) -> f64 {
    let hk = d.eval([0.0, 0.0]).unwrap();
    let t = hk.h_tilde;
    (8.0 * (alpha - 1.0)).sqrt() * (t[0][0] * t[1][1] - t[0][1] * t[1][0]).powf(0.25)
}

fn simulate(field: &LatentField, a: &CsrMatrix, nugget: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let us = field.sample(n, seed).unwrap();
    let mut r = rng(seed ^ 0xabc);
    us.iter()
        .map(|u| a.mul_vec(u).into_iter().map(|v| v + nugget.sqrt() * r.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

#[test]
fn marginal_fit_recovers_stationary_parameters() {
    let mesh = regular_grid(13, 13, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let bb = bbox(12.0, 12.0);
    let (alpha, range, nugget) = (2.0, 4.0, 0.02);
    let truth = DeformationParams::isotropic(0, bb, isotropic_h_for_range(range, alpha));
    let field = LatentField::build(&mesh, &truth, alpha, 2).unwrap();
    let mut r = rng(3);
    let locs = random_locations(&mut r, 60, [2.0, 2.0], [10.0, 10.0]);
    let a = mesh.observation_matrix(&locs).unwrap();
    let reps = simulate(&field, &a, nugget, 300, 99);
    let fit = fit_marginal(&mesh, &a, &locs, &reps, bb, &FitOptions::default()).unwrap();
    let fitted_range = effective_range(&fit.deformation, fit.alpha);
    assert!((fit.alpha - alpha).abs() < 0.3, "alpha {}", fit.alpha);
    assert!((fitted_range / range - 1.0).abs() < 0.2, "range {fitted_range}");
    assert!(fit.report.nugget_joint);
    assert_eq!(fit.report.params.len(), 5);
    assert!(fit.report.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn marginal_fit_from_truth_does_not_decrease_likelihood() {
    let mesh = regular_grid(9, 9, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let bb = bbox(8.0, 8.0);
    let truth = DeformationParams::isotropic(0, bb, isotropic_h_for_range(3.0, 2.0));
    let field = LatentField::build(&mesh, &truth, 2.0, 2).unwrap();
    let mut r = rng(12);
    let locs = random_locations(&mut r, 25, [1.5, 1.5], [6.5, 6.5]);
    let a = mesh.observation_matrix(&locs).unwrap();
    let reps = simulate(&field, &a, 0.01, 60, 5);
    let opts = FitOptions { alpha_fixed: Some(2.0), nugget_init: 0.01, ..Default::default() };
    let fit = fit_marginal(&mesh, &a, &locs, &reps, bb, &opts).unwrap();
    let start = -marginal_loglik(&field, &a, 0.01, &reps).unwrap();
    assert!(fit.report.neg_loglik <= start + 1e-9);
    assert!(fit.report.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn fullml_rho_dominates_independence() {
    let mesh = regular_grid(8, 8, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let bb = bbox(7.0, 7.0);
    let (x, y) = pair_fields(&mesh, bb, 2.5);
    let truth = BivariateModel::from_fields(&mesh, x.clone(), y.clone(), &CrossCorrField::constant(0, bb, 1.0)).unwrap();
    let mut r = rng(31);
    let locs = random_locations(&mut r, 20, [1.5, 1.5], [5.5, 5.5]);
    let a = mesh.observation_matrix(&locs).unwrap();
    let samples = truth.sample(150, 17).unwrap();
    let nug = 0.01f64;
    let mut noisy = |u: &Vec<f64>| a.mul_vec(u).into_iter().map(|v| v + nug.sqrt() * r.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>();
    let xs: Vec<Vec<f64>> = samples.iter().map(|s| noisy(&s.0)).collect();
    let ys: Vec<Vec<f64>> = samples.iter().map(|s| noisy(&s.1)).collect();
    let fit = fit_rho_fullml(&mesh, &a, x.clone(), y.clone(), [nug, nug], &xs, &ys, bb, &FitOptions::default()).unwrap();
    let indep = BivariateModel::from_fields(&mesh, x.clone(), y.clone(), &CrossCorrField::constant(0, bb, 0.0)).unwrap();
    let l0 = joint_loglik(&indep, &a, [nug, nug], &xs, &ys).unwrap();
    assert!(-fit.report.neg_loglik >= l0);
    let fitted = BivariateModel::from_fields(&mesh, x, y, &fit.rho).unwrap();
    let g = fitted.pointwise_crosscorr(&a).unwrap().gamma;
    let mean_g = g.iter().sum::<f64>() / g.len() as f64;
    assert!((mean_g - 0.5f64.sqrt()).abs() < 0.1, "mean γ {mean_g}");
}

#[test]
fn initial_range_tracks_true_range() {
    let mesh = regular_grid(13, 13, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let bb = bbox(12.0, 12.0);
    let field = LatentField::build(&mesh, &DeformationParams::isotropic(0, bb, isotropic_h_for_range(4.0, 2.0)), 2.0, 2).unwrap();
    let mut r = rng(2);
    let locs = random_locations(&mut r, 80, [1.0, 1.0], [11.0, 11.0]);
    let a = mesh.observation_matrix(&locs).unwrap();
    let reps = simulate(&field, &a, 0.0001, 200, 1);
    let est = initial_range(&locs, mesh.geometry(), &reps);
    assert!(est > 2.0 && est < 8.0, "{est}");
}
