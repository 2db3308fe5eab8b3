//! OLS against an independent dense solve (nalgebra), plus residual
//! orthogonality.

use std::time::Instant;

use benchsubset::linreg::{fit_nnls, fit_ols, Design};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_system(rng: &mut ChaCha8Rng) -> (Design, Vec<f64>, DMatrix<f64>, DVector<f64>) {
    let n = rng.random_range(20..=200);
    let p = rng.random_range(1..=11);
    let data: Vec<f64> = (0..n * p).map(|_| rng.random_range(0.0..4.0)).collect();
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
    let xm = DMatrix::from_row_slice(n, p, &data);
    let tv = DVector::from_vec(t.clone());
    (Design::anonymous(p, data).unwrap(), t, xm, tv)
}

#[test]
fn thousand_random_systems_match_normal_equations() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let (x, t, xm, tv) = random_system(&mut rng);
        let model = fit_ols(&x, &t, false).unwrap();
        let gram = xm.transpose() * &xm;
        let rhs = xm.transpose() * &tv;
        let oracle = gram.lu().solve(&rhs).expect("well conditioned");
        let scale = oracle.amax().max(1.0);
        for (c, o) in model.coefficients.iter().zip(oracle.iter()) {
            assert!((c - o).abs() <= 1e-9 * scale, "{c} vs {o}");
        }
        let beta = DVector::from_vec(model.coefficients.clone());
        let resid = &tv - &xm * beta;
        let ortho = xm.transpose() * resid;
        assert!(ortho.amax() <= 1e-8 * tv.norm() * xm.norm(), "{}", ortho.amax());
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn intercept_fit_matches_augmented_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let (x, t, xm, tv) = random_system(&mut rng);
        let model = fit_ols(&x, &t, true).unwrap();
        let aug = xm.clone().insert_column(xm.ncols(), 1.0);
        let oracle = (aug.transpose() * &aug).lu().solve(&(aug.transpose() * &tv)).unwrap();
        let p = xm.ncols();
        let scale = oracle.amax().max(1.0);
        for (c, o) in model.coefficients.iter().zip(oracle.iter()) {
            assert!((c - o).abs() <= 1e-8 * scale);
        }
        assert!((model.intercept.unwrap() - oracle[p]).abs() <= 1e-8 * scale);
    }
}

#[test]
fn nnls_satisfies_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let (x, _, xm, _) = random_system(&mut rng);
        // Targets with some negative dependence so constraints bind.
        let p = xm.ncols();
        let w: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..xm.nrows())
            .map(|i| (0..p).map(|j| w[j] * xm[(i, j)]).sum::<f64>() + rng.random_range(-0.1..0.1))
            .collect();
        let tv = DVector::from_vec(t.clone());
        let model = fit_nnls(&x, &t, false).unwrap();
        let beta = DVector::from_vec(model.coefficients.clone());
        let grad = xm.transpose() * (&tv - &xm * &beta);
        let tol = 1e-7 * (xm.norm() * tv.norm()).max(1.0);
        for j in 0..p {
            assert!(beta[j] >= 0.0);
            assert!(grad[j] <= tol, "dual infeasible: {}", grad[j]);
            if beta[j] > 0.0 {
                assert!(grad[j].abs() <= tol, "complementary slackness: {}", grad[j]);
            }
        }
    }
}
