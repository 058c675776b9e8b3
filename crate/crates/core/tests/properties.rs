//! Structural properties of the coarse space and the smoothers.

mod common;

use common::{max_abs_diff, norm, problem};
use unsat_poro::coarse_space::{
    displacement_patch_matrices, pressure_patch_matrices, CoarseGrid, CoarseOperator, Prolongation, SpectralBasis,
};
use unsat_poro::linalg::DenseMatrix;
use unsat_poro::smoothers::{PatchKind, SmootherConfig, SmootherKind, VankaSetup};
use unsat_poro::time_integration::SplitOperators;
use unsat_poro::two_grid::{TwoGridConfig, TwoGridSolver};
use unsat_poro::Problem64;

const N: usize = 8;
const N_COARSE: usize = 2;

fn basis(p: &Problem64, n_coarse: usize, m: usize) -> SpectralBasis<f64> {
    let grid = CoarseGrid::for_mesh(&p.mesh, n_coarse).unwrap();
    SpectralBasis::compute(&p.mesh, &p.dofs, grid, &p.bounds().unwrap(), m, m).unwrap()
}

fn system(p: &Problem64) -> SplitOperators<f64> {
    SplitOperators::new(p, p.bounds().unwrap(), 172_800.0 / 10.0, None).unwrap()
}

fn dense_mul(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    let mut c = DenseMatrix::zeros(a.n_rows(), b.n_cols());
    for i in 0..a.n_rows() {
        for k in 0..a.n_cols() {
            let aik = a.row(i)[k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..b.n_cols() {
                c.row_mut(i)[j] += aik * b.row(k)[j];
            }
        }
    }
    c
}

#[test]
fn partition_of_unity_sums_to_one() {
    for (n, nc) in [(8, 2), (16, 4), (32, 8), (12, 3)] {
        let g = CoarseGrid::new(n, nc).unwrap();
        for j in 0..=n {
            for i in 0..=n {
                let s: f64 = (0..g.n_vertices()).map(|l| g.pou::<f64>(l, i, j)).sum();
                assert!((s - 1.0).abs() <= 1e-14, "({i}, {j}) on {n}/{nc}: {s}");
            }
        }
    }
}

#[test]
fn vanka_weights_resolve_the_identity() {
    let p = problem(N, 1e6, 3);
    let ops = system(&p);
    let grid = CoarseGrid::for_mesh(&p.mesh, N_COARSE).unwrap();
    let constrained = p.dofs.constrained_mask();
    for kind in [
        PatchKind::Omega,
        PatchKind::Cell { overlap: 0 },
        PatchKind::Cell { overlap: 1 },
        PatchKind::Cell { overlap: 2 },
    ] {
        let v = VankaSetup::from_grid(&ops.system, &grid, &p.dofs, kind, 4).unwrap();
        let mut diag = vec![0.0; p.n_dofs()];
        for (patch, w) in v.patches.iter().zip(&v.weights) {
            for (&d, &wd) in patch.dofs.iter().zip(w) {
                diag[d] += wd;
            }
        }
        for &u in v.uncovered() {
            assert!(constrained[u], "{kind:?}: free DOF {u} in no patch");
            diag[u] += 1.0;
        }
        assert!(max_abs_diff(&diag, &vec![1.0; diag.len()]) <= 1e-14, "{kind:?}");
    }
}

#[test]
fn local_eigenpairs_have_small_residuals() {
    let p = problem(16, 1e6, 5);
    let bounds = p.bounds().unwrap();
    let b = basis(&p, 4, 6);
    let check = |a: &DenseMatrix<f64>, s: &DenseMatrix<f64>, lam: f64, v: &[f64], what: &str| {
        let av = a.matvec(v).unwrap();
        let sv = s.matvec(v).unwrap();
        let r: Vec<f64> = av.iter().zip(&sv).map(|(x, y)| x - lam * y).collect();
        let scale = a.norm_fro() * norm(v);
        assert!(norm(&r) <= 1e-8 * scale, "{what}: residual {}", norm(&r) / scale);
        let vsv: f64 = v.iter().zip(&sv).map(|(x, y)| x * y).sum();
        assert!((vsv - 1.0).abs() <= 1e-8, "{what}: vᵀSv = {vsv}");
    };
    for (l, patch) in b.patches.iter().enumerate() {
        let (_, a, s) = pressure_patch_matrices(&p.mesh, &b.grid, l, &bounds);
        for j in 0..patch.pressure_count() {
            check(&a, &s, patch.pressure_values[j], &patch.pressure_vector(j), &format!("p patch {l} mode {j}"));
        }
        let (_, k, sk) = displacement_patch_matrices(&p.mesh, &p.dofs, &b.grid, l, &bounds);
        for j in 0..patch.displacement_count() {
            check(&k, &sk, patch.displacement_values[j], &patch.displacement_vector(j), &format!("u patch {l} mode {j}"));
        }
        assert!(patch.pressure_values.windows(2).all(|w| w[0] <= w[1]));
        assert!(patch.pressure_values[0].abs() <= 1e-8 * patch.pressure_values.last().unwrap().abs().max(1.0));
    }
}

#[test]
fn saturation_derivative_matches_finite_differences() {
    let p = problem(4, 1e6, 1);
    let m = &p.material;
    let (lo, hi) = p.pressure_interval();
    for k in 0..=40 {
        let x = lo + (hi - lo) * k as f64 / 40.0;
        let h = 1e-3 * x.abs().max(1.0) * 1e-3;
        let (_, ds) = m.saturation(x);
        let fd = (m.saturation(x + h).0 - m.saturation(x - h).0) / (2.0 * h);
        assert!(((ds - fd) / ds).abs() <= 1e-6, "p = {x}: {ds} vs {fd}");
    }
}

#[test]
fn galerkin_operator_is_the_triple_product() {
    let p = problem(N, 1e6, 7);
    let ops = system(&p);
    let b = basis(&p, N_COARSE, 4);
    let pr = Prolongation::assemble(&b, &p.dofs, 3, 4);
    let l = ops.system.to_dense();
    let pd = pr.matrix.to_dense();
    let reference = dense_mul(&pd.transpose(), &dense_mul(&l, &pd));
    let coarse = CoarseOperator::new(&ops.system, &pr).unwrap();
    assert_eq!(coarse.dim(), pr.n_coarse());
    let diff: Vec<f64> = coarse
        .matrix
        .as_slice()
        .iter()
        .zip(reference.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    assert!(norm(&diff) <= 1e-12 * reference.norm_fro());
}

#[test]
fn split_coarse_operator_matches_the_plain_one() {
    let p = problem(N, 50.0, 11);
    let ops = system(&p);
    let (soft, root) = ops.robin_splitting(&p).unwrap();
    let b = basis(&p, N_COARSE, 3);
    let pr = Prolongation::assemble(&b, &p.dofs, 3, 3);
    let plain = CoarseOperator::new(&ops.system, &pr).unwrap();
    let split = CoarseOperator::from_split(&soft, &root, &pr).unwrap();
    let n = pr.n_coarse();
    let r: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) * 1e3).collect();
    let (mut a, mut c) = (vec![0.0; n], vec![0.0; n]);
    plain.solve_into(&r, &mut a);
    split.solve_into(&r, &mut c);
    assert!(norm(&a.iter().zip(&c).map(|(x, y)| x - y).collect::<Vec<_>>()) <= 1e-8 * norm(&a));
}

#[test]
fn coarse_range_converges_in_one_iteration() {
    for gamma in [0.0, 1e6] {
        let p = problem(16, gamma, 13);
        let ops = system(&p);
        let (soft, root) = ops.robin_splitting(&p).unwrap();
        let b = basis(&p, 4, 4);
        let cfg = TwoGridConfig::new(
            SmootherConfig {
                kind: SmootherKind::GaussSeidel,
                sweeps: 1,
            },
            4,
            4,
        );
        let tg = TwoGridSolver::setup_split(ops.system.clone(), Some((&soft, &root)), &b, &p.dofs, cfg, None).unwrap();
        let pr = tg.prolongation();
        let c: Vec<f64> = (0..pr.n_coarse()).map(|i| (i as f64 * 0.37).sin()).collect();
        let x_true = pr.prolong(&c);
        let rhs = ops.system.spmv(&x_true).unwrap();
        let mut x = vec![0.0; rhs.len()];
        tg.coarse_correction(&rhs, &mut x);
        if gamma == 0.0 {
            let err = max_abs_diff(&x, &x_true) / x_true.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err <= 1e-10, "coarse correction error {err}");
        }
        let (_, report) = tg.solve_with_report(&rhs, None).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1, "gamma {gamma}: {:?}", report.residual_history);
    }
}

#[test]
fn constant_pressure_is_representable() {
    let p = problem(16, 1e6, 17);
    let b = basis(&p, 4, 2);
    let pr = Prolongation::assemble(&b, &p.dofs, 1, 0);
    // the lowest pressure mode is constant on each patch; scale it to one
    let c: Vec<f64> = b.patches.iter().map(|patch| 1.0 / patch.pressure_vector(0)[0]).collect();
    let x = pr.prolong(&c);
    let np = p.n_pressure();
    assert!(max_abs_diff(&x[..np], &vec![1.0; np]) <= 1e-10);
    assert!(x[np..].iter().all(|&v| v == 0.0));
}
