use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use conic_admm::admm::{
    build_projectors, initial_spadmm2s, initial_spadmm3c, run_admm_direct, run_spadmm2,
    run_spadmm2s, run_spadmm3c, BlockOracle, DenseMap, IdentityMap, Iterate, LinearMap, Measure,
    Monitor, RunState, SplittingConfig, Status,
};
use conic_admm::cones::project_nonneg_vector;
use conic_admm::Error;

struct Nonneg(IdentityMap);

impl BlockOracle for Nonneg {
    fn map(&self) -> &dyn LinearMap {
        &self.0
    }

    fn solve(
        &self,
        t: &DVector<f64>,
        _: f64,
        _: &DVector<f64>,
    ) -> conic_admm::Result<DVector<f64>> {
        Ok(project_nonneg_vector(t))
    }
}

/// `½‖z - a‖²` with `G* z = M z`.
struct Quadratic {
    map: DenseMap,
    m: DMatrix<f64>,
    a: DVector<f64>,
}

impl BlockOracle for Quadratic {
    fn map(&self) -> &dyn LinearMap {
        &self.map
    }

    fn solve(
        &self,
        t: &DVector<f64>,
        sigma: f64,
        _: &DVector<f64>,
    ) -> conic_admm::Result<DVector<f64>> {
        let p = self.m.ncols();
        let lhs = DMatrix::identity(p, p) + sigma * self.m.tr_mul(&self.m);
        Ok(lhs
            .cholesky()
            .unwrap()
            .solve(&(&self.a + sigma * self.m.tr_mul(t))))
    }
}

struct Instance {
    f: Nonneg,
    g: Quadratic,
    h: DenseMap,
    b: DVector<f64>,
    c: DVector<f64>,
}

fn instance(seed: u64) -> Instance {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let d = r.gen_range(5..=10);
    let p = r.gen_range(2..=4);
    let m = r.gen_range(1..=3);
    let mut mat = |rows, cols| DMatrix::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0));
    let gm = mat(d, p);
    let a = mat(p, 1).column(0).into_owned();
    let h = DenseMap::new(mat(d, m));
    let b = mat(m, 1).column(0).into_owned();
    let c = mat(d, 1).column(0).into_owned();
    Instance {
        f: Nonneg(IdentityMap::new(d)),
        g: Quadratic {
            map: DenseMap::new(gm.clone()),
            m: gm,
            a,
        },
        h,
        b,
        c,
    }
}

fn fixed(max_iters: usize, sigma: f64) -> SplittingConfig {
    SplittingConfig {
        sigma0: sigma,
        max_iters,
        tol: 1e-300,
        sigma_policy: None,
        stall_window: 0,
        ..SplittingConfig::default()
    }
}

fn silent(_: usize, _: &Iterate, _: f64, _: f64) -> conic_admm::Result<Measure> {
    Ok(Measure {
        eta: 1.0,
        primal: 1.0,
        dual: 1.0,
        exact: false,
        primal_objective: 0.0,
        dual_objective: 0.0,
    })
}

#[test]
fn three_block_multiplier_stays_on_affine_set() {
    for seed in 0..5 {
        let p = instance(seed);
        let proj = build_projectors(&p.h, p.b.clone()).unwrap();
        let d = p.c.len();
        let start = initial_spadmm3c(
            &p.f,
            &p.g,
            &proj,
            &p.c,
            DVector::zeros(d),
            DVector::zeros(p.g.m.ncols()),
            &DVector::from_element(d, 3.0),
        );
        let mut worst: f64 = 0.0;
        let mut monitor = |k: usize, it: &Iterate, s: f64, t: f64| {
            let scale = 1.0 + p.b.norm() + it.x.norm();
            worst = worst.max((p.h.apply(&it.x) - &p.b).norm() / scale);
            silent(k, it, s, t)
        };
        let cfg = fixed(500, 50.0);
        run_spadmm3c(
            &p.f,
            &p.g,
            &proj,
            &p.c,
            RunState::new(start, &cfg),
            &cfg,
            &mut monitor,
        )
        .unwrap();
        assert!(worst <= 1e-13, "seed {seed}: {worst:e}");
    }
}

#[test]
fn preconditions_are_checked() {
    let p = instance(9);
    let proj = build_projectors(&p.h, p.b.clone()).unwrap();
    let d = p.c.len();
    let q = p.g.m.ncols();
    let w = p.b.len();
    let cfg = fixed(5, 1.0);
    let off_affine = Iterate {
        blocks: vec![DVector::zeros(d), DVector::zeros(q), DVector::zeros(w)],
        x: p.h.adjoint(&DVector::from_element(w, 1.0)) * 7.0,
    };
    let e = run_spadmm3c(
        &p.f,
        &p.g,
        &proj,
        &p.c,
        RunState::new(off_affine, &cfg),
        &cfg,
        &mut silent,
    )
    .unwrap_err();
    assert!(matches!(e, Error::Precondition(_)), "{e}");

    let outside_q = Iterate {
        blocks: vec![DVector::zeros(d), DVector::zeros(q)],
        x: p.h.adjoint(&DVector::from_element(w, 1.0)),
    };
    let e = run_spadmm2s(
        &p.f,
        &p.g,
        &proj,
        &p.c,
        RunState::new(outside_q, &cfg),
        &cfg,
        &mut silent,
    )
    .unwrap_err();
    assert!(matches!(e, Error::Precondition(_)), "{e}");

    let short = Iterate {
        blocks: vec![DVector::zeros(d)],
        x: DVector::zeros(d),
    };
    let e = run_spadmm2s(
        &p.f,
        &p.g,
        &proj,
        &p.c,
        RunState::new(short, &cfg),
        &cfg,
        &mut silent,
    )
    .unwrap_err();
    assert!(matches!(e, Error::DimensionMismatch { .. }), "{e}");
}

#[test]
fn direct_two_block_is_bit_identical_to_two_block_admm() {
    for seed in 0..5 {
        let p = instance(20 + seed);
        let d = p.c.len();
        let start = Iterate {
            blocks: vec![DVector::zeros(d), DVector::zeros(p.g.m.ncols())],
            x: DVector::from_element(d, 0.5),
        };
        let cfg = SplittingConfig {
            safeguard: false,
            ..fixed(200, 1.3)
        };
        let oracles: [&dyn BlockOracle; 2] = [&p.f, &p.g];
        let a = run_admm_direct(
            &oracles,
            &p.c,
            RunState::new(start.clone(), &cfg),
            &cfg,
            &mut silent,
        )
        .unwrap();
        let b = run_spadmm2(
            &p.f,
            Some(&p.g),
            &p.c,
            RunState::new(start, &cfg),
            &cfg,
            &mut silent,
        )
        .unwrap();
        assert_eq!(a.iterate, b.iterate, "seed {seed}");
    }
}

#[test]
fn reduced_scheme_multiplier_stays_in_range_of_q() {
    let p = instance(31);
    let proj = build_projectors(&p.h, p.b.clone()).unwrap();
    let d = p.c.len();
    let start = initial_spadmm2s(
        &proj,
        DVector::zeros(d),
        DVector::zeros(p.g.m.ncols()),
        &DVector::from_element(d, 1.0),
    );
    let mut worst: f64 = 0.0;
    let mut monitor = |k: usize, it: &Iterate, s: f64, t: f64| {
        worst = worst.max(p.h.apply(&it.x).norm());
        silent(k, it, s, t)
    };
    let cfg = fixed(300, 1.0);
    run_spadmm2s(
        &p.f,
        &p.g,
        &proj,
        &p.c,
        RunState::new(start, &cfg),
        &cfg,
        &mut monitor,
    )
    .unwrap();
    assert!(worst <= 1e-10, "{worst:e}");
}

/// Stops as soon as the monitor reports convergence, and resumes where a
/// run left off. The resumed run restarts the drift-correction schedule, so
/// it matches the uninterrupted one only up to rounding.
#[test]
fn convergence_and_resume() {
    let p = instance(40);
    let proj = build_projectors(&p.h, p.b.clone()).unwrap();
    let d = p.c.len();
    let start = initial_spadmm3c(
        &p.f,
        &p.g,
        &proj,
        &p.c,
        DVector::zeros(d),
        DVector::zeros(p.g.m.ncols()),
        &DVector::zeros(d),
    );
    let stop_at = |k_stop: usize| {
        move |k: usize, it: &Iterate, s: f64, t: f64| -> conic_admm::Result<Measure> {
            let mut m = silent(k, it, s, t)?;
            if k == k_stop {
                m.eta = 0.0;
                m.exact = true;
            }
            Ok(m)
        }
    };
    let cfg = fixed(100, 1.0);
    let mut mon: Box<dyn Monitor> = Box::new(stop_at(17));
    let first = run_spadmm3c(
        &p.f,
        &p.g,
        &proj,
        &p.c,
        RunState::new(start.clone(), &cfg),
        &cfg,
        mon.as_mut(),
    )
    .unwrap();
    assert_eq!(first.log.status, Some(Status::Converged));
    assert_eq!(first.iterations(), 17);

    let mut straight: Box<dyn Monitor> = Box::new(stop_at(40));
    let whole = run_spadmm3c(
        &p.f,
        &p.g,
        &proj,
        &p.c,
        RunState::new(start, &cfg),
        &cfg,
        straight.as_mut(),
    )
    .unwrap();
    let mut rest: Box<dyn Monitor> = Box::new(stop_at(40));
    let resumed = run_spadmm3c(&p.f, &p.g, &proj, &p.c, first, &cfg, rest.as_mut()).unwrap();
    assert_eq!(resumed.iterations(), 40);
    for (a, b) in resumed.iterate.blocks.iter().zip(&whole.iterate.blocks) {
        assert!((a - b).amax() <= 1e-10);
    }
    assert!((&resumed.iterate.x - &whole.iterate.x).amax() <= 1e-10);
}

/// Indicator of `{0}`.
struct Zero(IdentityMap);

impl BlockOracle for Zero {
    fn map(&self) -> &dyn LinearMap {
        &self.0
    }

    fn solve(
        &self,
        t: &DVector<f64>,
        _: f64,
        _: &DVector<f64>,
    ) -> conic_admm::Result<DVector<f64>> {
        Ok(DVector::zeros(t.len()))
    }
}

fn size_of_iterate(_: usize, it: &Iterate, _: f64, _: f64) -> conic_admm::Result<Measure> {
    let eta = it.blocks.iter().map(|b| b.norm()).sum::<f64>() + it.x.norm();
    Ok(Measure {
        eta,
        primal: eta,
        dual: eta,
        exact: true,
        primal_objective: 0.0,
        dual_objective: 0.0,
    })
}

#[test]
fn zero_instances_converge_at_first_iteration() {
    let d = 4;
    let f = Zero(IdentityMap::new(d));
    let g = Zero(IdentityMap::new(d));
    let h = DenseMap::new(DMatrix::from_fn(d, 2, |i, j| {
        (i + 2 * j) as f64 + 1.0 + (i == j) as u8 as f64
    }));
    let proj = build_projectors(&h, DVector::zeros(2)).unwrap();
    let c = DVector::zeros(d);
    let cfg = SplittingConfig::default();
    let zeros = |k: usize| vec![DVector::zeros(d); k];
    let all_zero = |s: &RunState| {
        s.iterate.blocks.iter().all(|b| b.iter().all(|&v| v == 0.0))
            && s.iterate.x.iter().all(|&v| v == 0.0)
    };

    let start = initial_spadmm3c(
        &f,
        &g,
        &proj,
        &c,
        DVector::zeros(d),
        DVector::zeros(d),
        &DVector::zeros(d),
    );
    let s = run_spadmm3c(
        &f,
        &g,
        &proj,
        &c,
        RunState::new(start, &cfg),
        &cfg,
        &mut size_of_iterate,
    )
    .unwrap();
    assert_eq!((s.log.status, s.iterations()), (Some(Status::Converged), 1));
    assert!(all_zero(&s));

    let start = Iterate {
        blocks: zeros(2),
        x: DVector::zeros(d),
    };
    let s = run_spadmm2(
        &f,
        Some(&g),
        &c,
        RunState::new(start, &cfg),
        &cfg,
        &mut size_of_iterate,
    )
    .unwrap();
    assert_eq!((s.log.status, s.iterations()), (Some(Status::Converged), 1));
    assert!(all_zero(&s));

    let start = Iterate {
        blocks: zeros(3),
        x: DVector::zeros(d),
    };
    let oracles: [&dyn BlockOracle; 3] = [&f, &g, &Zero(IdentityMap::new(d))];
    let s = run_admm_direct(
        &oracles,
        &c,
        RunState::new(start, &cfg),
        &cfg,
        &mut size_of_iterate,
    )
    .unwrap();
    assert_eq!((s.log.status, s.iterations()), (Some(Status::Converged), 1));
    assert!(all_zero(&s));
}
