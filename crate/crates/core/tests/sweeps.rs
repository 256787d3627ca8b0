//! Heavier randomized stress sweeps over fresh seeds, run on demand:
//!
//! ```text
//! cargo test -p dualcert --test sweeps -- --ignored --nocapture
//! ```
use dualcert::face::{self, Detection};
use dualcert::harness::{self, oracles, PlantedFaceSpec};
use dualcert::rng;
use dualcert::symmat::{self, SymMat};
use dualcert::SolverConfig;
use rand::Rng;

#[test]
#[ignore]
fn sweep_empty_face_detection() {
    let mut empty = 0;
    let mut inconclusive = 0;
    let mut found = 0;
    for trial in 0..600u64 {
        let n = 3 + (trial as usize) % 6;
        let m = 1 + (trial as usize * 7) % n;
        let inst = harness::gen_phaselift(n, m, 500_000 + trial * 13).unwrap();
        match face::find_psd_in_span(&inst.ms, &inst.gt, &SolverConfig::with_seed(trial)).unwrap() {
            Detection::Empty => empty += 1,
            Detection::Inconclusive { .. } => inconclusive += 1,
            Detection::Found(_) => {
                found += 1;
                eprintln!("FOUND at trial {trial} n={n} m={m}");
            }
        }
    }
    eprintln!("empty={empty} inconclusive={inconclusive} found={found}");
    assert_eq!(found, 0);
}

#[test]
#[ignore]
fn sweep_perturbation_agreement() {
    let mut rng = rng::substream(123456, 99);
    let mut disagreements = 0;
    for case in 0..2000u64 {
        let n = 2 + (case as usize) % 5;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.4..1.4)).collect();
        let l = SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let s = symmat::positive_perturbation(&x0, &l).unwrap();
        let g = oracles::oracle_perturbation_grid(&x0, &l).unwrap();
        if s.is_some() != g.is_some() {
            disagreements += 1;
            eprintln!("case {case}: structural {s:?} grid {g:?}");
        }
    }
    eprintln!("disagreements={disagreements}/2000");
    assert_eq!(disagreements, 0);
}

#[test]
#[ignore]
fn sweep_planted_rank2_completion() {
    for seed in 0..30u64 {
        let n = 4 + (seed as usize) % 3;
        let mut rng = rng::substream(33_000 + seed, 7);
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.4..1.2)).collect();
        let basis = symmat::orthocomplement_basis(&x0);
        let inst = harness::gen_planted_face(&PlantedFaceSpec {
            n,
            x0,
            rays: vec![basis[0].clone(), basis[1].clone()],
            fillers: 1,
            seed: 33_000 + seed,
        })
        .unwrap();
        let cfg = SolverConfig::with_seed(seed);
        let (done, log) =
            dualcert::regularize::complete_problem(&inst.ms, &inst.gt, &cfg).unwrap();
        assert_eq!(
            log.status,
            dualcert::regularize::RegularizationStatus::Completed,
            "seed {seed}"
        );
        let rep = dualcert::cone::completeness_check(&done, &inst.gt, &cfg).unwrap();
        assert!(rep.complete, "seed {seed}: {:?}", rep.violations);
        let eq = dualcert::regularize::verify_equivalence(&inst.ms, &done, &inst.gt, 10, seed)
            .unwrap();
        assert!(eq.equivalent, "seed {seed}: violation {}", eq.max_violation);
    }
    eprintln!("30/30 rank-2 planted faces completed, audited complete, equivalent");
}

#[test]
#[ignore]
fn sweep_membership_oracle_agreement() {
    use dualcert::cone;
    use dualcert::operator::{GroundTruth, MeasurementSet};
    let cfg = SolverConfig::default();
    let mut rng = rng::substream(555, 66);
    let mut inconclusive = 0;
    let mut checked = 0;
    for case in 0..800usize {
        let n = 2 + case % 2;
        let m = 1 + case % 2;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..1.2)).collect();
        let gt = GroundTruth::new(x0.clone()).unwrap();
        let mats: Vec<SymMat> = (0..m)
            .map(|_| SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let values: Vec<f64> = mats.iter().map(|a| a.hs_inner(gt.lifted()).unwrap()).collect();
        let ms = MeasurementSet::from_parts(n, mats, values).unwrap();
        let y = match case % 5 {
            0 | 1 => {
                let lam: Vec<f64> = (0..m)
                    .map(|_| (rng.gen_range(-300..=300) as f64) * 0.01)
                    .collect();
                let mut y = ms.adjoint(&lam).unwrap();
                for b in symmat::orthocomplement_basis(&x0) {
                    y.add_scaled(-rng.gen_range(0.2..1.5), &SymMat::outer(&b));
                }
                y
            }
            2 => {
                let lam: Vec<f64> = (0..m)
                    .map(|_| (rng.gen_range(-300..=300) as f64) * 0.01)
                    .collect();
                let comp = symmat::orthocomplement_basis(&x0);
                let mut y = ms.adjoint(&lam).unwrap();
                y.add_scaled(rng.gen_range(0.5..1.5), &SymMat::outer(&comp[0]));
                y
            }
            _ => SymMat::from_fn(n, |_, _| rng.gen_range(-2.0..2.0)),
        };
        let fast = cone::in_s(&y, &ms, &gt, &cfg).unwrap();
        if fast.is_inconclusive() {
            inconclusive += 1;
            continue;
        }
        let slow = oracles::oracle_in_s_grid(&y, &ms, &gt).unwrap();
        assert_eq!(fast.is_member(), slow, "case {case}");
        checked += 1;
    }
    eprintln!("checked={checked} inconclusive={inconclusive}");
    assert!(inconclusive < 40);
}
