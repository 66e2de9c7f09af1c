use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optim::{cobyla_minimize, nft_minimize, spsa_minimize};
use super::{
    ExperimentResult, InitialPoint, IterationRecord, OptimizerKind, RunOutcome, VqeConfig,
    VqeError,
};
use crate::quantum::{
    argmax_state, evaluate_ansatz, expectation, marginals, sample, AnsatzSpec, Observable,
    StateVector,
};
use crate::qubo::{ising_to_observable, qubo_to_ising, HamiltonianSequence, QuboProblem};

/// Observable minimized for one sequence entry: the Ising form of the QUBO
/// plus the configured transverse field.
pub fn segment_observable(q: &QuboProblem, transverse_field: f64) -> Observable {
    ising_to_observable(&qubo_to_ising(q).with_transverse_field(transverse_field))
}

/// Runs one optimization of `obs` from `initial`, producing a record per
/// cost evaluation.
///
/// `on_record` sees each record before the next evaluation starts; returning
/// `Break` stops the run, and the outcome is marked `cancelled`.
pub fn run_vqe<F>(
    obs: &Observable,
    ansatz: &AnsatzSpec,
    cfg: &VqeConfig,
    budget: usize,
    initial: &[f64],
    mut on_record: F,
) -> Result<RunOutcome, VqeError>
where
    F: FnMut(&IterationRecord) -> ControlFlow<()>,
{
    let mut records = Vec::new();
    let (final_params, cancelled) = run_segment(
        &Segment {
            obs,
            ansatz,
            cfg,
            budget,
            index: 0,
            first_record: 0,
        },
        initial,
        &mut records,
        &mut on_record,
    )?;
    Ok(RunOutcome {
        records,
        final_params,
        cancelled,
    })
}

/// Runs every entry of `seq` in order, each starting where the previous one
/// ended. Budgets come from `cfg.iterations`.
pub fn run_sequence<F>(
    seq: &HamiltonianSequence,
    cfg: &VqeConfig,
    mut on_record: F,
) -> Result<ExperimentResult, VqeError>
where
    F: FnMut(&IterationRecord) -> ControlFlow<()>,
{
    cfg.validate()?;
    if seq.len() != cfg.sequence_length {
        return Err(VqeError::SequenceLength {
            expected: cfg.sequence_length,
            got: seq.len(),
        });
    }
    if seq.n() != cfg.size {
        return Err(VqeError::SizeMismatch {
            ansatz: cfg.size,
            observable: seq.n(),
        });
    }
    let ansatz = cfg.ansatz();
    let operators: Vec<Observable> = seq
        .entries()
        .iter()
        .map(|q| segment_observable(q, cfg.transverse_field))
        .collect();

    let mut params = initial_params(&ansatz, cfg);
    let mut records = Vec::new();
    let mut boundaries = Vec::new();
    let mut ends = Vec::new();
    let mut aborted = false;
    for (k, obs) in operators.iter().enumerate() {
        boundaries.push(records.len());
        let segment = Segment {
            obs,
            ansatz: &ansatz,
            cfg,
            budget: cfg.iterations[k],
            index: k,
            first_record: records.len(),
        };
        let (end, cancelled) = run_segment(&segment, &params, &mut records, &mut on_record)?;
        ends.push(end.clone());
        params = end;
        if cancelled {
            aborted = true;
            break;
        }
    }

    Ok(ExperimentResult {
        id: cfg.nextpathid.clone(),
        config: cfg.clone(),
        sequence: seq.clone(),
        operators,
        records,
        final_params: params,
        segment_final_params: ends,
        segment_boundaries: boundaries,
        aborted,
    })
}

fn initial_params(ansatz: &AnsatzSpec, cfg: &VqeConfig) -> Vec<f64> {
    let p = ansatz.parameter_count();
    match cfg.initial_point {
        InitialPoint::Zero => vec![0.0; p],
        InitialPoint::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, u64::MAX));
            (0..p)
                .map(|_| rng.gen_range(-core::f64::consts::PI..core::f64::consts::PI))
                .collect()
        }
    }
}

struct Segment<'a> {
    obs: &'a Observable,
    ansatz: &'a AnsatzSpec,
    cfg: &'a VqeConfig,
    budget: usize,
    index: usize,
    first_record: usize,
}

enum Abort {
    Cancelled,
    Failed(VqeError),
}

impl From<VqeError> for Abort {
    fn from(e: VqeError) -> Self {
        Abort::Failed(e)
    }
}

/// Diagonal part as a lookup table, off-diagonal part evaluated directly.
struct Energy {
    diagonal: Vec<f64>,
    rest: Option<Observable>,
}

impl Energy {
    fn new(obs: &Observable) -> Self {
        let (diag, off): (Vec<_>, Vec<_>) =
            obs.terms().iter().cloned().partition(|t| t.is_diagonal());
        let n = obs.n_qubits();
        let diagonal = Observable::new(n, diag)
            .map(|o| o.diagonal_values())
            .unwrap_or_else(|_| vec![0.0; 1 << n]);
        let rest = if off.is_empty() {
            None
        } else {
            Observable::new(n, off).ok()
        };
        Self { diagonal, rest }
    }

    fn of(&self, state: &StateVector) -> Result<f64, VqeError> {
        let mut e: f64 = state
            .amplitudes()
            .iter()
            .zip(&self.diagonal)
            .map(|(a, d)| a.norm_sqr() * d)
            .sum();
        if let Some(rest) = &self.rest {
            e += expectation(state, rest)?;
        }
        Ok(e)
    }
}

fn run_segment<F>(
    seg: &Segment<'_>,
    initial: &[f64],
    records: &mut Vec<IterationRecord>,
    on_record: &mut F,
) -> Result<(Vec<f64>, bool), VqeError>
where
    F: FnMut(&IterationRecord) -> ControlFlow<()>,
{
    let cfg = seg.cfg;
    if seg.budget == 0 {
        return Err(VqeError::Budget {
            segment: seg.index,
        });
    }
    if seg.obs.n_qubits() != seg.ansatz.n_qubits {
        return Err(VqeError::SizeMismatch {
            ansatz: seg.ansatz.n_qubits,
            observable: seg.obs.n_qubits(),
        });
    }
    let expected = seg.ansatz.parameter_count();
    if initial.len() != expected {
        return Err(VqeError::ParameterCount {
            expected,
            got: initial.len(),
        });
    }
    if cfg.shots != 0 && !seg.obs.is_diagonal() {
        return Err(VqeError::SampledTransverseField);
    }

    let energy = Energy::new(seg.obs);
    let start = records.len();
    let mut cost = |x: &[f64]| -> Result<f64, Abort> {
        let index = records.len() + seg.first_record - start;
        let state = evaluate_ansatz(seg.ansatz, x).map_err(VqeError::from)?;
        let e = energy.of(&state)?;
        if !e.is_finite() {
            return Err(VqeError::NonFinite {
                index,
                params: x.to_vec(),
            }
            .into());
        }
        let distribution = sample(&state, cfg.shots, mix(cfg.seed, index as u64));
        let record = IterationRecord {
            index,
            segment: seg.index,
            params: x.to_vec(),
            energy: e,
            marginals: marginals(&distribution),
            argmax: argmax_state(&distribution).map_err(VqeError::from)?,
            distribution,
        };
        records.push(record);
        match on_record(records.last().expect("just pushed")) {
            ControlFlow::Continue(()) => Ok(e),
            ControlFlow::Break(()) => Err(Abort::Cancelled),
        }
    };

    let optimized = match cfg.optimizer_name {
        OptimizerKind::Nft => nft_minimize(&mut cost, initial, &cfg.nft, seg.budget).map(|m| m.x),
        OptimizerKind::Spsa => spsa_minimize(
            &mut cost,
            initial,
            &cfg.spsa,
            mix(cfg.seed, seg.index as u64 ^ 0x5350_5341),
            seg.budget,
        )
        .map(|m| m.x),
        OptimizerKind::Cobyla => {
            cobyla_minimize(|x, _| cost(x), 0, initial, &cfg.cobyla, seg.budget).map(|r| r.x)
        }
    };
    match optimized {
        Ok(x) => Ok((x, false)),
        Err(Abort::Cancelled) => {
            let last = records.last().map_or_else(|| initial.to_vec(), |r| r.params.clone());
            Ok((last, true))
        }
        Err(Abort::Failed(e)) => Err(e),
    }
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{Entanglement, PauliTerm};
    use crate::qubo::{chord_qubo, chromatic_labels, ChordMode};
    use alloc::string::String;
    use alloc::vec::Vec;
    use std::format;

    fn z1() -> Observable {
        Observable::new(1, vec![PauliTerm::parse(1.0, "Z").unwrap()]).unwrap()
    }

    fn cfg(opt: OptimizerKind, size: usize) -> VqeConfig {
        VqeConfig {
            optimizer_name: opt,
            size,
            ..VqeConfig::default()
        }
    }

    fn small_chord(n: usize, chord: &[usize]) -> QuboProblem {
        let labels = (0..n).map(|i| format!("q{i}")).collect();
        chord_qubo(labels, chord, ChordMode::Linear).unwrap()
    }

    const ALL: [OptimizerKind; 3] = [OptimizerKind::Nft, OptimizerKind::Spsa, OptimizerKind::Cobyla];

    #[test]
    fn single_qubit_z_reaches_minus_one() {
        let c = cfg(OptimizerKind::Nft, 1);
        let spec = c.ansatz();
        let init = vec![0.0; spec.parameter_count()];
        let out = run_vqe(&z1(), &spec, &c, 10, &init, |_| ControlFlow::Continue(())).unwrap();
        let state = evaluate_ansatz(&spec, &out.final_params).unwrap();
        let e = expectation(&state, &z1()).unwrap();
        assert!((e + 1.0).abs() < 1e-6, "{e}");
        assert!(out.records.len() <= 10);
    }

    #[test]
    fn budget_one_gives_one_record_at_the_initial_point() {
        for opt in ALL {
            let c = cfg(opt, 1);
            let spec = c.ansatz();
            let init = [0.1, 0.2, 0.3, 0.4];
            let out = run_vqe(&z1(), &spec, &c, 1, &init, |_| ControlFlow::Continue(())).unwrap();
            assert_eq!(out.records.len(), 1, "{opt:?}");
            assert_eq!(out.final_params, init, "{opt:?}");
            assert_eq!(out.records[0].params, init);
        }
    }

    #[test]
    fn records_match_evaluations_and_energies() {
        let q = small_chord(4, &[0, 2]);
        let obs = segment_observable(&q, 0.0);
        for opt in ALL {
            let c = VqeConfig {
                reps: 2,
                entanglement: Entanglement::Circular,
                ..cfg(opt, 4)
            };
            let spec = c.ansatz();
            let mut seen = 0;
            let init = vec![0.0; spec.parameter_count()];
            let out = run_vqe(&obs, &spec, &c, 60, &init, |r| {
                assert_eq!(r.index, seen);
                seen += 1;
                ControlFlow::Continue(())
            })
            .unwrap();
            assert_eq!(out.records.len(), seen);
            assert!(seen <= 60);
            for r in &out.records {
                let state = evaluate_ansatz(&spec, &r.params).unwrap();
                let e = expectation(&state, &obs).unwrap();
                assert!((r.energy - e).abs() < 1e-9, "{opt:?}");
                assert_eq!(r.marginals, marginals(&r.distribution));
                assert_eq!(r.argmax, argmax_state(&r.distribution).unwrap());
            }
        }
    }

    #[test]
    fn exact_runs_are_deterministic() {
        let q = small_chord(3, &[1]);
        let obs = segment_observable(&q, 0.0);
        for opt in ALL {
            let c = VqeConfig { seed: 11, ..cfg(opt, 3) };
            let spec = c.ansatz();
            let init = vec![0.0; spec.parameter_count()];
            let run = || run_vqe(&obs, &spec, &c, 40, &init, |_| ControlFlow::Continue(())).unwrap();
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn sampled_distributions_follow_the_seed() {
        let q = small_chord(3, &[0, 1]);
        let obs = segment_observable(&q, 0.0);
        let c = VqeConfig { shots: 256, seed: 4, ..cfg(OptimizerKind::Spsa, 3) };
        let spec = c.ansatz();
        let init = vec![0.3; spec.parameter_count()];
        let run = |c: &VqeConfig| run_vqe(&obs, &spec, c, 15, &init, |_| ControlFlow::Continue(())).unwrap();
        let a = run(&c);
        assert_eq!(a, run(&c));
        assert!(a.records.iter().all(|r| r.distribution.shots() == 256));
        let b = run(&VqeConfig { seed: 5, ..c.clone() });
        assert_ne!(a.records[0].distribution, b.records[0].distribution);
        // The optimizer always sees exact energies.
        assert_eq!(a.records[0].energy, b.records[0].energy);
    }

    #[test]
    fn nft_updates_never_raise_the_energy() {
        let q = small_chord(4, &[1, 3]);
        let obs = segment_observable(&q, 0.0);
        let spec = AnsatzSpec::new(4, 2, Entanglement::Full);
        let exact = |x: &[f64]| expectation(&evaluate_ansatz(&spec, x).unwrap(), &obs).unwrap();
        let x0: Vec<f64> = (0..spec.parameter_count()).map(|i| 0.37 * i as f64).collect();
        let mut state = super::super::optim::NftState::new(x0.clone(), exact(&x0), Default::default());
        let mut before = exact(&x0);
        for _ in 0..3 * spec.parameter_count() {
            state
                .step::<core::convert::Infallible>(&mut |x| Ok(exact(x)))
                .unwrap();
            let after = exact(state.x());
            assert!(after <= before + 1e-9, "{before} -> {after}");
            assert!((after - state.fx()).abs() < 1e-9);
            before = after;
        }
    }

    #[test]
    fn cancellation_keeps_the_partial_records() {
        let q = small_chord(3, &[2]);
        let obs = segment_observable(&q, 0.0);
        let c = cfg(OptimizerKind::Cobyla, 3);
        let spec = c.ansatz();
        let init = vec![0.0; spec.parameter_count()];
        let out = run_vqe(&obs, &spec, &c, 100, &init, |r| {
            if r.index == 4 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .unwrap();
        assert!(out.cancelled);
        assert_eq!(out.records.len(), 5);
        assert_eq!(out.final_params, out.records[4].params);
    }

    #[test]
    fn invalid_runs_are_rejected() {
        let c = cfg(OptimizerKind::Nft, 1);
        let spec = c.ansatz();
        let init = vec![0.0; 4];
        let go = |obs: &Observable, budget, init: &[f64], c: &VqeConfig| {
            run_vqe(obs, &spec, c, budget, init, |_| ControlFlow::Continue(()))
        };
        assert_eq!(go(&z1(), 0, &init, &c), Err(VqeError::Budget { segment: 0 }));
        assert_eq!(
            go(&z1(), 5, &[0.0; 3], &c),
            Err(VqeError::ParameterCount { expected: 4, got: 3 })
        );
        let two = Observable::new(2, vec![PauliTerm::parse(1.0, "ZZ").unwrap()]).unwrap();
        assert_eq!(
            go(&two, 5, &init, &c),
            Err(VqeError::SizeMismatch { ansatz: 1, observable: 2 })
        );
        let x = Observable::new(1, vec![PauliTerm::parse(1.0, "X").unwrap()]).unwrap();
        let sampled = VqeConfig { shots: 10, ..c.clone() };
        assert_eq!(go(&x, 5, &init, &sampled), Err(VqeError::SampledTransverseField));
    }

    #[test]
    fn transverse_field_runs_in_exact_mode() {
        let q = small_chord(2, &[0]);
        let obs = segment_observable(&q, 0.5);
        assert!(!obs.is_diagonal());
        let c = cfg(OptimizerKind::Nft, 2);
        let spec = c.ansatz();
        let init = vec![0.0; spec.parameter_count()];
        let out = run_vqe(&obs, &spec, &c, 30, &init, |_| ControlFlow::Continue(())).unwrap();
        for r in &out.records {
            let e = expectation(&evaluate_ansatz(&spec, &r.params).unwrap(), &obs).unwrap();
            assert!((r.energy - e).abs() < 1e-9);
        }
    }

    fn progression(n: usize, chords: &[&[usize]]) -> HamiltonianSequence {
        HamiltonianSequence::new(chords.iter().map(|c| small_chord(n, c)).collect()).unwrap()
    }

    #[test]
    fn sequences_chain_parameters() {
        let seq = progression(3, &[&[0], &[1, 2], &[0, 2]]);
        for opt in ALL {
            let c = VqeConfig {
                sequence_length: 3,
                iterations: vec![20, 15, 25],
                ..cfg(opt, 3)
            };
            let mut streamed = 0;
            let res = run_sequence(&seq, &c, |_| {
                streamed += 1;
                ControlFlow::Continue(())
            })
            .unwrap();
            assert_eq!(streamed, res.records.len());
            assert_eq!(res.segment_boundaries.len(), 3);
            assert_eq!(res.segment_boundaries[0], 0);
            assert!(res.segment_boundaries.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(res.records[0].params, vec![0.0; c.ansatz().parameter_count()]);
            for (i, r) in res.records.iter().enumerate() {
                assert_eq!(r.index, i);
            }
            for k in 0..3 {
                let seg = res.segment(k);
                assert!(seg.len() <= c.iterations[k]);
                assert!(seg.iter().all(|r| r.segment == k));
            }
            for k in 1..3 {
                assert_eq!(res.segment(k)[0].params, res.segment_final_params[k - 1]);
            }
            assert_eq!(res.segment_final_params[2], res.final_params);
            if opt != OptimizerKind::Spsa {
                // SPSA draws its directions from a per-segment stream, so only
                // the deterministic optimizers can be replayed segment-wise.
                let spec = c.ansatz();
                let start = &res.segment_final_params[0];
                let alone = run_vqe(&res.operators[1], &spec, &c, c.iterations[1], start, |_| {
                    ControlFlow::Continue(())
                })
                .unwrap();
                assert_eq!(alone.final_params, res.segment_final_params[1]);
            }
        }
    }

    #[test]
    fn singleton_sequence_equals_run_vqe() {
        let seq = progression(3, &[&[1]]);
        let c = VqeConfig { iterations: vec![33], ..cfg(OptimizerKind::Cobyla, 3) };
        let res = run_sequence(&seq, &c, |_| ControlFlow::Continue(())).unwrap();
        let spec = c.ansatz();
        let one = run_vqe(
            &res.operators[0],
            &spec,
            &c,
            33,
            &vec![0.0; spec.parameter_count()],
            |_| ControlFlow::Continue(()),
        )
        .unwrap();
        assert_eq!(res.records, one.records);
        assert_eq!(res.final_params, one.final_params);
        assert_eq!(res.id, c.nextpathid);
        assert!(!res.aborted);
    }

    #[test]
    fn aborted_sequences_stop_at_the_cancelled_segment() {
        let seq = progression(3, &[&[0], &[1], &[2]]);
        let c = VqeConfig { sequence_length: 3, iterations: vec![10, 10, 10], ..cfg(OptimizerKind::Nft, 3) };
        let res = run_sequence(&seq, &c, |r| {
            if r.index == 12 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .unwrap();
        assert!(res.aborted);
        assert_eq!(res.records.len(), 13);
        assert_eq!(res.segment_boundaries.len(), 2);
    }

    #[test]
    fn sequence_config_is_checked() {
        let seq = progression(3, &[&[0], &[1]]);
        let c = cfg(OptimizerKind::Nft, 3);
        assert_eq!(
            run_sequence(&seq, &c, |_| ControlFlow::Continue(())),
            Err(VqeError::SequenceLength { expected: 1, got: 2 })
        );
        let c = VqeConfig { sequence_length: 2, iterations: vec![5, 5], size: 4, ..c };
        assert!(matches!(
            run_sequence(&seq, &c, |_| ControlFlow::Continue(())),
            Err(VqeError::SizeMismatch { .. })
        ));
        let c = VqeConfig { size: 3, iterations: vec![5, 0], ..c };
        assert_eq!(
            run_sequence(&seq, &c, |_| ControlFlow::Continue(())),
            Err(VqeError::Budget { segment: 1 })
        );
    }

    #[test]
    fn random_initial_point_is_seeded() {
        let c = VqeConfig {
            initial_point: InitialPoint::Random,
            seed: 9,
            ..cfg(OptimizerKind::Nft, 12)
        };
        let spec = c.ansatz();
        let a = initial_params(&spec, &c);
        assert_eq!(a, initial_params(&spec, &c));
        assert!(a.iter().all(|t| t.abs() <= core::f64::consts::PI));
        assert_ne!(a, initial_params(&spec, &VqeConfig { seed: 10, ..c.clone() }));
        let _: Vec<String> = chromatic_labels();
    }
}
