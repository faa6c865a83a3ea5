//! Randomized property suites behind `binbell certify`.

use binbell::bell_operator::{build_bell_operator, operator_identity_residual};
use binbell::lr_polytope::facet_threshold;
use binbell::qudit::bell_expectation_direct;
use binbell::{
    bell_expectation, build_coefficients, count_max_configs, joint_probability, m_formula,
    tightness_certificate, BinningSpec, CoefficientTensor, EnumerationLimit, PhaseSettings,
    Setting, SignConvention, TSIRELSON,
};
use clap::Args;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::output::{emit, Field, Format, Table};
use crate::{CliError, Common};

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Random draws per property.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Replace the (2,2) coefficient block by its unflipped sign, to check
    /// that the operator suites notice.
    #[arg(long = "mutate-e22", hide = true)]
    mutate_e22: bool,
}

struct Property {
    name: &'static str,
    failures: usize,
    /// Largest observed violation measure, for the report.
    worst: f64,
    counterexample: Option<String>,
}

impl Property {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            failures: 0,
            worst: 0.0,
            counterexample: None,
        }
    }

    fn observe(&mut self, measure: f64, ok: bool, input: impl FnOnce() -> String) {
        self.worst = self.worst.max(measure);
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(input());
            }
        }
    }
}

/// Proper subset of `0..d`, possibly empty.
fn random_subset(rng: &mut ChaCha8Rng, d: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (0..d).filter(|_| rng.gen_bool(0.5)).collect();
    if s.len() == d {
        let drop = rng.gen_range(0..d);
        s.remove(drop);
    }
    s
}

fn random_spec(rng: &mut ChaCha8Rng, d: usize) -> BinningSpec {
    let r1 = random_subset(rng, d);
    let r2 = random_subset(rng, d);
    let s1 = random_subset(rng, d);
    let s2 = random_subset(rng, d);
    BinningSpec::new(d, &r1, &r2, &s1, &s2).expect("random subsets are proper")
}

fn random_phases(rng: &mut ChaCha8Rng) -> PhaseSettings {
    PhaseSettings::from_array(std::array::from_fn(|_| rng.gen_range(-6.0..6.0)))
}

fn describe(spec: &BinningSpec, phases: Option<&PhaseSettings>) -> String {
    use binbell::SubsetRole::*;
    let list = |role| {
        let e: Vec<String> = spec
            .subset(role)
            .elements()
            .iter()
            .map(|k| k.to_string())
            .collect();
        format!("[{}]", e.join(","))
    };
    let mut s = format!(
        "d={} r1={} r2={} s1={} s2={}",
        spec.d(),
        list(R1),
        list(R2),
        list(S1),
        list(S2)
    );
    if let Some(p) = phases {
        s.push_str(&format!(
            " phases=({},{},{},{})",
            p.alpha1, p.alpha2, p.beta1, p.beta2
        ));
    }
    s
}

fn run_suites(trials: usize, seed: u64, mutate: bool) -> Vec<Property> {
    let convention = if mutate {
        SignConvention::Unflipped
    } else {
        SignConvention::Standard
    };

    let mut normalization = Property::new("normalization");
    let mut evaluator = Property::new("evaluator_agreement");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let d = rng.gen_range(2..=16);
        let phases = random_phases(&mut rng);
        for a in Setting::BOTH {
            for b in Setting::BOTH {
                let total: f64 = (0..d)
                    .flat_map(|k| (0..d).map(move |l| (k, l)))
                    .map(|(k, l)| joint_probability(d, &phases, a, b, k, l))
                    .sum();
                let err = (total - 1.0).abs();
                normalization.observe(err, err <= 1e-10, || {
                    format!("d={d} {a:?}{b:?} phases={phases:?}")
                });
            }
        }
        let spec = random_spec(&mut rng, d);
        let eps = build_coefficients(&spec);
        let gap = (bell_expectation(&eps, &phases) - bell_expectation_direct(&eps, &phases)).abs();
        evaluator.observe(gap, gap <= 1e-10, || describe(&spec, Some(&phases)));
    }

    let mut identity = Property::new("identity_residual");
    let mut norm = Property::new("norm_bound");
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for _ in 0..trials {
        let d = rng.gen_range(2..=10);
        let spec = random_spec(&mut rng, d);
        let phases = random_phases(&mut rng);
        let eps = CoefficientTensor::from_binning(&spec, convention);
        let residual =
            operator_identity_residual(&eps, &spec, &phases).expect("d within the dense limit");
        identity.observe(residual, residual <= 1e-9, || {
            describe(&spec, Some(&phases))
        });
        let n = build_bell_operator(&eps, &phases)
            .expect("d within the dense limit")
            .spectral_norm();
        let excess = (n - TSIRELSON).max(0.0);
        norm.observe(excess, n <= TSIRELSON + 1e-9, || {
            describe(&spec, Some(&phases))
        });
    }

    let mut count = Property::new("m_formula");
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    for _ in 0..trials {
        let d = rng.gen_range(2..=8);
        let spec = random_spec(&mut rng, d);
        let counted = count_max_configs(&build_coefficients(&spec), EnumerationLimit::default())
            .expect("d <= 8") as u64;
        let formula = m_formula(&spec);
        // the facet count bound only applies when every subset is nonempty
        let ok = counted == formula && (spec.has_empty_subset() || counted >= facet_threshold(d));
        count.observe(counted.abs_diff(formula) as f64, ok, || {
            describe(&spec, None)
        });
    }

    let mut rank = Property::new("rank_bounds");
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    for _ in 0..trials {
        let d = rng.gen_range(2..=5);
        let spec = random_spec(&mut rng, d);
        let report = tightness_certificate(&spec, EnumerationLimit::default()).expect("d <= 5");
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rng);
        let relabeled = tightness_certificate(
            &spec.relabeled(&perm).expect("valid permutation"),
            EnumerationLimit::default(),
        )
        .expect("d <= 5");
        let ok = report.affine_rank <= report.linear_rank
            && report.linear_rank <= report.m_counted.min(4 * (d * d) as u64)
            && report.linear_rank == relabeled.linear_rank
            && report.affine_rank == relabeled.affine_rank;
        rank.observe(0.0, ok, || {
            format!("{} perm={perm:?}", describe(&spec, None))
        });
    }

    vec![normalization, evaluator, identity, norm, count, rank]
}

pub fn certify(args: &CertifyArgs, common: &Common) -> Result<(), CliError> {
    if args.trials == 0 {
        eprintln!("warning: --trials 0 runs no draws; every property passes vacuously");
    }
    let properties = run_suites(args.trials, common.seed, args.mutate_e22);

    let mut table = Table::new(&["property", "trials", "failures", "worst", "counterexample"]);
    for p in &properties {
        table.push(vec![
            p.name.into(),
            args.trials.into(),
            p.failures.into(),
            p.worst.into(),
            Field::from(p.counterexample.clone().unwrap_or_default()),
        ]);
    }
    emit(
        &table,
        common.out.as_deref(),
        common.format.unwrap_or(Format::Csv),
        false,
    )?;

    let mut failed = Vec::new();
    for p in &properties {
        let status = if p.failures == 0 { "PASS" } else { "FAIL" };
        eprintln!(
            "{status} {} ({} failures in {} trials)",
            p.name, p.failures, args.trials
        );
        if let Some(c) = &p.counterexample {
            eprintln!("  counterexample: {c}");
            failed.push(p.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "properties failed: {}",
            failed.join(", ")
        )))
    }
}
