//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! printed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use charvar_core::conjugacy::{conjugation_residual, gl_conjugacy, intertwiner_basis, GlOptions, Obstruction, Verdict};
use charvar_core::harness::{run, ExperimentConfig, Subcommand};
use charvar_core::linalg::real;
use charvar_core::matgroups::{sample, Automorphism, Field, GroupKind};
use charvar_core::outt::{
    adjoint_trace_check, character_collision_demo, freeness_check, outt_catalog, trace_preservation_witness,
    transpose_intertwiner_check, InnerVerdict, PreservationVerdict,
};
use charvar_core::reps::{burnside_irreducible, direct_sum, BurnsideVerdict, Representation, BURNSIDE_LENGTH};
use charvar_core::seeds::derive_seed;
use charvar_core::trace_algebra::{fricke_reduce, verify_generation_sl2, TracePolynomial};
use charvar_core::words::{parse_word, Word};

const SEED: u64 = 7;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fricke_generation() -> Outcome {
    let r = verify_generation_sl2(8, 100, SEED, 1e-8).map_err(|e| e.to_string())?;
    ensure(r.passed, format!("{} violations, worst {:?}", r.violation_count, r.worst))?;
    Ok(format!("{} checks, max relative error {:.2e}", r.checks, r.max_relative_error))
}

fn known_reductions() -> Outcome {
    let golden = [
        ("abAB", "-2*x^0*y^0*z^0 +1*x^2*y^0*z^0 +1*x^0*y^2*z^0 +1*x^0*y^0*z^2 -1*x^1*y^1*z^1"),
        ("aab", "-1*x^0*y^1*z^0 +1*x^1*y^0*z^1"),
    ];
    let (a, b) = (Word::generator(0), Word::generator(1));
    let ab = a.concat(&b);
    for (w, text) in golden {
        let word = parse_word(w).map_err(|e| e.to_string())?;
        let p = fricke_reduce(&word).map_err(|e| e.to_string())?;
        let expected: TracePolynomial =
            text.parse().map_err(|e: charvar_core::trace_algebra::TraceError| e.to_string())?;
        ensure(p == expected, format!("{w}: got {p}"))?;
        // numeric oracle for the frozen value
        for s in 0..100 {
            let rep = Representation::sample_free(GroupKind::SL(2), 2, derive_seed(SEED, s), Field::Complex);
            let t = |u: &Word| rep.character(u).unwrap();
            let direct = t(&word);
            let err = (expected.eval(t(&a), t(&b), t(&ab)) - direct).norm() / (1.0 + direct.norm());
            ensure(err <= 1e-8, format!("{w}: numeric oracle off by {err:.2e} on sample {s}"))?;
        }
    }
    Ok("abAB and aab match the golden polynomials".into())
}

fn adjoint_example() -> Outcome {
    let mut worst_p: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for m in [2, 3, 4] {
        let p = transpose_intertwiner_check(m, 50, SEED).map_err(|e| e.to_string())?;
        let t = adjoint_trace_check(m, 100, SEED).map_err(|e| e.to_string())?;
        ensure(p <= 1e-9, format!("m={m}: transpose intertwiner residual {p:.2e}"))?;
        ensure(t <= 1e-9, format!("m={m}: adjoint trace identity off by {t:.2e}"))?;
        worst_p = worst_p.max(p);
        worst_t = worst_t.max(t);
    }
    Ok(format!("transpose residual {worst_p:.2e}, trace identity {worst_t:.2e}"))
}

fn outt_labels() -> Outcome {
    let catalog = outt_catalog(SEED).map_err(|e| e.to_string())?;
    ensure(catalog.len() == 12, format!("{} entries", catalog.len()))?;
    for r in &catalog {
        let name = r.realization;
        ensure(r.matches, format!("{name}: concluded {:?}, expected {:?}", r.conclusion, r.expected))?;
        let tp = &r.trace_preserving;
        match tp.verdict {
            PreservationVerdict::NotPreserving => ensure(tp.witness.is_some(), format!("{name}: no witness"))?,
            PreservationVerdict::Preserving => {
                ensure(tp.structural_argument.is_some(), format!("{name}: no structural argument"))?
            }
            PreservationVerdict::ProbablyPreserving => return Err(format!("{name}: only probably preserving")),
        }
        match r.inner.verdict {
            InnerVerdict::Inner => ensure(r.inner.conjugator.is_some(), format!("{name}: no conjugator"))?,
            InnerVerdict::NotInner => {
                ensure(r.inner.certificate.obstruction.is_some(), format!("{name}: no obstruction"))?
            }
            InnerVerdict::Inconclusive if tp.verdict == PreservationVerdict::NotPreserving => {}
            InnerVerdict::Inconclusive => return Err(format!("{name}: inner test inconclusive")),
        }
    }
    Ok("12 realizations match the expected labels".into())
}

fn cartan_witness() -> Outcome {
    let mut gaps = Vec::new();
    for m in [3, 4] {
        let r = trace_preservation_witness(GroupKind::SL(m), &Automorphism::Cartan, 100, SEED)
            .map_err(|e| e.to_string())?;
        ensure(r.verdict == PreservationVerdict::NotPreserving, format!("sl{m}: no witness"))?;
        let gap = r.gap.unwrap_or(0.0);
        ensure(gap > 0.1, format!("sl{m}: gap {gap}"))?;
        ensure(r.samples_checked <= 100, format!("sl{m}: {} samples", r.samples_checked))?;
        gaps.push(format!("sl{m} gap {gap:.3}"));
    }
    Ok(gaps.join(", "))
}

fn character_collisions() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in [1, 2] {
        for i in 0..20 {
            let seed = derive_seed(SEED, i);
            let r = character_collision_demo(m, 2, seed).map_err(|e| e.to_string())?;
            let tag = format!("m={m} seed {seed}");
            ensure(r.fingerprint_distance <= 1e-9, format!("{tag}: distance {:.2e}", r.fingerprint_distance))?;
            ensure(r.in_group_conjugacy.verdict == Verdict::NotConjugate, format!("{tag}: in-group conjugate"))?;
            match &r.in_group_conjugacy.obstruction {
                Some(Obstruction::DeterminantSign { determinant }) => {
                    let off = (determinant + real(1.0)).norm();
                    ensure(off <= 1e-8, format!("{tag}: determinant {determinant}"))?;
                }
                other => return Err(format!("{tag}: obstruction {other:?}")),
            }
            ensure(r.valid, format!("{tag}: report not valid"))?;
            worst = worst.max(r.fingerprint_distance);
        }
    }
    Ok(format!("40 collisions, max fingerprint distance {worst:.2e}"))
}

fn freeness() -> Outcome {
    let r = freeness_check(2, 2, 50, SEED).map_err(|e| e.to_string())?;
    ensure(r.violations == 0, format!("{} violations", r.violations))?;
    ensure(r.passed, format!("{} inconclusive, {} skipped", r.inconclusive, r.skipped))?;
    Ok("50 irreducible SO(4) samples, 0 in-group flip conjugacies".into())
}

fn conjugacy_soundness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut errors = 0;
    for n in [2, 3, 4] {
        let kind = GroupKind::SL(n);
        for i in 0..100u64 {
            let s = derive_seed(SEED ^ (n as u64) << 32, i);
            let a = Representation::sample_free(kind, 2, derive_seed(s, 0), Field::Complex);
            let g = sample(kind, derive_seed(s, 1));
            let b = a.conjugate(&g).map_err(|e| e.to_string())?;
            let cert = gl_conjugacy(&a, &b, GlOptions { sl_normalize: true, seed: s }).map_err(|e| e.to_string())?;
            let recheck = cert.conjugator.as_ref().and_then(|x| conjugation_residual(x, &a, &b));
            match (cert.verdict, recheck) {
                (Verdict::Conjugate, Some(r)) if r <= 1e-7 => worst = worst.max(r),
                _ => errors += 1,
            }
            let c = Representation::sample_free(kind, 2, derive_seed(s, 2), Field::Complex);
            let space = intertwiner_basis(&a, &c).map_err(|e| e.to_string())?;
            let cert = gl_conjugacy(&a, &c, GlOptions { sl_normalize: true, seed: s }).map_err(|e| e.to_string())?;
            if space.dimension != 0
                || cert.verdict != Verdict::NotConjugate
                || cert.obstruction != Some(Obstruction::EmptyIntertwiner)
            {
                errors += 1;
            }
        }
    }
    ensure(errors == 0, format!("{errors} misclassifications"))?;
    Ok(format!("600 pairs classified, max recovered residual {worst:.2e}"))
}

fn burnside_classification() -> Outcome {
    let irreducible_kinds = [GroupKind::SL(2), GroupKind::SL(3), GroupKind::SO(3), GroupKind::SO(4), GroupKind::Sp(2)];
    let sums: [(GroupKind, GroupKind); 5] = [
        (GroupKind::SL(1), GroupKind::SL(2)),
        (GroupKind::SL(2), GroupKind::SL(2)),
        (GroupKind::SO(2), GroupKind::SO(2)),
        (GroupKind::SL(2), GroupKind::SO(3)),
        (GroupKind::SO(3), GroupKind::SO(3)),
    ];
    let mut errors = Vec::new();
    for i in 0..50u64 {
        let s = derive_seed(SEED, 10_000 + i);
        let kind = irreducible_kinds[i as usize % irreducible_kinds.len()];
        let rep = Representation::sample_free(kind, 2, s, Field::Complex);
        if burnside_irreducible(&rep, BURNSIDE_LENGTH).verdict != BurnsideVerdict::Irreducible {
            errors.push(format!("{kind} seed {s} not irreducible"));
        }
        let (k1, k2) = sums[i as usize % sums.len()];
        let left = Representation::sample_free(k1, 2, derive_seed(s, 1), Field::Complex);
        let right = Representation::sample_free(k2, 2, derive_seed(s, 2), Field::Complex);
        let sum = direct_sum(&left, &right).map_err(|e| e.to_string())?;
        if burnside_irreducible(&sum, BURNSIDE_LENGTH).verdict != BurnsideVerdict::Reducible {
            errors.push(format!("{k1}+{k2} seed {s} not reducible"));
        }
    }
    ensure(errors.is_empty(), errors.join("; "))?;
    Ok("50 irreducible and 50 direct sums labelled correctly".into())
}

fn without_timing(json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(json).expect("report is JSON");
    v.as_object_mut().expect("report is an object").remove("elapsed_ms");
    serde_json::to_string(&v).expect("serializes")
}

fn determinism() -> Outcome {
    let cfg = |sc: Subcommand| ExperimentConfig { seed: Some(SEED), ..ExperimentConfig::new(sc) };
    let configs = [
        cfg(Subcommand::FrickeCheck),
        cfg(Subcommand::OuttCatalog),
        ExperimentConfig { group: Some(GroupKind::SO(2)), ..cfg(Subcommand::Collision) },
        ExperimentConfig { group: Some(GroupKind::SO(4)), ..cfg(Subcommand::Collision) },
        cfg(Subcommand::Freeness),
        cfg(Subcommand::Separation),
        ExperimentConfig { group: Some(GroupKind::SO(4)), flip: true, ..cfg(Subcommand::Separation) },
    ];
    for c in &configs {
        let first = run(c).map_err(|e| e.to_string())?.report.to_json();
        let second = run(c).map_err(|e| e.to_string())?.report.to_json();
        ensure(without_timing(&first) == without_timing(&second), format!("{} differs between runs", c.subcommand))?;
        // timing is the last field, so the reports agree byte for byte up to it
        let cut = |s: &str| s[..s.rfind("\"elapsed_ms\"").expect("timing field")].to_string();
        ensure(cut(&first) == cut(&second), format!("{} bytes differ", c.subcommand))?;
    }
    Ok(format!("{} configurations reproduce byte for byte", configs.len()))
}

struct Criterion {
    number: usize,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { number: 1, name: "Fricke generation", budget: Duration::from_secs(60), check: fricke_generation },
        Criterion { number: 2, name: "known reductions", budget: Duration::from_secs(1), check: known_reductions },
        Criterion { number: 3, name: "adjoint example", budget: Duration::from_secs(10), check: adjoint_example },
        Criterion { number: 4, name: "Out_T catalog", budget: Duration::from_secs(30), check: outt_labels },
        Criterion { number: 5, name: "Cartan witness", budget: Duration::from_secs(5), check: cartan_witness },
        Criterion {
            number: 6,
            name: "character collision",
            budget: Duration::from_secs(60),
            check: character_collisions,
        },
        Criterion { number: 7, name: "freeness", budget: Duration::from_secs(120), check: freeness },
        Criterion {
            number: 8,
            name: "conjugacy soundness",
            budget: Duration::from_secs(60),
            check: conjugacy_soundness,
        },
        Criterion {
            number: 9,
            name: "Burnside classification",
            budget: Duration::from_secs(30),
            check: burnside_classification,
        },
        Criterion { number: 10, name: "determinism", budget: Duration::from_secs(120), check: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= c.budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {:.2?}, budget {:?}", elapsed, c.budget))
            }
        });
        match outcome {
            Ok(msg) => println!("criterion {:>2} {:<24} PASS  {msg} ({:.2?})", c.number, c.name, elapsed),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} {:<24} FAIL  {msg} ({:.2?})", c.number, c.name, elapsed);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
