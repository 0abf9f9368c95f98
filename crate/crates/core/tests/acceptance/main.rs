//! Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use index_coding::code::verify_code;
use index_coding::constructor::{assign_etig_vectors, construct_rate_third, ConstructConfig};
use index_coding::contraction::{contract_edge, contractible_edges, lift_code, ContractionMap};
use index_coding::fixtures::{self, random_gadget_chain, random_problem};
use index_coding::gf::{rank, Field};
use index_coding::inference::{
    check_certificate, quick_verdict, quick_verdict_over, seed_facts, stitch_closure, Reason, Rule, Verdict,
};
use index_coding::oracle::{classify_subset_dims, feasible_rate, minrank, OracleConfig};
use index_coding::structure::{build_etig, restricted_internal_conflicts, type2_sets, PatternInventory};
use index_coding::{DimSet, MessageSet, Problem};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn set(labels: &[usize]) -> MessageSet {
    MessageSet::from_labels(labels)
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

/// Classifies `expected` subsets over GF(2) and GF(3) at length 3 and
/// compares with the expected dimension sets, within a minute per field.
fn classify(p: &Problem, expected: &[(&[usize], DimSet)], exact: bool) -> Outcome {
    let subsets: Vec<MessageSet> = expected.iter().map(|(s, _)| set(s)).collect();
    let mut notes = Vec::new();
    for q in [2, 3] {
        let start = Instant::now();
        let r = classify_subset_dims(p, &subsets, 3, q, &OracleConfig::default()).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        if !r.feasible {
            return Err(format!("no length-3 code over GF({q})"));
        }
        for ((labels, want), s) in expected.iter().zip(&subsets) {
            let got = r.dims_of(s).ok_or("subset missing from result")?;
            let ok = if exact { got == *want } else { got.is_subset(*want) };
            if !ok {
                return Err(format!("GF({q}): {s} spans {got}, expected {want} ({labels:?})"));
            }
        }
        if took > Duration::from_secs(60) {
            return Err(format!("GF({q}) took {}", secs(took)));
        }
        notes.push(format!("GF({q}) {}", secs(took)));
    }
    Ok(notes.join(", "))
}

fn stic_classification() -> Outcome {
    let p = fixtures::p_stic();
    let plane = DimSet::only(2);
    // {2,3,5} must never span two dimensions; its other dimensions are both reached
    classify(&p, &[(&[2, 3, 5], DimSet::from_dims(&[1, 3]))], false)?;
    classify(&p, &[(&[1, 2, 3], plane), (&[2, 4, 5], plane), (&[3, 5, 6], plane)], true)
}

fn spic_classification() -> Outcome {
    let p = fixtures::p_spic();
    let (plane, line) = (DimSet::only(2), DimSet::only(1));
    classify(
        &p,
        &[
            (&[1, 2, 3, 4], plane),
            (&[1, 2, 3, 4, 5], plane),
            (&[1, 4], plane),
            (&[2, 5], plane),
            (&[4, 5], line),
            (&[1, 2], line),
        ],
        true,
    )
}

fn double_stic_certificate() -> Outcome {
    let p = fixtures::p_2stic();
    let cert = quick_verdict(&p);
    if cert.verdict != Verdict::RateThirdInfeasible {
        return Err(format!("verdict {:?}", cert.verdict));
    }
    let Reason::DisjointFacts { subset, facts } = &cert.reason else {
        return Err(format!("unexpected reason {:?}", cert.reason));
    };
    if *subset != set(&[2, 4, 5]) {
        return Err(format!("contradiction on {subset}"));
    }
    let mut dims: Vec<DimSet> = facts.iter().map(|&i| cert.facts_used[i].allowed_dims).collect();
    dims.sort();
    let mut want = vec![DimSet::only(2), DimSet::from_dims(&[1, 3])];
    want.sort();
    if dims != want {
        return Err(format!("fact dimensions {dims:?}"));
    }
    check_certificate(&p, &cert)?;
    let start = Instant::now();
    let r = feasible_rate(&p, 3, 2, &OracleConfig::default()).map_err(|e| e.to_string())?;
    if r.feasible {
        return Err("oracle found a length-3 code".into());
    }
    Ok(format!(
        "{} facts in certificate; oracle infeasible after {} nodes in {}",
        cert.facts_used.len(),
        r.nodes_explored,
        secs(start.elapsed())
    ))
}

fn type2_consistency() -> Outcome {
    let mut instances: Vec<(String, Problem)> = vec![("p_spic".into(), fixtures::p_spic())];
    instances.extend(fixtures::type2_suite());
    let (mut checked, mut with_conflicts, mut synthetic) = (0, 0, 0);
    for (name, p) in &instances {
        let sets = type2_sets(p);
        if sets.is_empty() {
            return Err(format!("{name}: no type-2 set"));
        }
        if name != "p_spic" && p.n() <= 8 {
            synthetic += 1;
        }
        for t in sets {
            let conflicts = restricted_internal_conflicts(p, &t.members);
            let (r, _) = p.restrict(&t.members).map_err(|e| e.to_string())?;
            let feasible = feasible_rate(&r, 2, 2, &OracleConfig::default()).map_err(|e| e.to_string())?.feasible;
            if conflicts.is_empty() != feasible {
                return Err(format!("{name}: {} has {} internal conflicts, oracle says {feasible}", t.members, conflicts.len()));
            }
            checked += 1;
            with_conflicts += usize::from(!conflicts.is_empty());
        }
    }
    if synthetic < 10 {
        return Err(format!("only {synthetic} synthesized instances"));
    }
    Ok(format!("{checked} type-2 sets on {} instances agree ({with_conflicts} with internal conflicts)", instances.len()))
}

fn chain_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut stitched, mut certificates, mut small) = (0, 0, 0);
    for i in 0..100 {
        let len = rng.gen_range(2..=4);
        let spoil = rng.gen_bool(0.3);
        let chain = random_gadget_chain(&mut rng, len, spoil, true);
        let p = chain.problem.absorb_undemanded();
        let facts = stitch_closure(seed_facts(&p, &PatternInventory::detect(&p)), &p);
        let planes: Vec<MessageSet> =
            facts.iter().filter(|f| f.rule == Rule::Stitch).map(|f| f.subset.clone()).collect();
        let r = classify_subset_dims(&p, &planes, 3, 2, &OracleConfig::default()).map_err(|e| e.to_string())?;
        if r.feasible {
            for s in &planes {
                if r.dims_of(s) != Some(DimSet::only(2)) {
                    return Err(format!("chain {i}: stitched {s} reaches {:?}", r.dims_of(s)));
                }
                stitched += 1;
            }
        }
        if r.feasible == chain.spoiled {
            return Err(format!("chain {i}: spoiled={} but oracle feasible={}", chain.spoiled, r.feasible));
        }
        let cert = quick_verdict_over(&p, Some(2));
        if let Reason::RestrictedInternalConflict { .. } = cert.reason {
            check_certificate(&p, &cert).map_err(|e| format!("chain {i}: {e}"))?;
            if r.feasible {
                return Err(format!("chain {i}: certificate but the oracle found a code"));
            }
            certificates += 1;
            small += usize::from(p.n() <= 10);
        }
    }
    Ok(format!(
        "{stitched} stitched planes confirmed; {certificates} rule-(b) certificates all infeasible ({small} with n <= 10)"
    ))
}

fn construction_suite() -> Outcome {
    let suite = fixtures::construction_suite();
    if suite.len() < 10 {
        return Err(format!("only {} fixtures", suite.len()));
    }
    let mut worst = (0, "");
    let mut slowest = (Duration::ZERO, "");
    for (name, p) in &suite {
        let mut times = Vec::new();
        for seed in 0..100 {
            let start = Instant::now();
            let c = construct_rate_third(p, &ConstructConfig { seed, ..ConstructConfig::default() })
                .map_err(|e| format!("{name} seed {seed}: {e}"))?;
            times.push(start.elapsed());
            if !verify_code(p, &c.code).map_err(|e| e.to_string())?.is_empty() {
                return Err(format!("{name} seed {seed}: code does not verify"));
            }
            if c.retries_used > 32 {
                return Err(format!("{name} seed {seed}: {} attempts", c.retries_used));
            }
            worst = worst.max((c.retries_used, name));
        }
        times.sort();
        let median = times[times.len() / 2];
        if median >= Duration::from_secs(1) {
            return Err(format!("{name}: median {}", secs(median)));
        }
        slowest = slowest.max((median, name));
    }
    Ok(format!(
        "{} fixtures x 100 seeds; most attempts {} ({}); slowest median {:.1}ms ({})",
        suite.len(),
        worst.0,
        worst.1,
        slowest.0.as_secs_f64() * 1e3,
        slowest.1
    ))
}

fn lifting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lifted = 0;
    for draw in 0..200 {
        let n = rng.gen_range(2..=6);
        let receivers = rng.gen_range(2..=6);
        let side = rng.gen_range(0.3..0.9);
        let p = random_problem(&mut rng, n, receivers, side);
        let mut cur = p.clone();
        let mut map = ContractionMap::identity(n);
        for _ in 0..rng.gen_range(1..=n) {
            let Some(&(a, b)) = contractible_edges(&cur).choose(&mut rng) else { break };
            let (next, step) = contract_edge(&cur, a, b).map_err(|e| e.to_string())?;
            map = map.then(&step);
            cur = next;
        }
        for l in [2, 3] {
            let r = feasible_rate(&cur, l, 2, &OracleConfig::default()).map_err(|e| e.to_string())?;
            if let Some(code) = r.witness {
                let up = lift_code(&code, &map).map_err(|e| e.to_string())?;
                if !verify_code(&p, &up).map_err(|e| e.to_string())?.is_empty() {
                    return Err(format!("draw {draw}: lifted length-{l} code fails"));
                }
                lifted += 1;
            }
        }
    }
    Ok(format!("{lifted} lifted codes verified over 200 draws"))
}

fn quick_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut tally = [0usize; 4];
    for i in 0..500 {
        let n = rng.gen_range(1..=5);
        let receivers = rng.gen_range(1..=6);
        let side = rng.gen_range(0.1..0.9);
        let p = random_problem(&mut rng, n, receivers, side);
        let v = quick_verdict_over(&p, Some(2)).verdict;
        let m = minrank(&p, 2, 4, &OracleConfig::default()).map_err(|e| e.to_string())?;
        let ok = match v {
            Verdict::Rate1Feasible => m == Some(1),
            Verdict::RateHalfFeasible => m == Some(2),
            Verdict::RateThirdInfeasible => m.is_none_or(|m| m > 3),
            Verdict::Inconclusive => m.is_none_or(|m| m >= 3),
        };
        if !ok {
            return Err(format!("instance {i}: {v:?} but minrank {m:?}: {}", p.to_json()));
        }
        tally[v as usize] += 1;
    }
    Ok(format!(
        "500 instances: {} rate 1, {} rate 1/2, {} refuted, {} inconclusive",
        tally[0], tally[1], tally[2], tally[3]
    ))
}

fn etig_invariant() -> Outcome {
    let field = Field::new(101).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut edges_total = 0;
    for g in 0..1000 {
        // random graph on k vertices, realised by giving each edge its own message
        let k = rng.gen_range(1..=8);
        let density = rng.gen_range(0.2..1.0);
        let mut sets: Vec<MessageSet> = (0..k).map(|v| [v].into_iter().collect()).collect();
        let mut next = k;
        let mut order = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                if rng.gen_bool(density) {
                    sets[a].insert(next);
                    sets[b].insert(next);
                    order.push((a, b));
                    next += 1;
                }
            }
        }
        order.shuffle(&mut rng);
        let mut etig = build_etig(&sets);
        let explicit = g % 2 == 1;
        assign_etig_vectors(&mut etig, field, &mut rng, explicit.then_some(order.as_slice())).map_err(|e| e.to_string())?;
        edges_total += etig.edges.len();
        for v in 0..k {
            let incident: Vec<_> =
                etig.edges.iter().filter(|e| e.a == v || e.b == v).filter_map(|e| e.vector).collect();
            if incident.len() != etig.neighbours(v).len() {
                return Err(format!("graph {g}: unassigned edge at {v}"));
            }
            let d = rank(field, 3, &incident).map_err(|e| e.to_string())?;
            if d > 2 {
                return Err(format!("graph {g}: vertex {v} spans {d} dimensions"));
            }
        }
    }
    Ok(format!("1000 graphs, {edges_total} edges"))
}

fn cli_determinism() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let path = |name: &str| dir.join(format!("{name}.json")).to_string_lossy().into_owned();
    let (stic, spic, double, six) = (path("p_stic"), path("p_spic"), path("p_2stic"), path("construct_six_sets"));
    let commands: Vec<Vec<&str>> = vec![
        vec!["analyze", &stic],
        vec!["analyze", &double, "--text"],
        vec!["analyze", &spic, "--construct", "--seed", "4"],
        vec!["construct", &six, "--seed", "11"],
        vec!["construct", &six, "--seed", "11", "--policies", "3", "--text"],
        vec!["oracle", &stic, "--subsets", "2,3,5;1,2,3", "--q", "3"],
        vec!["oracle", &spic, "--minrank", "--L", "3"],
        vec!["oracle", &double, "--threads", "4"],
        vec!["contract", &stic, "--edge", "2,3"],
        vec!["contract", &spic, "--policy", "random", "--seed", "5"],
        vec!["export-dot", &spic],
    ];
    for args in &commands {
        let runs: Vec<_> = (0..3)
            .map(|_| Command::new(env!("CARGO_BIN_EXE_icode")).args(args).output())
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        if runs.iter().any(|o| o.stdout != runs[0].stdout || o.status.code() != runs[0].status.code()) {
            return Err(format!("output differs for {args:?}"));
        }
        if runs[0].stdout.is_empty() {
            return Err(format!("no output for {args:?}"));
        }
    }
    Ok(format!("{} commands x 3 runs byte-identical", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("STIC subset dimensions over GF(2) and GF(3)", stic_classification),
        ("SPIC subset dimensions over GF(2) and GF(3)", spic_classification),
        ("double-STIC certificate on {2,4,5} and oracle infeasibility", double_stic_certificate),
        ("type-2 sets: no internal conflicts <=> length-2 code", type2_consistency),
        ("gadget chains: stitched planes and rule-(b) certificates", chain_soundness),
        ("construction suite at q=101, seeds 0..99", construction_suite),
        ("lifting oracle codes through random contractions", lifting),
        ("quick verdicts agree with minrank (q=2, n<=5)", quick_checks),
        ("intersection-graph vertex spans stay planar", etig_invariant),
        ("CLI output is byte-identical across runs", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = secs(start.elapsed());
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} [{detail}] ({took})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} [{why}] ({took})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
