//! Executes parsed problem files and renders their reports.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::axioms::{
    boolean_closure, check_ca_axioms, check_exhaustive, check_random, check_substitution_laws, Axiom, AxiomReport,
    AxiomResult, Reading,
};
use crate::census::{base_iso_search, orbit_count, CensusSubalgebra};
use crate::chains::{branch_tree, disagreement, run_schedule, twin_game, CensusWindow, ScheduleConfig, TypeFamily};
use crate::cylinder::{BaseSpace, CylinderElement};
use crate::error::Result;
use crate::interpolation::{
    build_separating_filters, find_interpolant, InterpolantOutcome, InterpolationInstance, SgCaps,
};
use crate::problem::{
    AxiomGroup, AxiomsCommand, Command, FilterMode, InterpolateCommand, OmitCommand, OrbitsCommand, ProblemFile,
    ReadingChoice, RepresentCommand, TwinsCommand,
};
use crate::representation::{
    build_representation, interior_witnesses, verify_homomorphism, verify_interior_rep, Representation,
};
use crate::topology::{mask_points, FiniteTopology};
use crate::transform::FiniteTransformation;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Replaces the step count of every command that has one.
    pub steps: Option<usize>,
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Stopped by a support or size cap.
    Resource,
}

#[derive(Debug, Clone)]
pub struct CommandReport {
    pub command: &'static str,
    pub line: usize,
    pub status: Status,
    /// Machine-readable document; never contains timings.
    pub json: Value,
    pub human: String,
    pub elapsed: Duration,
}

/// Exit status for a finished run: 0 pass, 1 check failed, 3 resource cap.
pub fn exit_code(reports: &[CommandReport]) -> i32 {
    if reports.iter().any(|r| r.status == Status::Resource) {
        3
    } else if reports.iter().any(|r| r.status == Status::Fail) {
        1
    } else {
        0
    }
}

struct Outcome {
    passed: bool,
    details: Value,
    human: String,
}

pub fn run(problem: &ProblemFile, opts: &RunOptions) -> Vec<CommandReport> {
    let mut reports = Vec::new();
    for (line, command) in &problem.commands {
        let start = Instant::now();
        let result = match command {
            Command::Axioms(c) => run_axioms(&problem.base, c, opts),
            Command::Represent(c) => run_represent(&problem.base, c, opts),
            Command::Interpolate(c) => run_interpolate(&problem.base, c, opts),
            Command::Omit(c) => run_omit(&problem.base, c, opts),
            Command::Twins(c) => run_twins(&problem.base, c, opts),
            Command::Orbits(c) => run_orbits(&problem.base, c),
        };
        let (status, details, human) = match result {
            Ok(o) => (if o.passed { Status::Pass } else { Status::Fail }, o.details, o.human),
            Err(e) => {
                let status = if e.is_resource() {
                    Status::Resource
                } else {
                    Status::Fail
                };
                (status, json!({ "error": e.to_string() }), format!("  error: {e}\n"))
            }
        };
        let mut doc = json!({
            "command": command.name(),
            "line": line,
            "seed": opts.seed,
            "status": status,
        });
        if let (Value::Object(doc), Value::Object(extra)) = (&mut doc, details) {
            doc.extend(extra);
        }
        reports.push(CommandReport {
            command: command.name(),
            line: *line,
            status,
            json: doc,
            human,
            elapsed: start.elapsed(),
        });
    }
    reports
}

/// Human report: one block per command.
pub fn render_human(reports: &[CommandReport], timing: bool) -> String {
    let mut out = String::new();
    for r in reports {
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Resource => "RESOURCE",
        };
        let _ = write!(out, "== {} (line {}): {status}", r.command, r.line);
        if timing {
            let _ = write!(out, " [{:.3}s]", r.elapsed.as_secs_f64());
        }
        out.push('\n');
        out.push_str(&r.human);
    }
    let _ = writeln!(out, "{} command(s), exit status {}", reports.len(), exit_code(reports));
    out
}

/// Machine report: one JSON document per line.
pub fn render_json(reports: &[CommandReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.json.to_string());
        out.push('\n');
    }
    out
}

fn config(opts: &RunOptions) -> ScheduleConfig {
    ScheduleConfig {
        trace: opts.trace,
        ..ScheduleConfig::default()
    }
}

/// The identity followed by `count - 1` random transformations moving at
/// most two coordinates of `0..window`.
pub fn sample_transformations(rng: &mut ChaCha8Rng, count: usize, window: usize) -> Vec<FiniteTransformation> {
    let mut out = vec![FiniteTransformation::identity()];
    while out.len() < count {
        let moved = rng.gen_range(1..=2);
        let pairs: Vec<(usize, usize)> = (0..moved)
            .map(|_| (rng.gen_range(0..window), rng.gen_range(0..window)))
            .collect();
        out.push(FiniteTransformation::from_pairs(pairs));
    }
    out.truncate(count);
    out
}

/// Single replacements and transpositions of `0..index_bound`.
pub fn substitution_sample(index_bound: usize) -> Vec<FiniteTransformation> {
    let mut out = FiniteTransformation::enumerate_bounded(index_bound, 1);
    for i in 0..index_bound {
        for j in i + 1..index_bound {
            out.push(FiniteTransformation::swap(i, j));
        }
    }
    out
}

fn topology_json(t: &FiniteTopology) -> Value {
    json!(t.opens().iter().map(|m| mask_points(*m)).collect::<Vec<_>>())
}

/// Whether a result decides the axioms verdict under the chosen reading.
fn gates(r: &AxiomResult, reading: ReadingChoice) -> bool {
    match (r.axiom, r.reading) {
        (Axiom::InteriorSubstitution, _) => false,
        (_, Some(Reading::Literal)) => reading == ReadingChoice::Only(Reading::Literal),
        _ => true,
    }
}

fn run_axioms(base: &BaseSpace, cmd: &AxiomsCommand, opts: &RunOptions) -> Result<Outcome> {
    let bases: Vec<BaseSpace> = if cmd.all_topologies {
        FiniteTopology::enumerate_all(base.n())?
            .into_iter()
            .map(|t| BaseSpace::new(t).map(|b| b.with_support_cap(base.support_cap())))
            .collect::<Result<_>>()?
    } else {
        vec![base.clone()]
    };
    let generators: Vec<CylinderElement> = cmd.generators.iter().map(|(_, e)| e.clone()).collect();
    let readings: Vec<Reading> = match cmd.reading {
        ReadingChoice::Both => vec![Reading::Corrected, Reading::Literal],
        ReadingChoice::Only(r) => vec![r],
    };
    let mut passed = true;
    let mut per_base = Vec::new();
    let mut human = String::new();
    for b in &bases {
        let sample = boolean_closure(b, &generators)?;
        let mut report = AxiomReport::default();
        let mut selected: Vec<Axiom> = Vec::new();
        for group in &cmd.groups {
            match group {
                AxiomGroup::Cylindric => {
                    report.merge(check_ca_axioms(b, cmd.index_bound, &sample)?);
                    selected.extend(Axiom::cylindric());
                }
                AxiomGroup::Interior => {
                    // laws without a reading are checked once
                    for (n, r) in readings.iter().enumerate() {
                        let axioms: Vec<Axiom> = Axiom::interior(*r)
                            .into_iter()
                            .filter(|a| n == 0 || a.reading().is_some())
                            .collect();
                        report.merge(check_exhaustive(
                            b,
                            &axioms,
                            cmd.index_bound,
                            &sample,
                            &[],
                            Default::default(),
                        )?);
                        selected.extend(axioms);
                    }
                }
                AxiomGroup::Substitution => {
                    let taus = substitution_sample(cmd.index_bound);
                    report.merge(check_substitution_laws(b, cmd.index_bound, &sample, &taus)?);
                    selected.extend(Axiom::substitution());
                }
            }
        }
        if cmd.random > 0 {
            selected.retain(|a| a.skip_reason().is_none());
            report.merge(check_random(b, &selected, cmd.index_bound, cmd.random, opts.seed)?);
        }
        let ok = report
            .results
            .iter()
            .filter(|r| gates(r, cmd.reading))
            .all(|r| !r.fails());
        passed &= ok;
        let item6 = report.get(Axiom::InteriorSubstitution).map(|r| r.holds());
        let _ = writeln!(
            human,
            "  topology {}: {}",
            b.topology(),
            if ok { "pass" } else { "FAIL" }
        );
        for line in report.to_string().lines() {
            let _ = writeln!(human, "    {line}");
        }
        per_base.push(json!({
            "topology": topology_json(b.topology()),
            "passed": ok,
            "sample_size": sample.len(),
            "interior_substitution_holds": item6,
            "report": report,
        }));
    }
    Ok(Outcome {
        passed,
        details: json!({ "passed": passed, "bases": per_base }),
        human,
    })
}

fn run_represent(base: &BaseSpace, cmd: &RepresentCommand, opts: &RunOptions) -> Result<Outcome> {
    let steps = opts.steps.unwrap_or(cmd.steps);
    let mut rep = build_representation(base, cmd.seed.1.clone(), steps, opts.seed, &config(opts), cmd.bound)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let taus = sample_transformations(&mut rng, cmd.transformations, cmd.bound + 2);
    let terms: Vec<CylinderElement> = cmd.terms.iter().map(|(_, e)| e.clone()).collect();

    let proper = rep.chain().consistent_with(&base.one())?;
    let henkin_bad = rep.chain().check_henkin_invariant()?;
    let distinct = rep.chain().witnesses_distinct();
    let seed_at_identity = rep.rep_membership(&cmd.seed.1, &FiniteTransformation::identity())?;
    let hom = verify_homomorphism(&mut rep, &terms, &taus)?;
    let mut interior = Vec::new();
    if cmd.interior > 0 {
        let q = interior_witnesses(&mut rep, &terms, cmd.interior, cmd.bound)?;
        for p in &terms {
            for i in 0..cmd.interior {
                interior.push(verify_interior_rep(&mut rep, &q, p, i, &taus)?);
            }
        }
    }
    let interior_ok = interior.iter().all(|r| r.passed());
    let passed = proper && henkin_bad.is_empty() && distinct && seed_at_identity && hom.passed() && interior_ok;

    let chain = rep.chain();
    let mut human = String::new();
    let _ = writeln!(
        human,
        "  steps {steps}, conditions {}, Henkin witnesses {}",
        chain.conditions().len(),
        chain.henkin_log().len()
    );
    let _ = writeln!(
        human,
        "  proper: {proper}; Henkin invariant violations: {}; witnesses distinct: {distinct}",
        henkin_bad.len()
    );
    let _ = writeln!(human, "  identity in f(seed): {seed_at_identity}");
    let _ = writeln!(human, "  E blocks below {}: {:?}", cmd.bound, rep.partition().blocks);
    let _ = writeln!(
        human,
        "  homomorphism checks: {}, failures: {}",
        hom.checks,
        hom.failures.len()
    );
    for f in hom.failures.iter().take(10) {
        let _ = writeln!(human, "    {f}");
    }
    if cmd.interior > 0 {
        let failed = interior.iter().filter(|r| !r.passed()).count();
        let _ = writeln!(
            human,
            "  interior checks: {} terms x coordinates, failures: {failed}",
            interior.len()
        );
    }
    push_trace(&mut human, chain.trace());
    let details = json!({
        "passed": passed,
        "steps": steps,
        "proper": proper,
        "conditions": chain.conditions().len(),
        "henkin_witnesses": chain.henkin_log().len(),
        "henkin_violations": henkin_bad,
        "witnesses_distinct": distinct,
        "identity_in_seed_image": seed_at_identity,
        "partition": rep.partition(),
        "homomorphism": hom,
        "interior": interior,
        "trace": chain.trace(),
    });
    Ok(Outcome { passed, details, human })
}

fn push_trace(human: &mut String, trace: &[String]) {
    for line in trace {
        let _ = writeln!(human, "  | {line}");
    }
}

fn run_interpolate(base: &BaseSpace, cmd: &InterpolateCommand, opts: &RunOptions) -> Result<Outcome> {
    let inst = InterpolationInstance::new(base, cmd.x1.clone(), cmd.x2.clone(), cmd.a.1.clone(), cmd.c.1.clone())?;
    let caps = SgCaps {
        support_cap: cmd.support_cap,
        depth_cap: cmd.depth_cap,
    };
    let outcome = find_interpolant(&inst, caps)?;
    let found = outcome.found().is_some();
    let run_filters = match cmd.filters {
        FilterMode::Always => true,
        FilterMode::Auto => !found,
        FilterMode::Never => false,
    };
    let steps = opts.steps.unwrap_or(cmd.filter_steps);
    let filters = if run_filters {
        Some(build_separating_filters(&inst, caps, steps, opts.seed)?.report)
    } else {
        None
    };
    let proper = filters.as_ref().is_some_and(|f| f.proper);
    let passed = found || proper;
    let mut human = String::new();
    let _ = writeln!(
        human,
        "  a = {}, c = {}, caps ({}, {})",
        cmd.a.0, cmd.c.0, caps.support_cap, caps.depth_cap
    );
    match &outcome {
        InterpolantOutcome::Found { term, element } => {
            let _ = writeln!(human, "  interpolant found: {term} = <{element}>");
        }
        InterpolantOutcome::NotFoundWithinBounds { searched, .. } => {
            let _ = writeln!(human, "  no interpolant within caps ({searched} elements searched)");
        }
    }
    if let Some(f) = &filters {
        let _ = writeln!(
            human,
            "  separating filters after {} step(s): H proper = {}",
            f.steps, f.proper
        );
        if let Some(v) = &f.violation {
            let _ = writeln!(
                human,
                "  violated at step {}: b0 = {}, b1 = {}",
                v.step, v.b0_term, v.b1_term
            );
        }
        if let Some(e) = &f.extension {
            let _ = writeln!(
                human,
                "  H* atom {}; F1 {} conditions, F2 {} conditions, agree on common part: {}",
                e.atom_term, e.f1_conditions, e.f2_conditions, e.agree_on_common
            );
        }
        let _ = writeln!(human, "  note: {}", f.note);
    }
    let details = json!({
        "passed": passed,
        "caps": caps,
        "interpolant": outcome,
        "filters": filters,
    });
    Ok(Outcome { passed, details, human })
}

fn run_omit(base: &BaseSpace, cmd: &OmitCommand, opts: &RunOptions) -> Result<Outcome> {
    let steps = opts.steps.unwrap_or(cmd.steps);
    let members: Vec<Vec<CylinderElement>> = cmd.families.iter().map(|(_, f)| f.clone()).collect();
    let families = TypeFamily::new(base, members.clone(), cmd.depth)?;
    let chain = run_schedule(base, cmd.seed.1.clone(), families, steps, opts.seed, &config(opts))?;
    let pairs = chain.omit_log().len();
    let bad = chain.check_omit_invariant()?;
    let trace = chain.trace().to_vec();
    let conditions = chain.conditions().len();

    let mut logged: Vec<(usize, FiniteTransformation)> =
        chain.omit_log().iter().map(|r| (r.family, r.tau.clone())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    logged.shuffle(&mut rng);
    logged.truncate(cmd.transformations);
    let mut rep = Representation::new(chain, cmd.bound)?;
    let mut unrealized = Vec::new();
    for (family, tau) in &logged {
        let mut omitted = false;
        for x in &members[*family] {
            if !rep.rep_membership(x, tau)? {
                omitted = true;
                break;
            }
        }
        unrealized.push(json!({ "family": family, "tau": tau, "omitted": omitted }));
        if !omitted {
            break;
        }
    }
    let omitted_all = unrealized.iter().all(|v| v["omitted"] == json!(true));
    let passed = pairs > 0 && bad.is_empty() && omitted_all;
    let mut human = String::new();
    for (name, f) in &cmd.families {
        let _ = writeln!(human, "  family {name}: {} member(s)", f.len());
    }
    let _ = writeln!(
        human,
        "  steps {steps}, conditions {conditions}, omit pairs processed {pairs}, violations {}",
        bad.len()
    );
    let _ = writeln!(
        human,
        "  sampled pairs omitted by the representation: {} of {}",
        unrealized.iter().filter(|v| v["omitted"] == json!(true)).count(),
        logged.len()
    );
    push_trace(&mut human, &trace);
    let details = json!({
        "passed": passed,
        "steps": steps,
        "conditions": conditions,
        "omit_pairs": pairs,
        "violations": bad,
        "sampled": unrealized,
        "trace": trace,
    });
    Ok(Outcome { passed, details, human })
}

fn run_twins(base: &BaseSpace, cmd: &TwinsCommand, opts: &RunOptions) -> Result<Outcome> {
    let steps = opts.steps.unwrap_or(cmd.steps);
    let gens: Vec<CylinderElement> = cmd.census.iter().map(|(_, e)| e.clone()).collect();
    let census = CensusWindow::generated(base, &gens)?;
    let game = twin_game(base, steps, opts.seed, &census, &config(opts))?;
    let disagreements = game.disagreements().len();
    let common = game.common_atoms(&census)?;
    let leaves = branch_tree(&game.t, cmd.depth, &census)?;
    let mut apart = 0;
    let mut together = Vec::new();
    for i in 0..leaves.len() {
        for j in i + 1..leaves.len() {
            if disagreement(&leaves[i], &leaves[j])?.is_some() || disagreement(&leaves[j], &leaves[i])?.is_some() {
                apart += 1;
            } else {
                together.push((i, j));
            }
        }
    }
    let principal = common.len() <= 1;
    let passed = disagreements >= cmd.min_disagreements && principal && together.is_empty();
    let mut human = String::new();
    let _ = writeln!(
        human,
        "  steps {steps}: T decided {}, S decided {}, disagreements {disagreements} (need {})",
        game.t.decided().len(),
        game.s.decided().len(),
        cmd.min_disagreements
    );
    let _ = writeln!(human, "  census atoms consistent with both chains: {}", common.len());
    let _ = writeln!(
        human,
        "  branch tree: {} leaves, {apart} pairs disagree, {} pairs agree",
        leaves.len(),
        together.len()
    );
    push_trace(&mut human, game.t.trace());
    let details = json!({
        "passed": passed,
        "steps": steps,
        "decided": [game.t.decided().len(), game.s.decided().len()],
        "disagreements": disagreements,
        "common_atoms": common,
        "separations": game.outcomes,
        "leaves": leaves.len(),
        "agreeing_leaf_pairs": together,
        "trace": game.t.trace(),
    });
    Ok(Outcome { passed, details, human })
}

fn run_orbits(base: &BaseSpace, cmd: &OrbitsCommand) -> Result<Outcome> {
    let census = CensusSubalgebra::new(base, cmd.generators.clone(), cmd.window)?;
    let report = orbit_count(&census)?;
    // independent partition: an isomorphism search for every pair of atoms
    let n = census.atoms().len();
    let mut oracle: Vec<Vec<usize>> = Vec::new();
    let mut psi_failures = 0;
    'atoms: for f in 0..n {
        for class in oracle.iter_mut() {
            if let Some(iso) = base_iso_search(&census, class[0], f)? {
                psi_failures += iso.psi_failures;
                class.push(f);
                continue 'atoms;
            }
        }
        oracle.push(vec![f]);
    }
    let ours: Vec<Vec<usize>> = report.classes.iter().map(|c| c.atoms.clone()).collect();
    let agrees = ours == oracle;
    let passed = agrees && psi_failures == 0;
    let mut human = String::new();
    let _ = writeln!(
        human,
        "  window {}, atoms {}, orbits {} (pairwise search finds {})",
        report.window,
        report.atoms,
        report.count,
        oracle.len()
    );
    for c in &report.classes {
        let _ = writeln!(human, "    {{{}}}", c.terms.join(", "));
    }
    let details = json!({
        "passed": passed,
        "orbits": report,
        "oracle_count": oracle.len(),
        "oracle_agrees": agrees,
        "psi_failures": psi_failures,
    });
    Ok(Outcome { passed, details, human })
}
