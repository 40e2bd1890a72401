//! One line per acceptance criterion; exits nonzero if any criterion fails.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use khmoves::diagram::{braid_closure, parse_pd, Diagram};
use khmoves::homology::{invariance_compare, khovanov_homology, HomologyTable};
use khmoves::moves::RuleBook;
use khmoves::verify::*;

const MUTATION_SEED: u64 = 0x5eed_2026;
const MUTATION_SITES: usize = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn identities(engine: &Engine, names: &[&str]) -> Outcome {
    let mut failing = Vec::new();
    let mut checks = 0;
    for n in names {
        let r = engine.run(n);
        checks += r.len();
        if let Some(bad) = r.iter().find(|x| !x.passed()) {
            let at = bad
                .witness
                .as_ref()
                .map(|w| format!(" at {} on {}", w.generator, bad.closure))
                .unwrap_or_default();
            failing.push(format!("{n}{at}"));
        }
    }
    if failing.is_empty() {
        Outcome {
            pass: true,
            detail: format!("{} identities, {checks} closure checks", names.len()),
        }
    } else {
        Outcome {
            pass: false,
            detail: format!("failing: {}", failing.join("; ")),
        }
    }
}

fn diagram(name: &str) -> Diagram {
    let text = std::fs::read_to_string(default_fixture_dir().join("diagrams").join(name)).unwrap();
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
        if let Some(w) = v.get("braid") {
            let word: Vec<i32> = serde_json::from_value(w.clone()).unwrap();
            return braid_closure(v["strands"].as_u64().unwrap() as usize, &word).unwrap();
        }
    }
    parse_pd(&text).unwrap()
}

fn criterion8() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut expect = |a: &str, b: &str, equal: bool| {
        let c = invariance_compare(&diagram(a), &diagram(b)).unwrap();
        if c.equal != equal {
            pass = false;
            notes.push(format!("{a} vs {b} equal={}", c.equal));
        }
    };
    expect("unknot.json", "unknot_kink.json", true);
    expect("trefoil_braid.json", "trefoil_r2.json", true);
    expect("trefoil_braid.json", "trefoil_r3.json", true);
    expect("trefoil_r2.json", "trefoil_r3.json", true);
    expect("unknot.json", "trefoil_braid.json", false);
    let stored: HomologyTable = serde_json::from_str(
        &std::fs::read_to_string(default_fixture_dir().join("trefoil_homology.json")).unwrap(),
    )
    .unwrap();
    if khovanov_homology(&diagram("trefoil_braid.json")).unwrap() != stored {
        pass = false;
        notes.push("trefoil table differs from the oracle fixture".into());
    }
    let detail = if pass {
        "unknot ~ kink, trefoil ~ R2 and R3 variants, unknot != trefoil, trefoil table matches fixture".to_string()
    } else {
        notes.join("; ")
    };
    Outcome { pass, detail }
}

fn main() {
    let start = Instant::now();
    let book = RuleBook::standard();
    let tr =
        load_transcripts(&default_fixture_dir().join("r1_transcripts.json")).expect("transcripts");
    let fixture_path = default_fixture_dir().join("semantics.json");
    let fixture = SemanticsFixture::load(&fixture_path).expect("semantics fixture");
    let cand = fixture.frozen;
    let ws = Workspace::new(
        cand.config,
        cand.semantics.markers,
        &ClosureSelection::default(),
    )
    .expect("workspace");
    let engine = Engine {
        ws: &ws,
        sem: cand.semantics,
        book: &book,
        at: None,
        transcripts: Some(&tr),
    };

    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let titles = [
        "d∘d = 0 on every local closure and the trefoil",
        "projections are chain maps and commute with the homotopies",
        "retractions commute through the projections",
        "twisted projection commutes with the homotopies but is not a chain map",
        "homotopy identities and stored R1 computations",
        "R1 splitting, acyclic complement and isomorphism",
    ];
    for (i, title) in titles.iter().enumerate() {
        let k = i as u8 + 1;
        let names = criterion_identities(k);
        results.push((k, title, identities(&engine, &names)));
    }

    let solved =
        solve_label_semantics(&book, Some(&tr), &SolverOptions::default()).expect("solver");
    let fresh = SemanticsFixture::build(&solved, &book, Some(&tr))
        .expect("audit")
        .map(|f| f.to_json());
    let stored = std::fs::read_to_string(&fixture_path).unwrap_or_default();
    let reproducible = fresh.as_deref() == Some(stored.as_str());
    let c7 = Outcome {
        pass: !solved.passing.is_empty() && reproducible,
        detail: format!(
            "{} of {} candidates pass; nearest misses {}; failing for all: [{}]; fixture reproducible: {reproducible}",
            solved.passing.len(),
            solved.candidates_examined,
            solved.nearest_misses.len(),
            solved.universally_failing.join(", ")
        ),
    };
    results.push((
        7,
        "semantics solver finds a candidate and the fixture re-derives",
        c7,
    ));
    results.push((8, "homology invariance at s = t = 0", criterion8()));

    let mut sites = book.coefficient_sites();
    sites.shuffle(&mut StdRng::seed_from_u64(MUTATION_SEED));
    sites.truncate(MUTATION_SITES);
    let muts = mutation_run(&cand, &book, Some(&tr), &sites, 1).expect("mutation");
    let missed: Vec<String> = muts
        .iter()
        .filter(|m| m.caught_by.is_empty())
        .map(|m| format!("{}:{}:{}", m.map, m.clause, m.term))
        .collect();
    let c9 = Outcome {
        pass: missed.is_empty() && muts.len() == MUTATION_SITES,
        detail: if missed.is_empty() {
            format!("{} perturbations, all caught", muts.len())
        } else {
            format!("not caught: {}", missed.join(", "))
        },
    };
    results.push((9, "single-coefficient mutations are caught", c9));

    let mut all = true;
    for (k, title, o) in &results {
        all &= o.pass;
        println!(
            "criterion {k} {}: {title}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let passed = results.iter().filter(|r| r.2.pass).count();
    println!(
        "acceptance: {passed}/{} criteria pass in {:.1}s",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !all {
        std::process::exit(1);
    }
}
