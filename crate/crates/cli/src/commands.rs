// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};

use blockseg::eval::{decomposition_suite, lemma1_check, Lemma1Options};
use blockseg::{load_matrix, save_matrix, select_k, PrefixStats, SegConfig, SimSpec};

use crate::args::{SegmentArgs, SimulateArgs, TheoryCheckArgs};
use crate::error::{exit, CliError, CliResult};
use crate::report::{SegmentReport, TheoryCheckReport, TruthSidecar};

pub(crate) fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialises");
    s.push('\n');
    s
}

pub fn segment_report(args: &SegmentArgs) -> CliResult<SegmentReport> {
    let cfg = args.config();
    let y = load_matrix(&args.input, &cfg)?;
    let stats = PrefixStats::build(&y, &cfg)?;
    let result = select_k(&stats)?;
    Ok(SegmentReport::new(&result, &cfg, stats.limits()))
}

pub fn segment(args: &SegmentArgs) -> CliResult<i32> {
    let report = segment_report(args)?;
    write_text(args.output.as_deref(), &to_json(&report))?;
    Ok(exit::OK)
}

/// `<output>.truth.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".truth.json");
    PathBuf::from(s)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<i32> {
    let cfg = SegConfig {
        c: args.seg.c,
        min_len: args.seg.min_len,
        k_max: args.n.max(1),
        symmetrize: false,
    };
    let spec = SimSpec {
        n: args.n,
        truth: args.truth.truth(args.sigma, args.omega),
        seed: args.seed,
        noise: Default::default(),
    };
    let sim = blockseg::generate(&spec, &cfg)?;
    save_matrix(&args.output, &sim.matrix)?;
    let sidecar = TruthSidecar {
        c: cfg.c,
        min_len: cfg.min_len,
        n0: cfg.limits(args.n)?.n0,
        boundaries: sim.truth_boundaries.boundaries().to_vec(),
        t: sim.truth_boundaries.one_based(),
        spec,
    };
    write_text(Some(&sidecar_path(&args.output)), &to_json(&sidecar))?;
    Ok(exit::OK)
}

pub fn theory_check_report(args: &TheoryCheckArgs) -> CliResult<TheoryCheckReport> {
    let truth = args.truth.truth(args.sigma, 0.0);
    truth.validate_shape()?;
    let cfg = SegConfig {
        c: args.seg.c,
        min_len: args.seg.min_len,
        k_max: args.kmax.unwrap_or(truth.k() + 1),
        symmetrize: false,
    };
    let opts = Lemma1Options {
        delta: args.delta,
        sample_budget: args.budget,
        seed: args.seed,
        ..Lemma1Options::new(args.mode.into())
    };
    let lemma1 = lemma1_check(&truth, &cfg, args.n, &opts)?;
    let suite_cfg = SegConfig {
        k_max: cfg.k_max.max(truth.k() + 3),
        ..cfg
    };
    let decomposition = decomposition_suite(&truth, &suite_cfg, args.n, args.pairs, args.seed)?;
    let all_hold = lemma1.holds && decomposition.holds;
    Ok(TheoryCheckReport {
        lemma1,
        decomposition,
        all_hold,
    })
}

pub fn theory_check(args: &TheoryCheckArgs) -> CliResult<i32> {
    let report = theory_check_report(args)?;
    write_text(None, &to_json(&report))?;
    Ok(if report.all_hold {
        exit::OK
    } else {
        exit::VIOLATION
    })
}
