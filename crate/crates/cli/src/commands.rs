use std::fmt::Write as _;
use std::io::Write;

use permqkd::analysis::hermitian_rank;
use permqkd::protocol::export::{write_transcripts_jsonl, RunSummary};
use permqkd::{
    detection_curve, expected_key_rate, feasibility_table, orbit_gram, run_protocol,
    unambiguous_discrimination_possible, validate_timing, ChannelAttack, CharlieStrategy,
    ProbeState, ProtocolConfig, ProtocolRun, SeedTree, StrategyKind, TimingConfig, TimingTrials,
};
use serde::Serialize;

use crate::args::{
    Common, FeasibilityArgs, Format, ProtocolArgs, RunArgs, StrategyArg, SweepArgs, TimingDemoArgs,
    ValidateTimingArgs, VERSION,
};
use crate::error::CliError;
use crate::output::{print_json, print_rows, OutDir};

/// Where a command writes its standard output, and whether it runs under CI.
pub struct Ctx<'a> {
    pub out: &'a mut dyn Write,
    pub ci: bool,
}

#[derive(Serialize)]
struct Summary<'a, S, R> {
    version: &'static str,
    command: &'a str,
    spec: &'a S,
    result: R,
}

fn summary<'a, S, R>(command: &'a str, spec: &'a S, result: R) -> Summary<'a, S, R> {
    Summary {
        version: VERSION,
        command,
        spec,
        result,
    }
}

/// Fill in the seed, which is mandatory under CI.
fn resolve_seed(common: &mut Common, ci: bool) -> Result<u64, CliError> {
    match common.seed {
        Some(s) => Ok(s),
        None if ci => Err(CliError::MissingSeed),
        None => {
            common.seed = Some(0);
            Ok(0)
        }
    }
}

fn protocol_config(p: &ProtocolArgs, seed: u64) -> ProtocolConfig {
    ProtocolConfig {
        rounds: p.n,
        batch_size: p.m,
        check_fraction: p.check_fraction,
        uniformity_alpha: p.alpha,
        seed,
    }
}

fn strategy_kind(s: StrategyArg) -> Result<StrategyKind, CliError> {
    match s {
        StrategyArg::Flip => Ok(StrategyKind::FlipK),
        StrategyArg::Random => Ok(StrategyKind::RandomAnnounceK),
        StrategyArg::Honest => Err(CliError::Usage(
            "attack-sweep needs a cheating strategy (flip or random)".into(),
        )),
    }
}

#[derive(Serialize)]
struct RegisterRow {
    round: usize,
    register: usize,
    prepared: String,
    position: usize,
    announced: String,
    deduced: String,
    alice_basis: String,
}

fn register_rows(run: &ProtocolRun) -> Vec<RegisterRow> {
    run.transcripts
        .iter()
        .flat_map(|t| {
            (0..t.prepared.len()).map(move |j| RegisterRow {
                round: t.round_index,
                register: j,
                prepared: t.prepared[j].to_string(),
                position: t.permutation.image(j),
                announced: t.charlie_announced[t.permutation.image(j)]
                    .state
                    .to_string(),
                deduced: t.bob_deduced[j].state.to_string(),
                alice_basis: format!("{:?}", t.alice_bases[j]),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct RunResult {
    #[serde(flatten)]
    summary: RunSummary,
    key_length: usize,
    keys_agree: bool,
    expected_key_length: f64,
    interceptions: usize,
}

pub fn run(ctx: &mut Ctx, mut args: RunArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&mut args.common, ctx.ci)?;
    let config = protocol_config(&args.protocol, seed);
    let strategy = match args.strategy {
        StrategyArg::Honest => {
            if args.k != 0 {
                log::warn!("--k is ignored for the honest strategy");
            }
            CharlieStrategy::Honest
        }
        s => strategy_kind(s)?.with_k(args.k),
    };
    let attack = if args.intercept_resend {
        ChannelAttack::InterceptResend
    } else {
        ChannelAttack::None
    };
    let run = run_protocol(&config, &strategy, attack)?;
    let (key_length, keys_agree) = run
        .keys()
        .map_or((0, false), |(a, b)| (a.bits.len(), a.bits == b.bits));
    let result = RunResult {
        summary: RunSummary::from(&run),
        key_length,
        keys_agree,
        expected_key_length: expected_key_rate(&config),
        interceptions: run.interceptions.len(),
    };
    if let Some(dir) = &args.common.out {
        let out = OutDir::create(dir)?;
        match args.common.format.unwrap_or(Format::Jsonl) {
            Format::Jsonl => {
                out.write_with("transcripts.jsonl", |w| {
                    write_transcripts_jsonl(w, &run.transcripts)
                })?;
            }
            Format::Csv => {
                out.write_rows("registers", &register_rows(&run), Format::Csv)?;
            }
        }
        out.write_json("summary.json", &summary("run", &args, &result))?;
    }
    print_json(ctx.out, &summary("run", &args, &result))?;
    if args.expect_accept && !run.accepted() {
        let reason = match &run.outcome {
            permqkd::ProtocolOutcome::Abort { reason } => format!("{reason:?}"),
            permqkd::ProtocolOutcome::Accept { .. } => unreachable!(),
        };
        return Err(CliError::UnexpectedAbort(reason));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepCsvRow {
    strategy: String,
    k: usize,
    f: f64,
    m: usize,
    n: usize,
    trials: u64,
    analytic: f64,
    empirical: f64,
    stderr: f64,
    sampling_model: f64,
}

pub fn attack_sweep(ctx: &mut Ctx, mut args: SweepArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&mut args.common, ctx.ci)?;
    let config = protocol_config(&args.protocol, seed);
    config.validate()?;
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let mut rows = Vec::new();
    for &s in &args.strategy {
        let kind = strategy_kind(s)?;
        for row in detection_curve(kind, &config, &args.k_values, args.trials)? {
            rows.push(SweepCsvRow {
                strategy: kind.to_string(),
                k: row.k,
                f: config.check_fraction,
                m: config.batch_size,
                n: config.rounds,
                trials: args.trials,
                analytic: row.analytic,
                empirical: row.empirical,
                stderr: row.stderr,
                sampling_model: row.sampling_model,
            });
        }
    }
    emit_table(ctx, "attack-sweep", "sweep", &args, &args.common, &rows)
}

pub fn timing_demo(ctx: &mut Ctx, mut args: TimingDemoArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&mut args.common, ctx.ci)?;
    let bank_size = args.bank_size.unwrap_or(args.m + 1);
    let tree = SeedTree::new(seed);
    let mut trials = vec![TimingTrials {
        m: args.m,
        bank_size: 0,
        gap_ratio: 0.0,
        stagger: args.stagger,
        trials: args.trials,
        seed: tree.child(0).seed(),
    }];
    for (i, &gap_ratio) in args.gap_ratios.iter().enumerate() {
        trials.push(TimingTrials {
            bank_size,
            gap_ratio,
            seed: tree.child(i as u64 + 1).seed(),
            ..trials[0]
        });
    }
    let rows = trials
        .iter()
        .map(TimingTrials::sweep_row)
        .collect::<Result<Vec<_>, _>>()?;
    emit_table(ctx, "timing-demo", "timing", &args, &args.common, &rows)
}

fn gram_text(m: usize, seed: u64) -> Result<(String, usize, bool), CliError> {
    if m == 0 || m > 4 {
        return Err(CliError::Usage(
            "--dump-gram accepts 1 to 4 registers".into(),
        ));
    }
    let probe = ProbeState::random(m, &mut SeedTree::new(seed).rng());
    let gram = orbit_gram(&probe)?;
    let mut text = String::new();
    for r in 0..gram.nrows() {
        let line: Vec<String> = gram
            .row(r)
            .iter()
            .map(|z| format!("{:+.9}{:+.9}i", z.re, z.im))
            .collect();
        writeln!(text, "{}", line.join(" ")).expect("writing to a String");
    }
    Ok((
        text,
        hermitian_rank(&gram),
        unambiguous_discrimination_possible(&probe)?,
    ))
}

#[derive(Serialize)]
struct GramInfo {
    m: usize,
    rank: usize,
    unambiguous: bool,
}

pub fn feasibility(ctx: &mut Ctx, mut args: FeasibilityArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&mut args.common, ctx.ci)?;
    let rows = feasibility_table(args.m_max)?;
    let gram = args.dump_gram.map(|m| gram_text(m, seed)).transpose()?;
    match &args.common.out {
        Some(dir) => {
            let out = OutDir::create(dir)?;
            let format = args.common.format.unwrap_or(Format::Csv);
            out.write_rows("feasibility", &rows, format)?;
            let info = match (&gram, args.dump_gram) {
                (Some((text, rank, unambiguous)), Some(m)) => {
                    out.write_with(&format!("gram_m{m}.txt"), |mut w| {
                        w.write_all(text.as_bytes())?;
                        w.flush()
                    })?;
                    Some(GramInfo {
                        m,
                        rank: *rank,
                        unambiguous: *unambiguous,
                    })
                }
                _ => None,
            };
            let s = summary(
                "feasibility",
                &args,
                serde_json::json!({ "rows": rows, "gram": info }),
            );
            out.write_json("summary.json", &s)?;
            print_json(ctx.out, &s)
        }
        None => {
            print_rows(ctx.out, &rows, args.common.format.unwrap_or(Format::Csv))?;
            if let Some((text, _, _)) = gram {
                ctx.out
                    .write_all(text.as_bytes())
                    .map_err(|e| CliError::output("<stdout>", e))?;
            }
            Ok(())
        }
    }
}

pub fn validate_timing_cmd(ctx: &mut Ctx, mut args: ValidateTimingArgs) -> Result<(), CliError> {
    resolve_seed(&mut args.common, ctx.ci)?;
    let report = validate_timing(&TimingConfig {
        tau: args.tau,
        rate: args.rate,
        ports: args.m,
        multiplexed: args.multiplexed,
    })?;
    let s = summary("validate-timing", &args, &report);
    if let Some(dir) = &args.common.out {
        OutDir::create(dir)?.write_json("summary.json", &s)?;
    }
    print_json(ctx.out, &s)
}

fn emit_table<S: Serialize, T: Serialize>(
    ctx: &mut Ctx,
    command: &str,
    stem: &str,
    spec: &S,
    common: &Common,
    rows: &[T],
) -> Result<(), CliError> {
    let format = common.format.unwrap_or(Format::Csv);
    match &common.out {
        Some(dir) => {
            let out = OutDir::create(dir)?;
            out.write_rows(stem, rows, format)?;
            let s = summary(command, spec, rows);
            out.write_json("summary.json", &s)?;
            print_json(ctx.out, &s)
        }
        None => print_rows(ctx.out, rows, format),
    }
}
