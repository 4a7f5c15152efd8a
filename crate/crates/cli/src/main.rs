use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadlimit::graph::{write_edge_list, FamilyKind, GraphFamily};
use quadlimit::graphon::{BlockKernel, CutNormMode, StepFunction};
use quadlimit::lab::{
    check_conditions, reproduce, second_moment_check, ExperimentReport, FamilyTemplate, LabOptions, DEFAULT_MAX_CELLS,
    EXAMPLE_IDS,
};
use quadlimit::limit::{
    expected_value, ito_block_integral, limit_pmf, mean_and_se, preset, sample_limit, univariate_ito_integral,
    PRESET_IDS,
};
use quadlimit::quadform::{exact_pmf, exact_truncated_pmf, mean_var, moment, simulate, truncated_mean_var, DEFAULT_CHUNKS};
use quadlimit::{Error, LimitSpec, Pmf, Result, SimConfig, SparseLaw};
use serde::de::DeserializeOwned;
use serde_json::json;

#[derive(Parser)]
#[command(name = "quadlimit", version, about = "Sparse graph quadratic forms and their limit laws")]
struct Cli {
    /// Print errors on stderr as a JSON object.
    #[arg(long, global = true)]
    json_errors: bool,
    /// Validate the inputs and stop before computing anything.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph and write its edge list.
    Gen {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo law of T_n (or T_{n,M}).
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_CHUNKS)]
        chunks: usize,
        /// Truncation level: vertices with degree above M r_n get weight 0.
        #[arg(long = "M")]
        m: Option<f64>,
        /// Degree scale r_n; defaults to 1 / P(X = 1).
        #[arg(long)]
        rn: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact law of T_n by enumeration (small graphs, Bernoulli weights).
    Exact {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        p: f64,
        #[arg(long = "M")]
        m: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact moments of T_n from motif counts.
    Moments {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        p: f64,
        #[arg(long = "M")]
        m: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample the limit law of a specification.
    LimitSample {
        /// Preset id, inline JSON or path to a JSON file.
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Quasi-exact PMF of the limit law.
    LimitPmf {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample a double (block kernel) or single (step function) Poisson integral.
    Ito {
        /// Symmetric block kernel, inline JSON or file.
        #[arg(long, conflicts_with = "function", required_unless_present = "function")]
        kernel: Option<String>,
        /// Step function, inline JSON or file.
        #[arg(long)]
        function: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Hypotheses of the limit theorem along an n grid.
    CheckConditions {
        #[command(flatten)]
        family: TemplateArgs,
        /// Limit specification: preset id, inline JSON or file.
        #[arg(long)]
        target: String,
        #[arg(long = "K", default_value_t = 1.0)]
        k: f64,
        #[arg(long = "M", default_value_t = 1.0)]
        m: f64,
        /// exact, alternating or auto.
        #[arg(long, default_value = "auto")]
        cut_mode: CutNormMode,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Truncated mean and variance over an (n, M) grid against Pois(lambda).
    SecondMoment {
        #[command(flatten)]
        family: TemplateArgs,
        #[arg(long = "M", value_delimiter = ',', default_value = "1")]
        m: Vec<f64>,
        #[arg(long)]
        lambda: f64,
        /// Replicates for the TV cross-check at the largest n; 0 skips it.
        #[arg(long, default_value_t = 0)]
        samples: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a worked example end to end.
    Reproduce {
        /// One of ex2.1-er, ex2.1-bipartite, ex2.2-cycle, ex2.3-star, ex2.3-matching, ex2.4, ex2.5, ex2.6, ex2.7.
        id: String,
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_CHUNKS)]
        chunks: usize,
        /// Graph seeds per n for random families.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Override the default n grid.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// k:n, cycle:n, path:n, star:n, stars:n, er:n:q, file:path, a family JSON file, or an edge-list path.
    #[arg(long)]
    graph: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct WeightArgs {
    /// Bernoulli(p) weights.
    #[arg(long, conflicts_with = "law", required_unless_present = "law")]
    p: Option<f64>,
    /// General weight law, e.g. poisson:0.01 or binomial:3:0.01.
    #[arg(long)]
    law: Option<String>,
}

#[derive(Args)]
struct TemplateArgs {
    /// Family template JSON (inline or file), e.g. {"family":{"kind":"cycle"},"p":{"c":1.0,"exponent":0.5}}.
    #[arg(long)]
    family: String,
    /// Comma-separated n grid.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = DEFAULT_CHUNKS)]
    chunks: usize,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; without it the full result goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the extension of --out, else json.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// A computed result in both output formats plus its one-line summary.
struct Artifact {
    json: String,
    csv: String,
    /// Used instead of `json` when writing to a file without a json/csv extension or format.
    plain: Option<String>,
    summary: String,
}

impl Artifact {
    fn pmf(pmf: &Pmf, label: &str) -> Artifact {
        Artifact {
            json: serde_json::to_string_pretty(pmf).expect("pmf serializes"),
            csv: pmf.to_csv(),
            plain: None,
            summary: format!(
                "{label}: support={} mean={:.6} variance={:.6} tail_mass={:e}",
                pmf.probs.len(),
                pmf.mean(),
                pmf.variance(),
                pmf.tail_mass
            ),
        }
    }

    fn report(rep: &ExperimentReport) -> Artifact {
        let mut summary = format!("{}: rows={}", rep.id, rep.rows.len());
        if let Some(tv) = rep.final_tv {
            summary += &format!(" final_tv={tv:.5}");
        }
        if let Some(b) = rep.tv_budget {
            summary += &format!(" budget={b}");
        }
        if let Some(s) = &rep.second_moment {
            summary += &format!(" mean={:.6} variance={:.6} predicts_poisson={}", s.mean, s.variance, s.predicts_poisson);
        }
        if let Some(s) = &rep.subsequences {
            summary += &format!(" gap={:.4} separated={}", s.gap, s.separated);
        }
        if let Some(p) = rep.passed {
            summary += &format!(" passed={p}");
        }
        Artifact {
            json: rep.to_json(),
            csv: rep.to_csv(),
            plain: None,
            summary,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 2 && std::env::args().any(|a| a == "--json-errors") {
                let msg = e.kind().to_string();
                eprintln!("{}", json!({"error": "usage", "message": msg}));
            } else {
                let _ = e.print();
            }
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.json_errors {
                eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(if e.is_runtime_limit() { 3 } else { 2 })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let dry = cli.dry_run;
    let (artifact, out) = match &cli.command {
        Command::Gen { graph, out } => {
            let family = parse_graph(graph)?;
            if dry {
                return dry_ok("gen");
            }
            let g = family.build()?;
            let edges: Vec<[u32; 2]> = g.edges().iter().map(|&(u, v)| [u, v]).collect();
            let mut csv = String::from("u,v\n");
            for [u, v] in &edges {
                csv += &format!("{u},{v}\n");
            }
            let art = Artifact {
                json: serde_json::to_string(&json!({"n": g.n(), "edges": edges})).expect("serializes"),
                csv,
                plain: Some(write_edge_list(&g)),
                summary: format!("gen: n={} edges={} max_degree={}", g.n(), g.num_edges(), g.max_degree()),
            };
            (art, out)
        }
        Command::Simulate {
            graph,
            weights,
            samples,
            chunks,
            m,
            rn,
            out,
        } => {
            let family = parse_graph(graph)?;
            let law = match (&weights.p, &weights.law) {
                (Some(p), _) => SparseLaw::Bernoulli { p: *p },
                (None, Some(l)) => l.parse()?,
                (None, None) => unreachable!("clap requires one of --p and --law"),
            };
            let seed = require_seed(graph.seed, "simulate")?;
            let mut cfg = SimConfig::new(law, *samples, seed).with_chunks(*chunks);
            if let Some(m) = m {
                cfg = cfg.with_truncation(*m);
            }
            if let Some(r) = rn {
                cfg = cfg.with_rn(*r);
            }
            cfg.validate()?;
            law.validate()?;
            let g = family.build()?;
            if dry {
                return dry_ok("simulate");
            }
            (Artifact::pmf(&simulate(&g, &cfg)?, "simulate"), out)
        }
        Command::Exact { graph, p, m, out } => {
            let g = parse_graph(graph)?.build()?;
            check_p(*p)?;
            if dry {
                return dry_ok("exact");
            }
            let pmf = match m {
                Some(m) => exact_truncated_pmf(&g, *p, *m)?,
                None => exact_pmf(&g, *p)?,
            };
            (Artifact::pmf(&pmf, "exact"), out)
        }
        Command::Moments { graph, p, m, out } => {
            let g = parse_graph(graph)?.build()?;
            check_p(*p)?;
            if dry {
                return dry_ok("moments");
            }
            let (mean, variance) = mean_var(&g, *p);
            let raw = (1..=3).map(|a| moment(&g, *p, a, None)).collect::<Result<Vec<_>>>()?;
            let mut csv = format!("quantity,value\nmean,{mean}\nvariance,{variance}\n");
            for (a, x) in raw.iter().enumerate() {
                csv += &format!("moment{},{x}\n", a + 1);
            }
            let mut value = json!({"n": g.n(), "edges": g.num_edges(), "p": p, "mean": mean, "variance": variance, "raw_moments": raw});
            let mut summary = format!("moments: mean={mean:.6} variance={variance:.6}");
            if let Some(m) = m {
                let (tm, tv) = truncated_mean_var(&g, *p, *m)?;
                let traw = (1..=3).map(|a| moment(&g, *p, a, Some(*m))).collect::<Result<Vec<_>>>()?;
                csv += &format!("truncated_mean,{tm}\ntruncated_variance,{tv}\n");
                for (a, x) in traw.iter().enumerate() {
                    csv += &format!("truncated_moment{},{x}\n", a + 1);
                }
                value["truncated"] = json!({"M": m, "mean": tm, "variance": tv, "raw_moments": traw});
                summary += &format!(" truncated_mean={tm:.6} truncated_variance={tv:.6}");
            }
            let art = Artifact {
                json: serde_json::to_string_pretty(&value).expect("serializes"),
                csv,
                plain: None,
                summary,
            };
            (art, out)
        }
        Command::LimitSample {
            spec,
            samples,
            seed,
            out,
        } => {
            let spec = parse_spec(spec)?;
            let seed = require_seed(*seed, "limit-sample")?;
            if dry {
                return dry_ok("limit-sample");
            }
            (Artifact::pmf(&sample_limit(&spec, *samples, seed)?, "limit-sample"), out)
        }
        Command::LimitPmf { spec, eps, out } => {
            let spec = parse_spec(spec)?;
            if !(*eps > 0.0 && *eps <= 1e-2) {
                return Err(Error::InvalidParameter("eps must lie in (0, 0.01]".into()));
            }
            if dry {
                return dry_ok("limit-pmf");
            }
            (Artifact::pmf(&limit_pmf(&spec, *eps)?, "limit-pmf"), out)
        }
        Command::Ito {
            kernel,
            function,
            samples,
            seed,
            out,
        } => {
            let seed = require_seed(*seed, "ito")?;
            let (draws, expected) = match (kernel, function) {
                (Some(k), _) => {
                    let f: BlockKernel = parse_json(k)?;
                    if dry {
                        return dry_ok("ito");
                    }
                    (ito_block_integral(&f, *samples, seed)?, expected_value(&f))
                }
                (None, Some(fun)) => {
                    let f: StepFunction = parse_json(fun)?;
                    if dry {
                        return dry_ok("ito");
                    }
                    (univariate_ito_integral(&f, *samples, seed)?, f.integral())
                }
                (None, None) => unreachable!("clap requires one of --kernel and --function"),
            };
            let (mean, se) = mean_and_se(&draws);
            let mut csv = String::from("value\n");
            for x in &draws {
                csv += &format!("{x}\n");
            }
            let value = json!({"samples": samples, "mean": mean, "standard_error": se, "expected_value": expected});
            let art = Artifact {
                json: serde_json::to_string_pretty(&value).expect("serializes"),
                csv,
                plain: None,
                summary: format!("ito: samples={samples} mean={mean:.6} se={se:.6} expected={expected:.6}"),
            };
            (art, out)
        }
        Command::CheckConditions {
            family,
            target,
            k,
            m,
            cut_mode,
            out,
        } => {
            let (template, opts) = parse_template(family, 0)?;
            let spec = parse_spec(target)?;
            if dry {
                return dry_ok("check-conditions");
            }
            let opts = LabOptions {
                cut_mode: *cut_mode,
                ..opts
            };
            let rep = check_conditions(&template, &family.n, &spec, *k, *m, &opts)?;
            (Artifact::report(&rep), out)
        }
        Command::SecondMoment {
            family,
            m,
            lambda,
            samples,
            out,
        } => {
            let (template, opts) = parse_template(family, *samples)?;
            if dry {
                return dry_ok("second-moment");
            }
            let rep = second_moment_check(&template, &family.n, m, *lambda, &opts)?;
            (Artifact::report(&rep), out)
        }
        Command::Reproduce {
            id,
            samples,
            seed,
            chunks,
            seeds,
            n,
            out,
        } => {
            if !EXAMPLE_IDS.contains(&id.as_str()) && id != "ex2.4-stars" {
                return Err(Error::UnknownExample(id.clone()));
            }
            let seed = require_seed(*seed, "reproduce")?;
            if dry {
                return dry_ok("reproduce");
            }
            let opts = LabOptions {
                samples: *samples,
                seed,
                chunks: *chunks,
                seeds: *seeds,
                n_grid: n.clone(),
                max_cells: max_cells()?,
                cut_mode: CutNormMode::Auto,
            };
            (Artifact::report(&reproduce(id, &opts)?), out)
        }
    };
    emit(&artifact, out)
}

fn dry_ok(cmd: &str) -> Result<()> {
    say(&format!("{cmd}: inputs valid (dry run)"));
    Ok(())
}

fn emit(art: &Artifact, out: &OutArgs) -> Result<()> {
    let ext_format = out.out.as_deref().and_then(|p| match p.extension()?.to_str()? {
        "csv" => Some(Format::Csv),
        "json" => Some(Format::Json),
        _ => None,
    });
    let body = match out.format.or(ext_format) {
        Some(Format::Csv) => &art.csv,
        Some(Format::Json) => &art.json,
        None => art.plain.as_ref().unwrap_or(&art.json),
    };
    match &out.out {
        Some(path) => {
            let mut text = body.clone();
            if !text.ends_with('\n') {
                text.push('\n');
            }
            fs::write(path, text).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            say(&format!("{} -> {}", art.summary, path.display()));
        }
        None => say(body.trim_end()),
    }
    Ok(())
}

// A closed pipe (`quadlimit gen ... | head`) is not an error worth a panic.
fn say(line: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{line}").and_then(|()| stdout.flush());
}

fn require_seed(seed: Option<u64>, cmd: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::InvalidParameter(format!("{cmd} is stochastic: --seed is required")))
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p={p} must lie in (0, 1]")))
    }
}

fn max_cells() -> Result<usize> {
    match std::env::var("QUADLIMIT_MAX_CELLS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("QUADLIMIT_MAX_CELLS={v} is not a count"))),
        Err(_) => Ok(DEFAULT_MAX_CELLS),
    }
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::InvalidParameter(format!("bad {what} `{s}` in graph shorthand")))
}

fn parse_graph(args: &GraphArgs) -> Result<GraphFamily> {
    let spec = args.graph.as_str();
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let kind = match head {
        "k" => FamilyKind::Complete { n: parse_count(rest, "n")? },
        "cycle" => FamilyKind::Cycle { n: parse_count(rest, "n")? },
        "path" => FamilyKind::Path { n: parse_count(rest, "n")? },
        "star" => FamilyKind::Star { n: parse_count(rest, "n")? },
        "stars" => FamilyKind::DisjointStars {
            n: parse_count(rest, "n")?,
            size: None,
        },
        "er" => {
            let (n, q) = rest
                .split_once(':')
                .ok_or_else(|| Error::InvalidParameter("expected er:n:q".into()))?;
            let q = q
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad q `{q}` in graph shorthand")))?;
            FamilyKind::ErdosRenyi {
                n: parse_count(n, "n")?,
                q,
            }
        }
        "file" => FamilyKind::EdgeListFile { path: rest.into() },
        _ if spec.ends_with(".json") => {
            let mut family: GraphFamily = parse_json(spec)?;
            if family.seed.is_none() {
                family.seed = args.seed;
            }
            return checked(family);
        }
        _ => FamilyKind::EdgeListFile { path: spec.into() },
    };
    checked(GraphFamily { kind, seed: args.seed })
}

fn checked(family: GraphFamily) -> Result<GraphFamily> {
    family.validate()?;
    if family.is_random() && family.seed.is_none() {
        return Err(Error::InvalidParameter("random graph families need --seed".into()));
    }
    if let FamilyKind::EdgeListFile { path } = &family.kind {
        // reading the file is the validation
        quadlimit::graph::read_edge_list(path)?;
    }
    Ok(family)
}

fn parse_template(args: &TemplateArgs, samples: u64) -> Result<(FamilyTemplate, LabOptions)> {
    let template: FamilyTemplate = parse_json(&args.family)?;
    for &n in &args.n {
        template.p.p(n)?;
        template.at(n, Some(0)).validate()?;
    }
    let seed = if template.is_random() || samples > 0 {
        require_seed(args.seed, "this experiment")?
    } else {
        args.seed.unwrap_or(0)
    };
    let opts = LabOptions {
        samples,
        seed,
        chunks: args.chunks,
        seeds: args.seeds,
        n_grid: None,
        max_cells: max_cells()?,
        cut_mode: CutNormMode::Auto,
    };
    Ok((template, opts))
}

fn parse_spec(arg: &str) -> Result<LimitSpec> {
    if PRESET_IDS.contains(&arg) || arg == "ex2.4" {
        return preset(arg);
    }
    let spec: LimitSpec = parse_json(arg)?;
    spec.validate()?;
    Ok(spec)
}

/// Inline JSON (starting with `{`) or a path to a JSON file.
fn parse_json<T: DeserializeOwned>(arg: &str) -> Result<T> {
    let (text, path) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), PathBuf::from("<inline>"))
    } else {
        let path = Path::new(arg).to_path_buf();
        let text = fs::read_to_string(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        (text, path)
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path,
        line: e.line(),
        message: e.to_string(),
    })
}

