mod render;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cellassoc::bounds::{counting_bound, lemma2_chain_bound, nc_one_bound, reconstruction_bound};
use cellassoc::downlink::{
    max_downlink_dof, verify_witness, DlEvaluation, ZfOracle, DL_EXACT_LIMIT,
};
use cellassoc::schemes::{
    avg_optimal, downlink_optimal, pair_association, verify_plan, SchemePlan,
};
use cellassoc::search::{
    compare_with_theorem, exhaustive_search_with_progress, rows_to_csv, Objective, SearchConfig,
    DEFAULT_CAP,
};
use cellassoc::uplink::{max_uplink_dof, verify_order, UlEvaluation, UL_EXACT_LIMIT};
use cellassoc::{CellAssociation, Error, Mode, Rational};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "cellassoc",
    version,
    about = "Cell association and DoF toolkit for linear interference networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a scheme plan.
    Scheme {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        nc: usize,
        #[arg(long = "type", value_enum, default_value = "avg")]
        kind: SchemeKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an association or plan file with the DoF oracles.
    Eval {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "avg")]
        session: Session,
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive search over windowed associations.
    Search {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        nc: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long)]
        cap: Option<u128>,
        #[arg(long, value_enum, default_value = "json")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Converse certificate for an association or plan file.
    Bound {
        input: PathBuf,
        #[arg(long = "type", value_enum, default_value = "counting")]
        kind: BoundArg,
        /// Defaults to the association's budget.
        #[arg(long)]
        nc: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw an association or plan file.
    Render {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "ascii")]
        format: DiagramFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Theorem values for a list of budgets.
    Report {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4])]
        nc: Vec<usize>,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeKind {
    Avg,
    Downlink,
    Pair,
    Ncone,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Session {
    Up,
    Down,
    Avg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Avg,
    Dl,
    Ul,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundArg {
    Lemma2,
    Counting,
    Reconstruction,
    Ncone,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagramFormat {
    Ascii,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

enum Failure {
    Input(String),
    Limit(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Limit(_) => 3,
            Failure::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Limit(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::LimitExceeded { .. } | Error::BudgetExceeded { .. } => {
                Failure::Limit(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (result, out) = match cli.command {
        Command::Scheme { k, nc, kind, out } => (cmd_scheme(k, nc, kind), out),
        Command::Eval {
            input,
            session,
            seeds,
            out,
        } => (cmd_eval(&input, session, &seeds), out),
        Command::Search {
            config,
            k,
            nc,
            window,
            objective,
            seeds,
            cap,
            format,
            out,
        } => (
            search_config(config.as_deref(), k, nc, window, objective, &seeds, cap)
                .and_then(|c| cmd_search(&c, format)),
            out,
        ),
        Command::Bound {
            input,
            kind,
            nc,
            out,
        } => (cmd_bound(&input, kind, nc), out),
        Command::Render { input, format, out } => (cmd_render(&input, format), out),
        Command::Report { nc, format, out } => (cmd_report(&nc, format), out),
    };
    match result.and_then(|text| emit(&text, out.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> CmdResult {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Internal(e.to_string()))
}

fn seeds_or_default(seeds: &[u64]) -> Vec<u64> {
    if seeds.is_empty() {
        cellassoc::downlink::DEFAULT_SEEDS.to_vec()
    } else {
        seeds.to_vec()
    }
}

enum Input {
    Assoc(CellAssociation),
    Plan(Box<SchemePlan>),
}

impl Input {
    fn assoc(&self) -> &CellAssociation {
        match self {
            Input::Assoc(a) => a,
            Input::Plan(p) => &p.assoc,
        }
    }
}

fn read_input(path: &Path) -> Result<Input, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let input = match serde_json::from_str::<SchemePlan>(&text) {
        Ok(p) => Input::Plan(Box::new(p)),
        Err(plan_err) => match serde_json::from_str::<CellAssociation>(&text) {
            Ok(a) => Input::Assoc(a),
            Err(assoc_err) => {
                return Err(Failure::Input(format!(
                    "{} is neither an association ({assoc_err}) nor a plan ({plan_err})",
                    path.display()
                )))
            }
        },
    };
    input
        .assoc()
        .validate()
        .map_err(|v| Failure::from(Error::InvalidAssociation(v)))?;
    Ok(input)
}

fn pair_plan(k: usize, nc: usize) -> Result<SchemePlan, Failure> {
    if nc != 2 {
        return Err(Failure::Input(format!(
            "the pair association needs nc=2, got {nc}"
        )));
    }
    let assoc = pair_association(k)?;
    let oracle = ZfOracle::with_default_seeds(k)?;
    let dl = max_downlink_dof(&assoc, &oracle, DL_EXACT_LIMIT, Mode::ExactOrGreedy)?;
    let mut notes = vec!["downlink active set chosen by the zero-forcing oracle".to_string()];
    if !dl.exact {
        notes.push(format!(
            "k above {DL_EXACT_LIMIT}: downlink set is a greedy lower bound"
        ));
    }
    Ok(SchemePlan {
        assoc,
        claimed_dl_dof: Rational::from(dl.sum_dof),
        claimed_ul_dof: Rational::from(k),
        dl_active_users: dl.active_users.into_iter().collect(),
        dl_silent_bs: BTreeSet::new(),
        ul_active_users: (1..=k).collect(),
        notes,
    })
}

fn cmd_scheme(k: usize, nc: usize, kind: SchemeKind) -> CmdResult {
    let plan = match kind {
        SchemeKind::Avg => avg_optimal(k, nc)?,
        SchemeKind::Downlink => downlink_optimal(k, nc)?,
        SchemeKind::Pair => pair_plan(k, nc)?,
        SchemeKind::Ncone => {
            if nc != 1 {
                return Err(Failure::Input(format!("type ncone needs nc=1, got {nc}")));
            }
            avg_optimal(k, 1)?
        }
    };
    let check = verify_plan(&plan, &ZfOracle::with_default_seeds(k)?)?;
    report_warnings(&check.warnings);
    if !check.dl_ok || !check.ul_ok {
        return Err(Failure::Internal(format!(
            "constructed plan failed verification (downlink ok: {}, uplink ok: {})",
            check.dl_ok, check.ul_ok
        )));
    }
    to_json(&plan)
}

fn report_warnings(w: &[cellassoc::downlink::GenericityWarning]) {
    for x in w {
        eprintln!(
            "warning: seeds disagree on active set {:?} (feasible under {:?}, infeasible under {:?})",
            x.active, x.feasible_seeds, x.infeasible_seeds
        );
    }
}

#[derive(Serialize)]
struct EvalReport {
    k: usize,
    nc: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    dl: Option<DlEvaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ul: Option<UlEvaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    avg_per_user: Option<Rational>,
}

fn cmd_eval(path: &Path, session: Session, seeds: &[u64]) -> CmdResult {
    let input = read_input(path)?;
    let assoc = input.assoc();
    let dl = if session != Session::Up {
        let oracle = ZfOracle::new(assoc.k, &seeds_or_default(seeds))?;
        let dl = max_downlink_dof(assoc, &oracle, DL_EXACT_LIMIT, Mode::Exact)?;
        report_warnings(&dl.warnings);
        let ch = oracle
            .channel_for_seed(dl.witness.seed)
            .ok_or_else(|| Failure::Internal("witness refers to an unknown seed".into()))?;
        if !verify_witness(&dl.witness, assoc, &dl.active_users, ch) {
            return Err(Failure::Internal(
                "zero-forcing witness failed re-verification".into(),
            ));
        }
        Some(dl)
    } else {
        None
    };
    let ul = if session != Session::Down {
        let ul = max_uplink_dof(assoc, UL_EXACT_LIMIT, Mode::Exact)?;
        if !verify_order(&ul.order, assoc, &ul.active_users) {
            return Err(Failure::Internal(
                "decoding order failed re-verification".into(),
            ));
        }
        Some(ul)
    } else {
        None
    };
    let avg_per_user = match (&dl, &ul) {
        (Some(d), Some(u)) => Some(Rational::new(
            (d.sum_dof + u.sum_dof) as i64,
            2 * assoc.k as i64,
        )),
        _ => None,
    };
    to_json(&EvalReport {
        k: assoc.k,
        nc: assoc.nc,
        dl,
        ul,
        avg_per_user,
    })
}

fn search_config(
    path: Option<&Path>,
    k: Option<usize>,
    nc: Option<usize>,
    window: Option<usize>,
    objective: Option<ObjectiveArg>,
    seeds: &[u64],
    cap: Option<u128>,
) -> Result<SearchConfig, Failure> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<SearchConfig>(&text)
                .map_err(|e| Failure::Input(format!("bad run config {}: {e}", p.display())))?
        }
        None => {
            let (Some(k), Some(nc)) = (k, nc) else {
                return Err(Failure::Input(
                    "search needs --k and --nc, or --config".into(),
                ));
            };
            SearchConfig {
                k,
                nc,
                window: None,
                objective: Objective::Avg,
                seeds: seeds_or_default(&[]),
                cap: DEFAULT_CAP,
            }
        }
    };
    if let Some(k) = k {
        cfg.k = k;
    }
    if let Some(nc) = nc {
        cfg.nc = nc;
    }
    if window.is_some() {
        cfg.window = window;
    }
    if let Some(o) = objective {
        cfg.objective = match o {
            ObjectiveArg::Avg => Objective::Avg,
            ObjectiveArg::Dl => Objective::Dl,
            ObjectiveArg::Ul => Objective::Ul,
        };
    }
    if !seeds.is_empty() {
        cfg.seeds = seeds.to_vec();
    }
    if let Some(c) = cap {
        cfg.cap = c;
    }
    if cfg.seeds.is_empty() {
        return Err(Failure::Input("at least one seed is required".into()));
    }
    Ok(cfg)
}

fn cmd_search(cfg: &SearchConfig, format: TableFormat) -> CmdResult {
    let csv = matches!(format, TableFormat::Csv);
    let mut last = 0u128;
    let result = exhaustive_search_with_progress(cfg, csv, |done, total| {
        if total >= 100_000 && done * 10 / total > last {
            last = done * 10 / total;
            eprintln!("searched {done}/{total}");
        }
    })?;
    if !result.soundness.violations.is_empty() {
        eprintln!(
            "note: {} candidate(s) exceed a block certificate; see soundness.violations",
            result.soundness.violations.len()
        );
    }
    if csv {
        Ok(rows_to_csv(&result.rows))
    } else {
        to_json(&result)
    }
}

fn cmd_bound(path: &Path, kind: BoundArg, nc: Option<usize>) -> CmdResult {
    let input = read_input(path)?;
    let assoc = input.assoc();
    let nc = nc.unwrap_or(assoc.nc);
    let cert = match kind {
        BoundArg::Lemma2 => lemma2_chain_bound(assoc),
        BoundArg::Counting => counting_bound(assoc, nc)?,
        BoundArg::Reconstruction => reconstruction_bound(assoc, nc)?,
        BoundArg::Ncone => nc_one_bound(assoc.k),
    };
    to_json(&cert)
}

fn cmd_render(path: &Path, format: DiagramFormat) -> CmdResult {
    let input = read_input(path)?;
    let overlay = match &input {
        Input::Assoc(_) => render::Overlay::default(),
        Input::Plan(p) => render::Overlay {
            inactive_mt: (1..=p.assoc.k)
                .filter(|i| !p.dl_active_users.contains(i))
                .collect(),
            silent_bs: p.dl_silent_bs.clone(),
        },
    };
    Ok(match format {
        DiagramFormat::Ascii => render::ascii(input.assoc(), &overlay),
        DiagramFormat::Svg => render::svg(input.assoc(), &overlay),
    })
}

fn cmd_report(ncs: &[usize], format: ReportFormat) -> CmdResult {
    let rows = ncs
        .iter()
        .map(|&nc| compare_with_theorem(nc, None))
        .collect::<Result<Vec<_>, _>>()?;
    match format {
        ReportFormat::Json => to_json(&rows),
        ReportFormat::Table => {
            let mut out = format!(
                "{:>3}  {:>7}  {:>7}  {:>13}  {}\n",
                "nc", "tau", "tau_D", "tau_D(nc-1)", "relation"
            );
            for r in &rows {
                let reduced = r
                    .tau_d_reduced
                    .map(|x| x.to_string())
                    .unwrap_or_else(|| "-".into());
                let rel = match r.relation_holds {
                    Some(true) => "holds",
                    Some(false) => "FAILS",
                    None => "-",
                };
                out.push_str(&format!(
                    "{:>3}  {:>7}  {:>7}  {:>13}  {}\n",
                    r.nc,
                    r.tau.to_string(),
                    r.tau_d.to_string(),
                    reduced,
                    rel
                ));
            }
            Ok(out)
        }
    }
}
