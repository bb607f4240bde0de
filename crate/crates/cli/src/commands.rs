use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde_json::json;

use lmdp_lab::budget::DEFAULT_BUDGET;
use lmdp_lab::divergence;
use lmdp_lab::doc::{load_model, save_model};
use lmdp_lab::evaluate::{self, value};
use lmdp_lab::generators::{
    comb_lock, comb_lock_decodable, make_family, random_separated_lmdp, sat_to_lmdp,
    sat_to_separated_lmdp, LockSpec, RandomSeparatedConfig, SatFormula,
};
use lmdp_lab::learner::{
    beta_for_finite_class, omle_run, planner_candidates, ModelClass, OmleConfig, SimEnvironment,
};
use lmdp_lab::oracle::{brute_force_optimal, brute_force_optimal_value};
use lmdp_lab::planner::{choose_window, plan as plan_op};
use lmdp_lab::separation::{certified_varpi, is_n_step_decodable, min_pairwise_tv};
use lmdp_lab::{Budget, Dist, Error, Policy, Result};

/// Budget resolution: explicit flag, else `LMDP_LAB_BUDGET`, else default.
pub fn resolve_budget(flag: Option<u64>) -> Budget {
    if let Some(b) = flag {
        return Budget::new(b);
    }
    if let Ok(s) = std::env::var("LMDP_LAB_BUDGET") {
        if let Ok(b) = s.parse::<u64>() {
            return Budget::new(b);
        }
    }
    Budget::new(DEFAULT_BUDGET)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("json"))
        .map_err(|e| Error::InvalidModel(format!("write {}: {e}", path.display())))
}

fn out_dir(out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::InvalidModel(format!("create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn parse_dist(spec: &str) -> Result<Dist> {
    let weights: Vec<f64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Precondition(format!("bad weight {s:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    Dist::new(weights)
}

// ── gen-hard ────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct GenHardArgs {
    #[command(subcommand)]
    pub kind: GenHardKind,
}

#[derive(Subcommand)]
pub enum GenHardKind {
    /// Combination lock `M_θ` (or the reference model).
    CombLock {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        a: usize,
        #[arg(long)]
        horizon: Option<usize>,
        /// Secret action string as digits, e.g. `01`; omit for the
        /// reference model.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// N-step decodable combination lock.
    CombLockDecodable {
        #[arg(long)]
        n: usize,
        #[arg(long = "decode-steps")]
        decode_steps: usize,
        #[arg(long, default_value_t = 2)]
        a: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moment-matched `(2^r, H, δ, γ, N^r)`-family (written as JSON).
    Family {
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Combination lock augmented with a freshly built family.
    AugmentedLock {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        a: usize,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// 3SAT embedding (separated when `--delta` is given).
    Sat {
        /// Formula as clauses of signed literals: `1,-2,3;2,3`.
        #[arg(long)]
        formula: String,
        #[arg(long)]
        vars: usize,
        #[arg(long, default_value_t = 1)]
        width: usize,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random δ-strongly separated instance.
    RandomSeparated {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        components: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_theta(theta: &Option<String>, n_actions: usize) -> Result<LockSpec> {
    match theta {
        None => Ok(LockSpec::Reference),
        Some(s) => {
            let digits: Vec<usize> = s
                .chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .filter(|&d| d < n_actions)
                        .ok_or_else(|| {
                            Error::Precondition(format!("bad secret digit {c:?} for A = {n_actions}"))
                        })
                })
                .collect::<Result<_>>()?;
            Ok(LockSpec::Secret(digits))
        }
    }
}

fn parse_formula(formula: &str, vars: usize) -> Result<SatFormula> {
    let clauses: Vec<Vec<i32>> = formula
        .split(';')
        .map(|clause| {
            clause
                .split(',')
                .map(|lit| {
                    lit.trim()
                        .parse::<i32>()
                        .map_err(|e| Error::Precondition(format!("bad literal {lit:?}: {e}")))
                })
                .collect::<Result<Vec<i32>>>()
        })
        .collect::<Result<_>>()?;
    SatFormula::new(vars, clauses)
}

pub fn gen_hard(args: GenHardArgs) -> Result<()> {
    match args.kind {
        GenHardKind::CombLock {
            n,
            a,
            horizon,
            theta,
            out,
        } => {
            let h = horizon.unwrap_or(n + 1);
            let spec = parse_theta(&theta, a)?;
            let model = comb_lock(n, a, h, spec)?;
            let dir = out_dir(&out)?;
            let path = dir.join("model.json");
            save_model(
                &model,
                json!({"generator": "comb-lock", "n": n, "theta": theta}),
                &path,
            )?;
            println!("wrote {}", path.display());
        }
        GenHardKind::CombLockDecodable {
            n,
            decode_steps,
            a,
            out,
        } => {
            let model = comb_lock_decodable(decode_steps, n, a)?;
            let dir = out_dir(&out)?;
            let path = dir.join("model.json");
            save_model(
                &model,
                json!({"generator": "comb-lock-decodable", "n": n, "decode_steps": decode_steps}),
                &path,
            )?;
            println!("wrote {}", path.display());
        }
        GenHardKind::Family {
            r,
            d,
            horizon,
            delta,
            budget,
            out,
        } => {
            let family = make_family(r, d, horizon, delta, resolve_budget(budget))?;
            let dir = out_dir(&out)?;
            let path = dir.join("family.json");
            let doc = serde_json::to_value(&family).expect("family serializes");
            write_json(&path, &doc)?;
            println!("wrote {}", path.display());
        }
        GenHardKind::AugmentedLock {
            n,
            a,
            horizon,
            theta,
            d,
            delta,
            budget,
            out,
        } => {
            let h = horizon.unwrap_or(n + 1);
            let spec = parse_theta(&theta, a)?;
            let lock = comb_lock(n, a, h, spec)?;
            // The lock has L = n components; lift a 2-family to 2^r ≥ n and
            // keep the first n mixings. r = ⌈log2 n⌉.
            let r = (n as f64).log2().ceil() as usize;
            let family = make_family(r.max(1), d, h, delta, resolve_budget(budget))?;
            let trimmed = lmdp_lab::generators::Family {
                mixings: family.mixings[..n].to_vec(),
                ..family
            };
            let model = lmdp_lab::generators::augment_lmdp(&lock, &trimmed)?;
            let dir = out_dir(&out)?;
            let path = dir.join("model.json");
            save_model(
                &model,
                json!({"generator": "augmented-lock", "n": n, "delta": delta, "d": d}),
                &path,
            )?;
            println!("wrote {}", path.display());
        }
        GenHardKind::Sat {
            formula,
            vars,
            width,
            delta,
            out,
        } => {
            let phi = parse_formula(&formula, vars)?;
            let model = match delta {
                Some(delta) => sat_to_separated_lmdp(&phi, width, delta)?,
                None => sat_to_lmdp(&phi, width)?,
            };
            let dir = out_dir(&out)?;
            let path = dir.join("model.json");
            save_model(
                &model,
                json!({"generator": "sat", "vars": vars, "formula": formula, "delta": delta}),
                &path,
            )?;
            println!("wrote {}", path.display());
        }
        GenHardKind::RandomSeparated {
            states,
            actions,
            horizon,
            components,
            delta,
            seed,
            out,
        } => {
            let cfg = RandomSeparatedConfig {
                n_states: states,
                n_actions: actions,
                horizon,
                n_components: components,
                delta,
            };
            let model = random_separated_lmdp(&cfg, seed)?;
            let dir = out_dir(&out)?;
            let path = dir.join("model.json");
            save_model(
                &model,
                json!({"generator": "random-separated", "delta": delta, "seed": seed}),
                &path,
            )?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

// ── oracle ──────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Also write the optimal history policy.
    #[arg(long)]
    pub policy: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn oracle(args: OracleArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let budget = resolve_budget(args.budget);
    let dir = out_dir(&args.out)?;
    let value = if args.policy {
        let (v, policy) = brute_force_optimal(&model, budget)?;
        write_json(
            &dir.join("oracle_policy.json"),
            &serde_json::to_value(&policy).expect("policy serializes"),
        )?;
        v
    } else {
        brute_force_optimal_value(&model, budget)?
    };
    let path = dir.join("oracle.json");
    write_json(&path, &json!({ "optimal_value": value }))?;
    println!("optimal value {value:.12}");
    Ok(())
}

// ── plan ────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Target suboptimality; picks the window via the certified profile.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Explicit window (overrides --epsilon).
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn plan(args: PlanArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let budget = resolve_budget(args.budget);
    let window = match (args.window, args.epsilon) {
        (Some(w), _) => w,
        (None, Some(eps)) => choose_window(&model, eps)?.ok_or_else(|| {
            Error::Precondition(format!(
                "no certified window ≤ H = {} for epsilon {eps}",
                model.horizon()
            ))
        })?,
        (None, None) => {
            return Err(Error::Precondition(
                "pass --window or --epsilon".into(),
            ))
        }
    };
    let planned = plan_op(&model, window, budget)?;
    let realized = value(&model, &planned.to_policy(), budget)?;
    let dir = out_dir(&args.out)?;
    write_json(
        &dir.join("policy.json"),
        &serde_json::to_value(&planned).expect("planner policy serializes"),
    )?;
    // Value certificate CSV: one row per start state plus the aggregate.
    let mut w = csv::Writer::from_path(dir.join("certificates.csv"))
        .map_err(|e| Error::InvalidModel(format!("certificates.csv: {e}")))?;
    w.write_record(["quantity", "state", "value"]).ok();
    for (s, v) in planned.head_values[0].iter().enumerate() {
        w.write_record(["v_hat_tau1", &s.to_string(), &format!("{v:.17e}")])
            .ok();
    }
    w.write_record(["value_estimate", "", &format!("{:.17e}", planned.value_estimate)])
        .ok();
    w.write_record(["realized_value", "", &format!("{realized:.17e}")])
        .ok();
    w.flush().ok();
    println!(
        "window {window}: certified {:.6}, realized {realized:.6}",
        planned.value_estimate
    );
    Ok(())
}

// ── simulate ────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let policy = Policy::Uniform;
    let dir = out_dir(&args.out)?;
    let path = dir.join("episodes.jsonl");
    let mut lines = String::new();
    for episode in 0..args.episodes {
        let traj = evaluate::simulate(&model, &policy, args.seed.wrapping_add(episode as u64));
        lines.push_str(&serde_json::to_string(&traj).expect("trajectory serializes"));
        lines.push('\n');
    }
    std::fs::write(&path, lines)
        .map_err(|e| Error::InvalidModel(format!("write {}: {e}", path.display())))?;
    println!("wrote {} ({} episodes)", path.display(), args.episodes);
    Ok(())
}

// ── learn ───────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct LearnArgs {
    /// Model-document paths forming the finite class Θ.
    #[arg(long, num_args = 1.., required = true)]
    pub class: Vec<PathBuf>,
    /// Index of the ground-truth member the environment simulates.
    #[arg(long, default_value_t = 0)]
    pub truth: usize,
    #[arg(long)]
    pub window: usize,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    /// Confidence radius; default is the finite-class β at p = 0.01.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "eps-s", default_value_t = 1.0)]
    pub eps_s: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planner windows used to build the candidate set.
    #[arg(long, num_args = 1.., default_values_t = [1usize, 2])]
    pub candidate_windows: Vec<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn learn(args: LearnArgs) -> Result<()> {
    let models = args
        .class
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<Vec<_>>>()?;
    if args.truth >= models.len() {
        return Err(Error::Precondition(format!(
            "truth index {} outside the class of {} models",
            args.truth,
            models.len()
        )));
    }
    let class = ModelClass::new(models.clone())?;
    let budget = resolve_budget(args.budget);
    let cfg = OmleConfig {
        beta: args.beta.unwrap_or_else(|| beta_for_finite_class(models.len(), 0.01)),
        eps_s: args.eps_s,
        window: args.window,
        episodes: args.episodes,
        seed: args.seed,
        budget,
    };
    let mut env = SimEnvironment::new(models[args.truth].clone(), args.seed ^ 0x5eed);
    let windows = args.candidate_windows.clone();
    let outcome = omle_run(&class, &mut env, &cfg, &Policy::Uniform, |m| {
        planner_candidates(m, &windows, budget)
    })?;
    let dir = out_dir(&args.out)?;
    std::fs::write(dir.join("trace.jsonl"), outcome.trace.to_jsonl())
        .map_err(|e| Error::InvalidModel(format!("trace.jsonl: {e}")))?;
    write_json(
        &dir.join("policy.json"),
        &serde_json::to_value(&outcome.policy).expect("policy serializes"),
    )?;
    let realized = value(&models[args.truth], &outcome.policy, budget)?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "episodes": args.episodes,
            "beta": cfg.beta,
            "realized_value_on_truth": realized,
        }),
    )?;
    println!("realized value on the truth model: {realized:.6}");
    Ok(())
}

// ── check-separation ────────────────────────────────────────────────────

#[derive(Args)]
pub struct CheckSeparationArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub hmax: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn check_separation(args: CheckSeparationArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let hmax = args.hmax.min(model.horizon());
    let profile = certified_varpi(&model, hmax)?;
    let (min_tv, witness) = min_pairwise_tv(&model)?;
    let dir = out_dir(&args.out)?;
    let mut w = csv::Writer::from_path(dir.join("varpi.csv"))
        .map_err(|e| Error::InvalidModel(format!("varpi.csv: {e}")))?;
    w.write_record(["h", "varpi"]).ok();
    for h in 1..=hmax {
        w.write_record([h.to_string(), format!("{:.17e}", profile.varpi(h))])
            .ok();
    }
    w.flush().ok();
    let decodable_at = (1..=model.horizon()).find(|&n| is_n_step_decodable(&model, n));
    write_json(
        &dir.join("separation.json"),
        &json!({
            "min_pairwise_tv": min_tv,
            "witness": witness,
            "decodable_at": decodable_at,
            "profile_nondecreasing": profile.is_nondecreasing(),
        }),
    )?;
    println!(
        "min pairwise TV {min_tv:.6}; ϖ({hmax}) = {:.6}",
        profile.varpi(hmax)
    );
    Ok(())
}

// ── divergence ──────────────────────────────────────────────────────────

#[derive(Args)]
pub struct DivergenceArgs {
    /// First distribution, comma-separated weights.
    #[arg(long)]
    pub p: String,
    /// Second distribution, comma-separated weights.
    #[arg(long)]
    pub q: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn divergence(args: DivergenceArgs) -> Result<()> {
    let p = parse_dist(&args.p)?;
    let q = parse_dist(&args.q)?;
    let tv = divergence::tv(&p, &q)?;
    let h2 = divergence::hellinger_sq(&p, &q)?;
    let db = divergence::bhattacharyya(&p, &q)?;
    let result = json!({
        "tv": tv,
        "hellinger_sq": h2,
        "bhattacharyya": if db.is_finite() { json!(db) } else { json!("inf") },
    });
    if args.out.is_some() {
        let dir = out_dir(&args.out)?;
        write_json(&dir.join("divergence.json"), &result)?;
    }
    println!("{result}");
    Ok(())
}
