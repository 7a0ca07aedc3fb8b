use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use alphaforge_core::alphashape::{self, pretty_actions, SMOOTH_ACTIONS};
use alphaforge_core::loss::LossWeights;
use alphaforge_core::mesh::{boundary_edges, euler_characteristic};
use alphaforge_core::metrics::{evaluate as evaluate_pair, evaluate_classes, Protocol};
use alphaforge_core::policy::{
    state_descriptor, train_policy as train, MeshEnvironment, QPolicy, Standardization, StateDescriptor, TrainSchedule,
};
use alphaforge_core::refine::{build_baseline_with_source, refine_mesh, write_trace_csv};
use alphaforge_core::sampling::sample_surface;
use alphaforge_core::synth::{synth as generate, SyntheticSpec};
use alphaforge_core::{Mesh, PointCloud};
use clap::Args;
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{RunConfig, SeedOffset};
use crate::io;
use crate::Failure;

fn path(p: &Option<PathBuf>) -> Option<&Path> {
    p.as_deref()
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// "smooth", "pretty" or a comma-separated list of positive thresholds.
fn parse_actions(s: &str) -> Result<Vec<f64>, Failure> {
    match s {
        "smooth" => Ok(SMOOTH_ACTIONS.to_vec()),
        "pretty" => Ok(pretty_actions()),
        list => list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| *x > 0.0 && x.is_finite())
                    .ok_or_else(|| usage(format!("'{t}' is not a positive threshold")))
            })
            .collect(),
    }
}

fn load_policy(p: &Path) -> Result<QPolicy, Failure> {
    let text = io::read_text(Some(p))?;
    QPolicy::from_json(&text).map_err(|e| usage(format!("policy {}: {e}", p.display())))
}

/// The threshold from `--policy`, else `--tau`, else the configuration.
fn choose_tau(cloud: &PointCloud, tau: Option<f64>, policy: &Option<PathBuf>, cfg: &RunConfig) -> Result<f64, Failure> {
    if let Some(t) = tau {
        return Ok(t);
    }
    match policy.as_ref().or(cfg.policy.as_ref()) {
        Some(p) => {
            let policy = load_policy(p)?;
            let s = state_descriptor(cloud)?;
            Ok(policy.actions()[policy.greedy_action(&s)])
        }
        None => Ok(cfg.tau),
    }
}

fn describe(mesh: &Mesh) -> String {
    format!(
        "vertices={} faces={} euler={} boundary_edges={}",
        mesh.vertices().len(),
        mesh.faces().len(),
        euler_characteristic(mesh),
        boundary_edges(mesh).len()
    )
}

#[derive(Debug, Args)]
pub struct TriangulateArgs {
    /// Input cloud; standard input when absent or "-"
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Input format, xyz or ply [default: from the extension, else xyz]
    #[arg(long)]
    in_format: Option<String>,
    /// Filtering threshold [default: the config's tau, 0.5]
    #[arg(long, conflicts_with = "policy")]
    tau: Option<f64>,
    /// Policy JSON that picks the threshold from the cloud
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Output mesh; standard output when absent or "-"
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Output format, obj, off or ply [default: from the extension, else obj]
    #[arg(long)]
    format: Option<String>,
}

pub fn triangulate(a: TriangulateArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let cloud = io::read_cloud(path(&a.input), a.in_format.as_deref())?;
    let tau = choose_tau(&cloud, a.tau, &a.policy, cfg)?;
    let mesh = alphashape::triangulate(&cloud, tau)?;
    eprintln!("tau={tau} {}", describe(&mesh));
    io::write_mesh(&mesh, path(&a.out), a.format.as_deref())
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Input cloud; standard input when absent or "-"
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Input format, xyz or ply [default: from the extension, else xyz]
    #[arg(long)]
    in_format: Option<String>,
    /// Filtering threshold [default: the config's tau, 0.5]
    #[arg(long, conflicts_with = "policy")]
    tau: Option<f64>,
    /// Policy JSON that picks the threshold from the cloud
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Loss weight preset, smooth or pretty [default: the config's refine.weights]
    #[arg(long)]
    weights: Option<String>,
    /// Refinement stages [default: 2]
    #[arg(long)]
    stages: Option<usize>,
    /// Gradient steps per stage [default: 100]
    #[arg(long)]
    iters: Option<usize>,
    /// Gradient step size [default: 1e-5]
    #[arg(long)]
    step: Option<f64>,
    /// Subdivide mesh and baseline between stages
    #[arg(long)]
    subdivide: bool,
    /// Write the per-iteration loss trace as CSV here
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output mesh; standard output when absent or "-"
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Output format, obj, off or ply [default: from the extension, else obj]
    #[arg(long)]
    format: Option<String>,
}

pub fn reconstruct(a: ReconstructArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let cloud = io::read_cloud(path(&a.input), a.in_format.as_deref())?;
    let tau = choose_tau(&cloud, a.tau, &a.policy, cfg)?;
    let mut rc = cfg.refine;
    if let Some(name) = &a.weights {
        rc.weights = LossWeights::by_name(name).ok_or_else(|| usage(format!("unknown weight preset '{name}'")))?;
    }
    if let Some(s) = a.stages {
        rc.stages = s;
    }
    if let Some(i) = a.iters {
        rc.iters_per_stage = i;
    }
    if let Some(s) = a.step {
        rc.step_size = s;
    }
    rc.subdivide_between_stages |= a.subdivide;
    if rc.weights.lambda6 > 0.0 && cloud.normals().is_none() {
        eprintln!("note: the cloud has no normals, so the normal loss is disabled");
        rc.weights.lambda6 = 0.0;
    }
    rc.validate()?;
    cfg.taubin.validate()?;
    let baseline = build_baseline_with_source(&cloud, tau, &cfg.taubin)?;
    let initial = baseline.coarse_mesh(&cloud)?;
    eprintln!("tau={tau} baseline {}", describe(&baseline.mesh));
    let outcome = refine_mesh(&initial, &cloud, &baseline.mesh, &rc, cfg.seed_for(SeedOffset::REFINE))?;
    if let Some(t) = &a.trace {
        let mut buf = Vec::new();
        write_trace_csv(&outcome.trace, &mut buf).expect("writing to memory");
        io::write_text(Some(t), &String::from_utf8(buf).expect("CSV is ASCII"))?;
    }
    eprintln!("refined {}", describe(&outcome.mesh));
    io::write_mesh(&outcome.mesh, path(&a.out), a.format.as_deref())
}

#[derive(Debug, Args)]
pub struct TrainPolicyArgs {
    /// Directory of <class>_<id>.xyz clouds with <class>_<id>.obj/.off/.ply references
    #[arg(long)]
    dataset: PathBuf,
    /// Output policy JSON; standard output when absent or "-"
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write the per-episode training log as CSV here
    #[arg(long)]
    log: Option<PathBuf>,
    /// Number of episodes [default: 2000]
    #[arg(long)]
    episodes: Option<usize>,
    /// Episodes before epsilon starts decaying [default: 1000]
    #[arg(long)]
    warmup: Option<usize>,
    /// Candidate thresholds: smooth, pretty or a comma-separated list [default: smooth]
    #[arg(long)]
    actions: Option<String>,
    /// F1 radius of the reward [default: 1e-4]
    #[arg(long)]
    nu: Option<f64>,
    /// Surface samples per mesh in the reward [default: 3000]
    #[arg(long)]
    samples: Option<usize>,
    /// RMSProp step size [default: 1e-3]
    #[arg(long)]
    learning_rate: Option<f64>,
}

pub fn train_policy(a: TrainPolicyArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let mut tc = cfg.train.clone();
    if let Some(s) = &a.actions {
        tc.actions = parse_actions(s)?;
    }
    tc.episodes = a.episodes.unwrap_or(tc.episodes);
    tc.warmup = a.warmup.unwrap_or(tc.warmup);
    tc.nu = a.nu.unwrap_or(tc.nu);
    tc.samples = a.samples.unwrap_or(tc.samples);
    tc.learning_rate = a.learning_rate.unwrap_or(tc.learning_rate);
    if !(tc.learning_rate > 0.0 && tc.learning_rate.is_finite()) {
        return Err(usage(format!(
            "learning rate must be positive, got {}",
            tc.learning_rate
        )));
    }
    if !(0.0..=1.0).contains(&tc.epsilon) || tc.period == 0 || tc.samples == 0 {
        return Err(usage("train needs epsilon in [0, 1], period >= 1 and samples >= 1"));
    }
    let data = io::read_dataset(&a.dataset)?;
    let pairs: Vec<(PointCloud, Mesh)> = data.into_iter().map(|i| (i.cloud, i.reference)).collect();
    let env = MeshEnvironment::new(&pairs, &tc.actions, tc.nu, tc.samples, cfg.seed_for(SeedOffset::REWARD))?;
    let mut policy = QPolicy::new(tc.actions.clone())?;
    policy.epsilon = tc.epsilon;
    policy.epsilon_decay = tc.epsilon_decay;
    policy.period = tc.period;
    policy.optimizer.learning_rate = tc.learning_rate;
    if tc.standardize {
        let states: Vec<StateDescriptor> = (0..pairs.len())
            .map(|i| *alphaforge_core::policy::Environment::state(&env, i))
            .collect();
        policy.set_standardization(Some(Standardization::fit(&states)?))?;
    }
    let schedule = TrainSchedule {
        episodes: tc.episodes,
        warmup: tc.warmup,
        seed: cfg.seed_for(SeedOffset::TRAIN),
    };
    let (policy, log) = train(&env, policy, &schedule)?;
    let tail = &log.records[log.records.len().saturating_sub(100)..];
    if !tail.is_empty() {
        let mean = tail.iter().map(|r| r.reward).sum::<f64>() / tail.len() as f64;
        eprintln!(
            "episodes={} final_epsilon={} mean_reward_last_{}={mean}",
            log.records.len(),
            policy.epsilon,
            tail.len()
        );
    }
    if let Some(p) = &a.log {
        let mut buf = Vec::new();
        log.write_csv(&mut buf).expect("writing to memory");
        io::write_text(Some(p), &String::from_utf8(buf).expect("CSV is ASCII"))?;
    }
    io::write_text(path(&a.out), &(policy.to_json() + "\n"))
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted mesh
    #[arg(long, requires = "gt", conflicts_with = "manifest")]
    pred: Option<PathBuf>,
    /// Reference mesh
    #[arg(long, requires = "pred")]
    gt: Option<PathBuf>,
    /// JSON list of {"class", "pred", "gt"} entries, paths relative to the manifest
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// pixel2mesh, meshrcnn, tmnet or skeleton [default: meshrcnn]
    #[arg(long)]
    protocol: Option<String>,
    /// Surface samples per mesh [default: 10000]
    #[arg(long)]
    samples: Option<usize>,
    /// Output report; standard output when absent or "-"
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    class: String,
    pred: PathBuf,
    gt: PathBuf,
}

pub fn evaluate(a: EvaluateArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let protocol: Protocol = a.protocol.as_deref().unwrap_or(&cfg.evaluation.protocol).parse()?;
    let n = a.samples.unwrap_or(cfg.evaluation.samples);
    if n == 0 {
        return Err(usage("samples must be at least 1"));
    }
    let seed = cfg.seed_for(SeedOffset::EVALUATE);
    let report = match (&a.pred, &a.gt, &a.manifest) {
        (Some(p), Some(g), None) => evaluate_pair(
            &io::read_mesh(Some(p), None)?,
            &io::read_mesh(Some(g), None)?,
            protocol,
            n,
            seed,
        )?,
        (None, None, Some(m)) => {
            let entries: Vec<ManifestEntry> = serde_json::from_str(&io::read_text(Some(m))?)
                .map_err(|e| usage(format!("manifest {}: {e}", m.display())))?;
            let base = m.parent().unwrap_or(Path::new("."));
            let items = entries
                .par_iter()
                .map(|e| {
                    Ok((
                        e.class.clone(),
                        io::read_mesh(Some(&base.join(&e.pred)), None)?,
                        io::read_mesh(Some(&base.join(&e.gt)), None)?,
                    ))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            evaluate_classes(&items, protocol, n, seed)?
        }
        _ => return Err(usage("evaluate needs --pred and --gt, or --manifest")),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    io::write_text(path(&a.out), &(json + "\n"))
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Input mesh; standard input when absent or "-"
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Input format, obj, off or ply [default: from the extension, else obj]
    #[arg(long)]
    in_format: Option<String>,
    /// Number of samples [default: the config's samples, 3000]
    #[arg(long)]
    n: Option<usize>,
    /// Output cloud; standard output when absent or "-"
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Output format, xyz or ply [default: from the extension, else xyz]
    #[arg(long)]
    format: Option<String>,
}

pub fn sample(a: SampleArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let mesh = io::read_mesh(path(&a.input), a.in_format.as_deref())?;
    let cloud = sample_surface(&mesh, a.n.unwrap_or(cfg.samples), cfg.seed_for(SeedOffset::SAMPLE))?;
    io::write_cloud(&cloud, path(&a.out), a.format.as_deref())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// sphere, torus, box or stacked (two stacked holes, genus 2) [default: sphere]
    #[arg(long)]
    shape: Option<String>,
    /// Number of points [default: 2000]
    #[arg(long)]
    n: Option<usize>,
    /// Standard deviation of Gaussian noise along the normals [default: 0]
    #[arg(long)]
    sigma: Option<f64>,
    /// Sphere radius or half box edge [default: 1]
    #[arg(long)]
    radius: Option<f64>,
    /// Torus major radius [default: 1]
    #[arg(long)]
    major: Option<f64>,
    /// Torus minor radius [default: 0.4]
    #[arg(long)]
    minor: Option<f64>,
    /// Output cloud; standard output when absent or "-"
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Output format, xyz or ply [default: from the extension, else xyz]
    #[arg(long)]
    format: Option<String>,
    /// Also write the reference mesh here, format from the extension
    #[arg(long)]
    reference: Option<PathBuf>,
}

pub fn synth(a: SynthArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let c = cfg.synth;
    let spec = SyntheticSpec {
        shape: match &a.shape {
            Some(s) => s.parse()?,
            None => c.shape,
        },
        n: a.n.unwrap_or(c.n),
        sigma: a.sigma.unwrap_or(c.sigma),
        seed: cfg.seed_for(SeedOffset::SYNTH),
        radius: a.radius.unwrap_or(c.radius),
        major: a.major.unwrap_or(c.major),
        minor: a.minor.unwrap_or(c.minor),
    };
    let s = generate(&spec)?;
    if let Some(r) = &a.reference {
        io::write_mesh(&s.reference, Some(r), None)?;
    }
    io::write_cloud(&s.cloud, path(&a.out), a.format.as_deref())
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Directory of <class>_<id>.xyz clouds with <class>_<id>.obj/.off/.ply references
    #[arg(long)]
    dataset: PathBuf,
    /// Fixed thresholds: smooth, pretty or a comma-separated list
    /// [default: the policy's actions, else smooth]
    #[arg(long)]
    taus: Option<String>,
    /// Policy JSON compared against the fixed thresholds
    #[arg(long)]
    policy: Option<PathBuf>,
    /// F1 radius [default: the config's train.nu, 1e-4]
    #[arg(long)]
    nu: Option<f64>,
    /// Surface samples per mesh [default: 3000]
    #[arg(long)]
    samples: Option<usize>,
    /// Output CSV; standard output when absent or "-"
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Writes one row per fixed threshold plus a "policy" row; columns are the
/// dataset's classes and their mean; cells are mean F1 (percent) at `nu`.
pub fn ablate(a: AblateArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let policy = match a.policy.as_ref().or(cfg.policy.as_ref()) {
        Some(p) => Some(load_policy(p)?),
        None => None,
    };
    let taus = match (&a.taus, cfg.ablate_taus.is_empty(), &policy) {
        (Some(s), _, _) => parse_actions(s)?,
        (None, false, _) => cfg.ablate_taus.clone(),
        (None, true, Some(p)) => p.actions().to_vec(),
        (None, true, None) => SMOOTH_ACTIONS.to_vec(),
    };
    let mut actions = taus.clone();
    if let Some(p) = &policy {
        for t in p.actions() {
            if !actions.contains(t) {
                actions.push(*t);
            }
        }
    }
    let nu = a.nu.unwrap_or(cfg.train.nu);
    let samples = a.samples.unwrap_or(cfg.train.samples);
    let data = io::read_dataset(&a.dataset)?;
    let pairs: Vec<(PointCloud, Mesh)> = data.iter().map(|i| (i.cloud.clone(), i.reference.clone())).collect();
    let env = MeshEnvironment::new(&pairs, &actions, nu, samples, cfg.seed_for(SeedOffset::REWARD))?;
    let chosen: Vec<Option<usize>> = (0..data.len())
        .map(|i| {
            policy.as_ref().map(|p| {
                let s = alphaforge_core::policy::Environment::state(&env, i);
                let t = p.actions()[p.greedy_action(s)];
                actions.iter().position(|x| *x == t).expect("policy actions were added")
            })
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let mut r = (0..taus.len())
                .map(|a| env.reward_of(i, a))
                .collect::<alphaforge_core::Result<Vec<_>>>()?;
            if let Some(a) = chosen[i] {
                r.push(env.reward_of(i, a)?);
            }
            Ok(r)
        })
        .collect::<Result<_, Failure>>()?;
    let classes: Vec<String> = data
        .iter()
        .map(|i| i.class.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut labels: Vec<String> = taus.iter().map(|t| t.to_string()).collect();
    if policy.is_some() {
        labels.push("policy".into());
    }
    let mut csv = String::from("method");
    for c in &classes {
        write!(csv, ",{c}").unwrap();
    }
    csv.push_str(",mean\n");
    for (k, label) in labels.iter().enumerate() {
        let mut per_class: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        for (inst, r) in data.iter().zip(&rows) {
            let e = per_class.entry(&inst.class).or_insert((0.0, 0));
            e.0 += r[k] * 100.0;
            e.1 += 1;
        }
        csv.push_str(label);
        for c in &classes {
            let (s, n) = per_class[c.as_str()];
            write!(csv, ",{:.4}", s / n as f64).unwrap();
        }
        let total = rows.iter().map(|r| r[k] * 100.0).sum::<f64>() / rows.len() as f64;
        writeln!(csv, ",{total:.4}").unwrap();
    }
    io::write_text(path(&a.out), &csv)
}
