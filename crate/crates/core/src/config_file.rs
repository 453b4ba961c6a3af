//! Flat `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment. Every key is optional and
//! falls back to [`SimConfig::default`]. Unknown or repeated keys are errors,
//! as are keys that do not apply to the selected policy or demand kind.
//!
//! | key | value |
//! |-----|-------|
//! | `n_agents` | positive integer |
//! | `beta0`, `beta1`, `spread` | fractions in (0, 1) |
//! | `tau_stake`, `tau_lend` | positive integers (blocks) |
//! | `p_slash` | probability |
//! | `slash_fraction` | fraction in (0, 1] |
//! | `lambda_stake`, `lambda_lend` | positive rates |
//! | `initial_lend_rate` | fraction in [0, 1] |
//! | `rate_period_blocks` | positive integer |
//! | `horizon` | blocks, a multiple of `tau_stake` |
//! | `seed` | unsigned 64-bit integer |
//! | `security_floor` | fraction in [0, 1) |
//! | `record_epochs` | `true` / `false` |
//! | `model` | `two-state` / `three-state` |
//! | `policy` | `constant` / `half-life` / `polynomial` / `exponential` / `epoch-ratio` |
//! | `r0`, `s0` | initial reward and supply |
//! | `half_life` | blocks (`half-life`) |
//! | `degree` | positive integer (`polynomial`) |
//! | `growth` | per-block rate (`exponential`) |
//! | `inflation_ratio` | per-epoch reward ratio (`epoch-ratio`) |
//! | `demand` | `constant-k` / `random-walk` / `reflected-gbm` |
//! | `demand_k` | ratio (`constant-k`) |
//! | `demand_drift`, `demand_vol`, `eta0`, `eta1` | walk and GBM parameters |
//! | `beta0_grid`, `beta1_grid` | comma-separated ascending values |
//! | `inflation_grid` | comma-separated per-epoch reward ratios |
//! | `borrow_threshold_grid` | comma-separated values of `1 - eta0` |
//! | `seeds` | comma-separated list or half-open range `a..b` |

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::config::{ModelKind, SimConfig};
use crate::error::{Error, Result};
use crate::lending::DemandModel;
use crate::policy::MonetaryPolicy;

/// Sweep axes; `None` means the key was absent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepAxes {
    pub beta0_grid: Option<Vec<f64>>,
    pub beta1_grid: Option<Vec<f64>>,
    pub inflation_grid: Option<Vec<f64>>,
    pub borrow_threshold_grid: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFile {
    pub sim: SimConfig<f64>,
    /// Set when the policy was given as `epoch-ratio`.
    pub inflation_ratio: Option<f64>,
    pub sweep: SweepAxes,
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| Error::Parse {
                line: e.line,
                message: format!("cannot parse `{}` for key `{key}`", e.value),
            }),
        }
    }

    fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(e) = self.0.remove(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<T>().map_err(|_| Error::Parse {
                    line: e.line,
                    message: format!("cannot parse list item `{item}` for key `{key}`"),
                })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn take_seeds(&mut self) -> Result<Option<Vec<u64>>> {
        let Some(e) = self.0.get("seeds") else { return Ok(None) };
        if let Some((a, b)) = e.value.split_once("..") {
            let line = e.line;
            let bad = |s: &str| Error::Parse { line, message: format!("bad seed range bound `{s}`") };
            let lo: u64 = a.trim().parse().map_err(|_| bad(a))?;
            let hi: u64 = b.trim().parse().map_err(|_| bad(b))?;
            self.0.remove("seeds");
            return Ok(Some((lo..hi).collect()));
        }
        self.take_list("seeds")
    }

    /// Errors if `key` is present; used for parameters of other kinds.
    fn reject(&self, key: &str, why: &str) -> Result<()> {
        match self.0.get(key) {
            Some(_) => Err(Error::config(key, format!("does not apply {why}"))),
            None => Ok(()),
        }
    }
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Parse { line, message: format!("`{key}` expects true or false, got `{v}`") }),
    }
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Parse { line, message: format!("unknown key `{key}`") });
        }
        if map.contains_key(&key) {
            return Err(Error::Parse { line, message: format!("duplicate key `{key}`") });
        }
        map.insert(key, Entry { line, value: value.trim().to_string() });
    }
    let mut e = Entries(map);
    let d = SimConfig::default();

    let record_epochs = match e.0.remove("record_epochs") {
        Some(x) => parse_bool(x.line, "record_epochs", &x.value)?,
        None => d.record_epochs,
    };
    let model_kind = match e.take::<String>("model")?.as_deref() {
        None => d.model_kind,
        Some("two-state") => ModelKind::TwoState,
        Some("three-state") => ModelKind::ThreeState,
        Some(other) => return Err(Error::config("model", format!("unknown model `{other}`"))),
    };

    let tau_stake = e.take_or("tau_stake", d.tau_stake)?;
    let (policy, inflation_ratio) = parse_policy(&mut e, &d, tau_stake)?;
    let demand = parse_demand(&mut e, &d)?;

    let sim = SimConfig {
        n_agents: e.take_or("n_agents", d.n_agents)?,
        beta0: e.take_or("beta0", d.beta0)?,
        beta1: e.take_or("beta1", d.beta1)?,
        spread: e.take_or("spread", d.spread)?,
        tau_stake,
        tau_lend: e.take_or("tau_lend", d.tau_lend)?,
        p_slash: e.take_or("p_slash", d.p_slash)?,
        slash_fraction: e.take_or("slash_fraction", d.slash_fraction)?,
        lambda_stake: e.take_or("lambda_stake", d.lambda_stake)?,
        lambda_lend: e.take_or("lambda_lend", d.lambda_lend)?,
        initial_lend_rate: e.take_or("initial_lend_rate", d.initial_lend_rate)?,
        rate_period_blocks: e.take_or("rate_period_blocks", d.rate_period_blocks)?,
        horizon: e.take_or("horizon", d.horizon)?,
        seed: e.take_or("seed", d.seed)?,
        security_floor: e.take_or("security_floor", d.security_floor)?,
        record_epochs,
        policy,
        demand,
        model_kind,
    };
    let sweep = SweepAxes {
        beta0_grid: e.take_list("beta0_grid")?,
        beta1_grid: e.take_list("beta1_grid")?,
        inflation_grid: e.take_list("inflation_grid")?,
        borrow_threshold_grid: e.take_list("borrow_threshold_grid")?,
        seeds: e.take_seeds()?,
    };
    debug_assert!(e.0.is_empty(), "unconsumed keys: {:?}", e.0.keys().collect::<Vec<_>>());
    sim.validate()?;
    Ok(ConfigFile { sim, inflation_ratio, sweep })
}

fn parse_policy(e: &mut Entries, d: &SimConfig<f64>, tau_stake: u64) -> Result<(MonetaryPolicy<f64>, Option<f64>)> {
    let kind = e.take::<String>("policy")?;
    let r0 = e.take_or("r0", d.policy.r0())?;
    let s0 = e.take_or("s0", d.policy.s0())?;
    let only = |e: &Entries, keep: &[&str], kind: &str| -> Result<()> {
        for key in ["half_life", "degree", "growth", "inflation_ratio"] {
            if !keep.contains(&key) {
                e.reject(key, &format!("to the `{kind}` policy"))?;
            }
        }
        Ok(())
    };
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::config(key, "required by the selected policy"));
    Ok(match kind.as_deref() {
        None | Some("constant") => {
            only(e, &[], "constant")?;
            (MonetaryPolicy::Constant { r0, s0 }, None)
        }
        Some("half-life") => {
            only(e, &["half_life"], "half-life")?;
            let half_life = need(e.take("half_life")?, "half_life")?;
            (MonetaryPolicy::GeometricHalfLife { r0, half_life, s0 }, None)
        }
        Some("polynomial") => {
            only(e, &["degree"], "polynomial")?;
            let degree = e.take::<u32>("degree")?.ok_or_else(|| Error::config("degree", "required by the selected policy"))?;
            (MonetaryPolicy::Polynomial { r0, degree, s0 }, None)
        }
        Some("exponential") => {
            only(e, &["growth"], "exponential")?;
            let growth = need(e.take("growth")?, "growth")?;
            (MonetaryPolicy::Exponential { r0, growth, s0 }, None)
        }
        Some("epoch-ratio") => {
            only(e, &["inflation_ratio"], "epoch-ratio")?;
            let ratio = need(e.take("inflation_ratio")?, "inflation_ratio")?;
            (MonetaryPolicy::from_epoch_ratio(ratio, r0, s0, tau_stake)?, Some(ratio))
        }
        Some(other) => return Err(Error::config("policy", format!("unknown policy `{other}`"))),
    })
}

fn parse_demand(e: &mut Entries, d: &SimConfig<f64>) -> Result<DemandModel<f64>> {
    let kind = e.take::<String>("demand")?;
    let (dd, dv, d0, d1) = match d.demand {
        DemandModel::BoundedRandomWalk { drift, vol, eta0, eta1 } => (drift, vol, eta0, eta1),
        _ => unreachable!("default demand is a random walk"),
    };
    let walk_keys = ["demand_drift", "demand_vol", "eta0", "eta1"];
    match kind.as_deref() {
        Some("constant-k") => {
            for key in walk_keys {
                e.reject(key, "to constant-k demand")?;
            }
            let k = e.take("demand_k")?.ok_or_else(|| Error::config("demand_k", "required by constant-k demand"))?;
            Ok(DemandModel::ConstantK { k })
        }
        None | Some("random-walk") | Some("reflected-gbm") => {
            e.reject("demand_k", "to walk or GBM demand")?;
            let gbm = kind.as_deref() == Some("reflected-gbm");
            if gbm && !(e.0.contains_key("demand_vol")) {
                return Err(Error::config("demand_vol", "required by reflected-gbm demand"));
            }
            let drift = e.take_or("demand_drift", if gbm { 0.0 } else { dd })?;
            let vol = e.take_or("demand_vol", dv)?;
            let eta0 = e.take_or("eta0", d0)?;
            let eta1 = e.take_or("eta1", d1)?;
            Ok(if gbm {
                DemandModel::ReflectedGbm { drift, vol, eta0, eta1 }
            } else {
                DemandModel::BoundedRandomWalk { drift, vol, eta0, eta1 }
            })
        }
        Some(other) => Err(Error::config("demand", format!("unknown demand model `{other}`"))),
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "n_agents",
    "beta0",
    "beta1",
    "spread",
    "tau_stake",
    "tau_lend",
    "p_slash",
    "slash_fraction",
    "lambda_stake",
    "lambda_lend",
    "initial_lend_rate",
    "rate_period_blocks",
    "horizon",
    "seed",
    "security_floor",
    "record_epochs",
    "model",
    "policy",
    "r0",
    "s0",
    "half_life",
    "degree",
    "growth",
    "inflation_ratio",
    "demand",
    "demand_k",
    "demand_drift",
    "demand_vol",
    "eta0",
    "eta1",
    "beta0_grid",
    "beta1_grid",
    "inflation_grid",
    "borrow_threshold_grid",
    "seeds",
];

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    parse_config(&std::fs::read_to_string(path)?)
}
