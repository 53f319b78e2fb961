//! Deterministic JSON reports.
//!
//! Keys are sorted, floats are written with 17 significant digits and
//! infinities as the string `"+inf"`. Everything except the `timing` section
//! is covered by the SHA-256 digest in `meta.digest`.

use std::collections::BTreeMap;
use std::io;
use std::time::Instant;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::analysis::trace_distance_curve;
use crate::channel::Channel;
use crate::cji::{cji_from_scenario, mps_from_scenario, Leg};
use crate::config::{matrix_to_json, Analysis, RunConfig};
use crate::error::{Error, Result};
use crate::evolution::{evolve, ControlSequence, Scenario};
use crate::linalg::{self, ComplexMatrix};
use crate::markov::{confusion_probability, is_divisible, markov_witness_standard, non_markovianity, History};
use crate::process_tensor::ProcessTensor;
use crate::state::trace_distance_matrices;

struct FloatFormatter {
    inner: PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident $(($arg:ident: $ty:ty))?),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)?) -> io::Result<()> {
            self.inner.$name(w $(, $arg)?)
        })*
    };
}

impl Formatter for FloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    delegate!(
        begin_array,
        end_array,
        begin_array_value(first: bool),
        end_array_value,
        begin_object,
        end_object,
        begin_object_key(first: bool),
        begin_object_value,
        end_object_value,
    );
}

/// Serializes with sorted keys and fixed float formatting.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // round through Value so maps come out sorted
    let value = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FloatFormatter { inner: PrettyFormatter::new() });
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// A float, or an explicit token when it is not finite.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v == f64::INFINITY {
        json!("+inf")
    } else if v == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!("nan")
    }
}

fn mat(m: &ComplexMatrix) -> Value {
    json!(matrix_to_json(m))
}

fn history(h: &History) -> Value {
    json!({
        "prefix": h.prefix.iter().map(|&(mu, nu)| json!({"effect": mu, "prep": nu})).collect::<Vec<_>>(),
        "outcome": h.outcome,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub config: Value,
    pub results: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub timing: BTreeMap<String, f64>,
}

impl Report {
    fn hashed(&self) -> Value {
        json!({
            "config": self.config,
            "results": self.results,
            "meta": {
                "version": env!("CARGO_PKG_VERSION"),
                "seed": self.seed,
            },
        })
    }

    /// SHA-256 of the canonical text of everything but the timings.
    pub fn digest(&self) -> Result<String> {
        let text = to_canonical_json(&self.hashed())?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    pub fn to_value(&self) -> Result<Value> {
        let mut v = self.hashed();
        v["meta"]["digest"] = json!(self.digest()?);
        v["timing"] = json!(self.timing.iter().map(|(k, t)| (k.clone(), num(*t))).collect::<Map<_, _>>());
        Ok(v)
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(&self.to_value()?)
    }
}

fn channel_summary(ch: &Channel) -> Value {
    json!({ "choi": mat(ch.choi()) })
}

fn run_tensor(sc: &Scenario) -> Result<Value> {
    let d = sc.d_sys();
    let k = sc.steps();
    let t = ProcessTensor::from_scenario_standard(sc, k)?;
    let (cp, min_eig) = t.check_cp()?;
    let ids = ControlSequence::identity(d, k);
    let out = t.apply(&ids)?;
    let direct = evolve(sc, &ids, k)?;
    let depol = ControlSequence::new(d, vec![Channel::depolarizing(d, 0.5)?; k])?;
    Ok(json!({
        "steps": k,
        "dimension": t.matrix().nrows(),
        "trace": num(t.matrix().trace().re),
        "cp": cp,
        "min_eigenvalue": num(min_eig),
        "identity_output": mat(out.matrix()),
        "oracle_residual": num(linalg::max_abs_diff(out.matrix(), direct.matrix())),
        "linearity_residual": num(t.check_linearity(&ids, &depol, 0.3)?),
    }))
}

fn run_cji(sc: &Scenario) -> Result<Value> {
    let u = cji_from_scenario(sc, sc.steps())?;
    let r0 = u.marginal(&[Leg::ControlInput(0)]).or_else(|_| u.marginal(&[Leg::Final]))?;
    Ok(json!({
        "steps": u.steps(),
        "dimension": u.matrix().nrows(),
        "trace": num(u.matrix().trace().re),
        "purity": num(u.purity()),
        "initial_marginal": mat(r0.matrix()),
    }))
}

fn run_mps(sc: &Scenario) -> Result<Value> {
    let mps = mps_from_scenario(sc, sc.steps())?;
    let dense = mps.to_dense()?;
    let circuit = cji_from_scenario(sc, sc.steps())?;
    Ok(json!({
        "bond_dimension": mps.bond_dimension(),
        "effective_bond_dimensions": mps.effective_bond_dimensions(),
        "dense_residual": num(linalg::max_abs_diff(dense.matrix(), circuit.matrix())),
    }))
}

fn run_witness(sc: &Scenario, tol: f64) -> Result<Value> {
    let rep = markov_witness_standard(sc, tol)?;
    let witness = rep.witness.as_ref().map(|w| {
        json!({
            "first": history(&w.first),
            "second": history(&w.second),
            "break_step": w.break_step,
            "final_step": w.final_step,
            "prep": w.prep,
            "first_state": mat(w.first_state.matrix()),
            "second_state": mat(w.second_state.matrix()),
        })
    });
    Ok(json!({
        "verdict": rep.verdict,
        "max_discrepancy": num(rep.max_discrepancy),
        "tol_markov": num(rep.tol_markov),
        "branches_skipped": rep.branches_skipped,
        "branches_evaluated": rep.branches_evaluated,
        "witness": witness,
    }))
}

fn run_divisibility(sc: &Scenario, tol: f64) -> Result<Value> {
    let rep = is_divisible(sc, tol)?;
    let maps: Map<String, Value> =
        rep.maps.iter().map(|((l, j), ch)| (format!("{l}:{j}"), channel_summary(ch))).collect();
    Ok(json!({
        "divisible": rep.divisible,
        "cp_divisible": rep.cp_divisible,
        "max_residual": num(rep.max_residual),
        "tolerance": num(tol),
        "worst": rep.worst.map(|(l, k, j)| vec![l, k, j]),
        "maps": maps,
    }))
}

fn run_measure(sc: &Scenario) -> Result<Value> {
    let u = cji_from_scenario(sc, sc.steps())?;
    let nm = non_markovianity(&u)?;
    let confusion: Map<String, Value> = [1u64, 10, 100]
        .iter()
        .map(|&n| Ok((n.to_string(), num(confusion_probability(n, nm)?))))
        .collect::<Result<_>>()?;
    Ok(json!({ "non_markovianity": num(nm), "confusion_probability": confusion }))
}

fn run_curve(sc: &Scenario, cfg: &RunConfig) -> Result<Value> {
    let [a, b] = cfg.curve_states(sc.d_sys())?;
    let curve = trace_distance_curve(sc, &a, &b)?;
    Ok(json!({
        "states": [mat(a.matrix()), mat(b.matrix())],
        "curve": curve.iter().map(|&(t, v)| json!([num(t), num(v)])).collect::<Vec<_>>(),
        "initial_distance": num(trace_distance_matrices(a.matrix(), b.matrix())?),
    }))
}

/// Runs every requested analysis in config order.
pub fn run_config(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let sc = cfg.scenario()?;
    let mut results = BTreeMap::new();
    let mut timing = BTreeMap::new();
    for &a in &cfg.analysis {
        let start = Instant::now();
        let value = match a {
            Analysis::Tensor => run_tensor(&sc),
            Analysis::Cji => run_cji(&sc),
            Analysis::Mps => run_mps(&sc),
            Analysis::Witness => run_witness(&sc, cfg.tolerances.markov),
            Analysis::Divisibility => run_divisibility(&sc, cfg.tolerances.divisibility),
            Analysis::Measure => run_measure(&sc),
            Analysis::TraceDistanceCurve => run_curve(&sc, cfg),
        }?;
        timing.insert(a.key().to_string(), start.elapsed().as_secs_f64());
        results.insert(a.key().to_string(), value);
    }
    let config = serde_json::to_value(cfg).map_err(Error::from)?;
    Ok(Report { config, results, seed: cfg.scenario.seed(), timing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits_and_sorted_keys() {
        let text = to_canonical_json(&json!({"b": 0.1, "a": [1, num(f64::INFINITY)], "c": -2.5e-300})).unwrap();
        let a = text.find("\"a\"").unwrap();
        let b = text.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(text.contains("1.0000000000000001e-1"));
        assert!(text.contains("\"+inf\""));
        assert!(text.contains("-2.5000000000000000e-300"));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn digest_ignores_timing() {
        let cfg = RunConfig::from_json(r#"{"scenario": {"name": "cnot_memory"}, "analysis": ["measure"]}"#).unwrap();
        let mut a = run_config(&cfg).unwrap();
        let b = run_config(&cfg).unwrap();
        assert_eq!(a.digest().unwrap(), b.digest().unwrap());
        a.timing.insert("measure".into(), 1e9);
        assert_eq!(a.digest().unwrap(), b.digest().unwrap());
        a.results.insert("extra".into(), json!(1));
        assert_ne!(a.digest().unwrap(), b.digest().unwrap());
    }
}
