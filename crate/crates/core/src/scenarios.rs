//! Built-in scenarios and seeded random generators.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::evolution::Scenario;
use crate::linalg::{self, c, ComplexMatrix, C64};
use crate::state::DensityMatrix;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * (0.5f64).sqrt()
    })
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the phase fix.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let qr = gaussian_matrix(n, n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { linalg::ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Ginibre-ensemble state of the given rank.
pub fn random_density_matrix<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = gaussian_matrix(n, rank.max(1), rng);
    let m = &g * g.adjoint();
    DensityMatrix::normalized(linalg::hermitian_part(&m)).expect("Ginibre matrix has positive trace")
}

/// `n` Kraus operators `d_out x d_in` of a random isometry (a CPTP map).
pub fn random_kraus<R: Rng + ?Sized>(d_in: usize, d_out: usize, n: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let rows = d_out * n.max(1);
    assert!(rows >= d_in, "Kraus rank too small for an isometry");
    let q = gaussian_matrix(rows, d_in, rng).qr().q();
    (0..n.max(1))
        .map(|l| q.view((l * d_out, 0), (d_out, d_in)).into_owned())
        .collect()
}

pub fn random_channel<R: Rng + ?Sized>(d_in: usize, d_out: usize, rank: usize, rng: &mut R) -> Channel {
    let rank = rank.max(d_in.div_ceil(d_out));
    Channel::from_kraus(&random_kraus(d_in, d_out, rank, rng)).expect("isometry gives a channel")
}

/// A random trace-decreasing channel: a random channel after a random effect `E`, `0 < E < I`.
pub fn random_trace_decreasing<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Channel {
    let k = random_kraus(d, d, rank.max(1), rng);
    let u = haar_unitary(d, rng);
    let spectrum: Vec<C64> = (0..d).map(|_| c(rng.random_range(0.2..0.9f64).sqrt(), 0.0)).collect();
    let sqrt_effect = &u * linalg::diag(&spectrum) * u.adjoint();
    let kraus: Vec<ComplexMatrix> = k.iter().map(|m| m * &sqrt_effect).collect();
    Channel::from_kraus(&kraus).expect("contraction gives a CP map")
}

/// Random scenario: Haar unitaries and a full-rank Ginibre initial state.
pub fn random<R: Rng + ?Sized>(d_sys: usize, d_env: usize, k: usize, rng: &mut R) -> Result<Scenario> {
    let n = d_sys * d_env;
    let unitaries = (0..k).map(|_| haar_unitary(n, rng)).collect();
    let initial = random_density_matrix(n, n, rng);
    Scenario::new(d_sys, d_env, initial, unitaries, None)
}

pub fn random_seeded(d_sys: usize, d_env: usize, k: usize, seed: u64) -> Result<Scenario> {
    random(d_sys, d_env, k, &mut seeded_rng(seed))
}

/// Random scenario with `U = U_S (x) U_E` and a product initial state.
pub fn factorized_random<R: Rng + ?Sized>(d_sys: usize, d_env: usize, k: usize, rng: &mut R) -> Result<Scenario> {
    let unitaries = (0..k)
        .map(|_| linalg::kron(&haar_unitary(d_sys, rng), &haar_unitary(d_env, rng)))
        .collect();
    let initial = random_density_matrix(d_sys, d_sys, rng).tensor(&random_density_matrix(d_env, d_env, rng));
    Scenario::new(d_sys, d_env, initial, unitaries, None)
}

/// `|s e> -> |s XOR e, e>`: the environment controls a flip of the system.
pub fn cnot_env_control() -> ComplexMatrix {
    let mut m = linalg::zeros(4, 4);
    for s in 0..2 {
        for e in 0..2 {
            m[(((s ^ e) << 1) | e, (s << 1) | e)] = linalg::ONE;
        }
    }
    m
}

/// Swap with a maximally mixed qubit environment, then an environment-controlled NOT.
///
/// The system starts in `|+>`, unbiased in the computational basis.
pub fn cnot_memory() -> Scenario {
    let h = 0.5f64.sqrt();
    let plus = DensityMatrix::pure(&[c(h, 0.0), c(h, 0.0)]).expect("normalized");
    Scenario::new(
        2,
        2,
        plus.tensor(&DensityMatrix::maximally_mixed(2)),
        vec![linalg::swap_gate(2), cnot_env_control()],
        None,
    )
    .expect("valid scenario")
}

/// `cos(theta) I + i sin(theta) SWAP` on two qubits.
pub fn partial_swap_unitary(theta: f64) -> ComplexMatrix {
    linalg::identity(4) * c(theta.cos(), 0.0) + linalg::swap_gate(2) * c(0.0, theta.sin())
}

/// Partial swaps over consecutive intervals of `times`, system `|0>`, environment `I/2`.
pub fn partial_swap(omega: f64, times: &[f64]) -> Result<Scenario> {
    partial_swap_with_state(omega, times, &DensityMatrix::basis_state(2, 0))
}

/// [`partial_swap`] starting from `rho_s (x) I/2`.
pub fn partial_swap_with_state(omega: f64, times: &[f64], rho_s: &DensityMatrix) -> Result<Scenario> {
    check_times(times)?;
    if !omega.is_finite() || rho_s.dim() != 2 {
        return Err(Error::param("partial swap needs a finite frequency and a qubit state"));
    }
    let unitaries = times.windows(2).map(|w| partial_swap_unitary(omega * (w[1] - w[0]))).collect();
    Scenario::new(
        2,
        2,
        rho_s.tensor(&DensityMatrix::maximally_mixed(2)),
        unitaries,
        Some(times.to_vec()),
    )
}

/// Two full swaps from `rho_s (x) rho_e`.
pub fn double_swap(rho_s: &DensityMatrix, rho_e: &DensityMatrix) -> Result<Scenario> {
    if rho_s.dim() != rho_e.dim() {
        return Err(Error::dim("system and environment must have equal dimension"));
    }
    let d = rho_s.dim();
    Scenario::new(d, d, rho_s.tensor(rho_e), vec![linalg::swap_gate(d); 2], None)
}

/// Environment grid for the Lorentzian wavefunction `sqrt(gamma/pi)/(x + i gamma)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzianGrid {
    pub x: Vec<f64>,
    pub amplitudes: Vec<C64>,
}

impl LorentzianGrid {
    pub fn new(gamma: f64, n_modes: usize, x_max: f64) -> Result<Self> {
        if n_modes < 16 || gamma.is_nan() || gamma <= 0.0 || x_max.is_nan() || x_max <= 0.0 {
            return Err(Error::param("need n_modes >= 16, gamma > 0 and x_max > 0"));
        }
        let step = 2.0 * x_max / (n_modes - 1) as f64;
        let x: Vec<f64> = (0..n_modes).map(|m| -x_max + step * m as f64).collect();
        let raw: Vec<C64> = x
            .iter()
            .map(|&xm| c((gamma / std::f64::consts::PI).sqrt(), 0.0) / c(xm, gamma))
            .collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        Ok(Self { x, amplitudes: raw.iter().map(|a| a / norm).collect() })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Coherence factor `sum_m p_m exp(-i g x_m t)`.
    pub fn characteristic(&self, g: f64, t: f64) -> C64 {
        self.x
            .iter()
            .zip(self.weights())
            .map(|(&x, p)| c(0.0, -g * x * t).exp() * p)
            .sum()
    }
}

/// Parameters of the pure-dephasing scenario `H = (g/2) sigma_z (x) x`.
#[derive(Clone, Debug, PartialEq)]
pub struct DephasingParams {
    pub g: f64,
    pub gamma: f64,
    pub n_modes: usize,
    pub x_max: f64,
}

impl DephasingParams {
    /// Default grid: 512 modes on `[-50 gamma, 50 gamma]`.
    pub fn new(g: f64, gamma: f64) -> Self {
        Self { g, gamma, n_modes: 512, x_max: 50.0 * gamma }
    }
}

/// `exp(-i (g/2) sigma_z (x) x dt)` on the grid (diagonal).
pub fn dephasing_unitary(g: f64, x: &[f64], dt: f64) -> ComplexMatrix {
    let n = x.len();
    let mut diag = Vec::with_capacity(2 * n);
    for z in [1.0, -1.0] {
        for &xm in x {
            diag.push(c(0.0, -0.5 * g * z * xm * dt).exp());
        }
    }
    linalg::diag(&diag)
}

/// Qubit dephasing by a discretized continuous mode, one step per interval of `times`.
pub fn dephasing_echo(params: &DephasingParams, times: &[f64], rho_s: &DensityMatrix) -> Result<Scenario> {
    check_times(times)?;
    if rho_s.dim() != 2 || !params.g.is_finite() {
        return Err(Error::param("dephasing needs a qubit state and finite coupling"));
    }
    let grid = LorentzianGrid::new(params.gamma, params.n_modes, params.x_max)?;
    let env = linalg::projector(&grid.amplitudes);
    let initial = DensityMatrix::new(linalg::kron(rho_s.matrix(), &env))?;
    let unitaries = times.windows(2).map(|w| dephasing_unitary(params.g, &grid.x, w[1] - w[0])).collect();
    Scenario::new(2, params.n_modes, initial, unitaries, Some(times.to_vec()))
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::param("need at least two time labels"));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("times must be finite and strictly increasing"));
    }
    Ok(())
}

fn bloch_state(v: [f64; 3]) -> Result<DensityMatrix> {
    let p = linalg::paulis();
    let m = (&p[0] + &p[1] * c(v[0], 0.0) + &p[2] * c(v[1], 0.0) + &p[3] * c(v[2], 0.0)) * c(0.5, 0.0);
    DensityMatrix::new(m)
}

/// Named scenario with parameters, as it appears in configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// One registry entry: name, summary and parameter defaults.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: Vec<(&'static str, f64)>,
    pub needs_seed: bool,
}

pub fn registry() -> Vec<ScenarioInfo> {
    vec![
        ScenarioInfo {
            name: "cnot_memory",
            summary: "swap with a mixed qubit, then environment-controlled NOT (2 steps)",
            params: vec![],
            needs_seed: false,
        },
        ScenarioInfo {
            name: "partial_swap",
            summary: "partial swaps exp(i S omega dt) with a mixed qubit environment",
            params: vec![("omega", 1.0), ("t1", 0.0), ("t2", 0.5), ("t3", 1.0)],
            needs_seed: false,
        },
        ScenarioInfo {
            name: "double_swap",
            summary: "two full swaps from a product state (Bloch vectors s*, e*)",
            params: vec![("sx", 1.0), ("sy", 0.0), ("sz", 0.0), ("ex", 0.0), ("ey", 0.0), ("ez", 1.0)],
            needs_seed: false,
        },
        ScenarioInfo {
            name: "dephasing_echo",
            summary: "qubit coupled to a Lorentzian continuous mode, steps of length dt",
            params: vec![
                ("g", 1.0),
                ("gamma", 1.0),
                ("n_modes", 512.0),
                ("x_max", 50.0),
                ("dt", 0.5),
                ("steps", 4.0),
            ],
            needs_seed: false,
        },
        ScenarioInfo {
            name: "random",
            summary: "Haar unitaries and a random full-rank initial state",
            params: vec![("d_sys", 2.0), ("d_env", 2.0), ("steps", 2.0)],
            needs_seed: true,
        },
        ScenarioInfo {
            name: "factorized_random",
            summary: "random U_S (x) U_E dynamics from a product state",
            params: vec![("d_sys", 2.0), ("d_env", 2.0), ("steps", 2.0)],
            needs_seed: true,
        },
    ]
}

impl ScenarioSpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), params: BTreeMap::new(), seed: None }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Parameters merged with registry defaults; unknown keys are rejected.
    pub fn resolved_params(&self) -> Result<BTreeMap<String, f64>> {
        let info = registry()
            .into_iter()
            .find(|i| i.name == self.name)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{}'", self.name)))?;
        let mut out: BTreeMap<String, f64> = info.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in &self.params {
            if !out.contains_key(k) {
                return Err(Error::Config(format!("scenario '{}' has no parameter '{k}'", self.name)));
            }
            if !v.is_finite() {
                return Err(Error::Config(format!("parameter '{k}' is not finite")));
            }
            out.insert(k.clone(), *v);
        }
        if info.needs_seed && self.seed.is_none() {
            return Err(Error::Config(format!("scenario '{}' needs a seed", self.name)));
        }
        Ok(out)
    }

    pub fn build(&self) -> Result<Scenario> {
        let p = self.resolved_params()?;
        let get = |k: &str| p[k];
        let count = |k: &str| -> Result<usize> {
            let v = p[k];
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::Config(format!("parameter '{k}' must be a non-negative integer")));
            }
            Ok(v as usize)
        };
        match self.name.as_str() {
            "cnot_memory" => Ok(cnot_memory()),
            "partial_swap" => partial_swap(get("omega"), &[get("t1"), get("t2"), get("t3")]),
            "double_swap" => double_swap(
                &bloch_state([get("sx"), get("sy"), get("sz")])?,
                &bloch_state([get("ex"), get("ey"), get("ez")])?,
            ),
            "dephasing_echo" => {
                let params = DephasingParams {
                    g: get("g"),
                    gamma: get("gamma"),
                    n_modes: count("n_modes")?,
                    x_max: get("x_max") * get("gamma"),
                };
                let steps = count("steps")?;
                let times: Vec<f64> = (0..=steps).map(|j| j as f64 * get("dt")).collect();
                let h = 0.5f64.sqrt();
                dephasing_echo(&params, &times, &DensityMatrix::pure(&[c(h, 0.0), c(h, 0.0)])?)
            }
            "random" | "factorized_random" => {
                let (ds, de, k) = (count("d_sys")?, count("d_env")?, count("steps")?);
                if ds < 2 || de < 1 {
                    return Err(Error::Config("need d_sys >= 2 and d_env >= 1".into()));
                }
                let mut rng = seeded_rng(self.seed.expect("checked above"));
                if self.name == "random" {
                    random(ds, de, k, &mut rng)
                } else {
                    factorized_random(ds, de, k, &mut rng)
                }
            }
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, evolve_trajectory, ControlSequence};
    use crate::linalg::{max_abs_diff, SubsystemShape};
    use crate::state::mutual_information;

    #[test]
    fn haar_unitaries_are_unitary_and_deterministic() {
        let a = haar_unitary(5, &mut seeded_rng(3));
        let b = haar_unitary(5, &mut seeded_rng(3));
        assert_eq!(a, b);
        assert!(max_abs_diff(&(a.adjoint() * &a), &linalg::identity(5)) < 1e-12);
    }

    #[test]
    fn random_scenarios_are_bitwise_reproducible() {
        let a = random_seeded(2, 3, 3, 99).unwrap();
        let b = random_seeded(2, 3, 3, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_seeded(2, 3, 3, 100).unwrap());
    }

    #[test]
    fn closed_system_stays_pure() {
        let mut rng = seeded_rng(4);
        let u = haar_unitary(2, &mut rng);
        let sc = Scenario::new(2, 1, DensityMatrix::basis_state(2, 0), vec![u.clone(), u], None).unwrap();
        let out = evolve(&sc, &ControlSequence::identity(2, 2), 2).unwrap();
        assert!((out.normalized().unwrap().purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_swap_limits() {
        assert!(max_abs_diff(&partial_swap_unitary(0.0), &linalg::identity(4)) < 1e-15);
        let full = partial_swap_unitary(std::f64::consts::FRAC_PI_2);
        assert!(max_abs_diff(&full, &(linalg::swap_gate(2) * c(0.0, 1.0))) < 1e-15);
        assert!(partial_swap(1.0, &[0.0, 0.5, 0.4]).is_err());
    }

    #[test]
    fn partial_swap_identity_channel_is_depolarizing() {
        let mut rng = seeded_rng(5);
        let (omega, t) = (1.3, [0.0, 0.4, 0.9]);
        let theta = omega * (t[1] - t[0]);
        for _ in 0..5 {
            let rho = random_density_matrix(2, 2, &mut rng);
            let sc = partial_swap_with_state(omega, &t, &rho).unwrap();
            let out = evolve(&sc, &ControlSequence::identity(2, 1), 1).unwrap();
            let expect = rho.matrix() * c(theta.cos().powi(2), 0.0)
                + linalg::identity(2) * c(0.5 * theta.sin().powi(2), 0.0);
            assert!(max_abs_diff(out.matrix(), &expect) < 1e-14);
        }
    }

    #[test]
    fn double_swap_stays_product_and_returns() {
        let mut rng = seeded_rng(6);
        let rs = random_density_matrix(2, 1, &mut rng);
        let re = random_density_matrix(2, 1, &mut rng);
        let sc = double_swap(&rs, &re).unwrap();
        let mut controls = ControlSequence::identity(2, 2);
        controls.set(1, random_channel(2, 2, 3, &mut rng)).unwrap();
        let traj = evolve_trajectory(&sc, &controls, 2).unwrap();
        assert!(max_abs_diff(&traj.joint[1], &linalg::kron(re.matrix(), rs.matrix())) < 1e-14);
        assert!(max_abs_diff(traj.system.matrix(), rs.matrix()) < 1e-14);
        let shape = SubsystemShape::new(vec![2, 2]).unwrap();
        for j in &traj.joint {
            let st = DensityMatrix::new(linalg::hermitian_part(j)).unwrap();
            assert!(mutual_information(&st, &shape, &[0], &[1]).unwrap().abs() < 1e-9);
        }
        let quiet = evolve_trajectory(&sc, &ControlSequence::identity(2, 2), 2).unwrap();
        for j in &quiet.joint {
            let st = DensityMatrix::new(linalg::hermitian_part(j)).unwrap();
            assert!((st.purity() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_without_coupling_keeps_coherence() {
        let h = 0.5f64.sqrt();
        let plus = DensityMatrix::pure(&[c(h, 0.0), c(h, 0.0)]).unwrap();
        let mut params = DephasingParams::new(0.0, 1.0);
        params.n_modes = 64;
        params.x_max = 10.0;
        let sc = dephasing_echo(&params, &[0.0, 1.0, 2.0], &plus).unwrap();
        let out = evolve(&sc, &ControlSequence::identity(2, 2), 2).unwrap();
        assert!((out.matrix()[(0, 1)].norm() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dephasing_coherence_matches_grid_characteristic() {
        let h = 0.5f64.sqrt();
        let plus = DensityMatrix::pure(&[c(h, 0.0), c(h, 0.0)]).unwrap();
        let mut params = DephasingParams::new(0.8, 1.0);
        params.n_modes = 128;
        params.x_max = 20.0;
        let sc = dephasing_echo(&params, &[0.0, 0.7], &plus).unwrap();
        let out = evolve(&sc, &ControlSequence::identity(2, 1), 1).unwrap();
        let grid = LorentzianGrid::new(1.0, 128, 20.0).unwrap();
        let expect = grid.characteristic(0.8, 0.7) * 0.5;
        assert!((out.matrix()[(0, 1)] - expect).norm() < 1e-13);
    }

    #[test]
    fn cnot_gate_convention() {
        let cn = cnot_env_control();
        // |s=0, e=1> -> |1, 1>
        let v = &cn * ComplexMatrix::from_column_slice(4, 1, &linalg::ket(4, 1));
        assert_eq!(v[(3, 0)], linalg::ONE);
        assert!(linalg::is_unitary(&cn, 1e-15));
    }

    #[test]
    fn spec_registry_builds_everything() {
        for info in registry() {
            let mut spec = ScenarioSpec::new(info.name);
            if info.needs_seed {
                spec = spec.with_seed(1);
            }
            if info.name == "dephasing_echo" {
                spec = spec.with_param("n_modes", 32.0);
            }
            spec.build().unwrap();
        }
        assert!(ScenarioSpec::new("nope").build().is_err());
        assert!(ScenarioSpec::new("random").build().is_err());
        assert!(ScenarioSpec::new("cnot_memory").with_param("omega", 1.0).build().is_err());
    }
}
