use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{HarnessError, HarnessResult};
use crate::constraints::{AssumptionCheck, ConstraintSystem, KnapsackSystem};
use crate::ground_set::{Codebook, GroundSet, UserProfile};
use crate::linalg::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Greedy,
    Lazy,
    Pruned,
    Exact,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Lazy => "lazy",
            Algorithm::Pruned => "pruned",
            Algorithm::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Alphabet {
    #[default]
    Gaussian,
    Finite,
}

impl Alphabet {
    pub fn name(self) -> &'static str {
        match self {
            Alphabet::Gaussian => "gaussian",
            Alphabet::Finite => "finite",
        }
    }
}

/// A complex matrix given as row-major real and (optional) imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl MatrixSpec {
    pub fn to_matrix(&self) -> HarnessResult<CMat> {
        let n = self.rows * self.cols;
        let im = self.im.clone().unwrap_or_else(|| vec![0.0; n]);
        if self.re.len() != n || im.len() != n {
            return Err(HarnessError::Config(format!(
                "matrix declared {}x{} but has {} real / {} imaginary entries",
                self.rows,
                self.cols,
                self.re.len(),
                im.len()
            )));
        }
        let data = self
            .re
            .iter()
            .zip(&im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Ok(CMat::from_row_major(self.rows, self.cols, data)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodebookSpec {
    /// One column of the identity per transmit antenna.
    #[default]
    AntennaSelection,
    /// The full identity: every antenna carries its own stream.
    Identity,
    Explicit {
        matrices: Vec<MatrixSpec>,
    },
}

/// Defaults applied to every user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default = "one")]
    pub power: f64,
    /// Buffer in bits per interval; absent means infinitely backlogged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue: Option<f64>,
    #[serde(default = "default_constellation")]
    pub constellation: u32,
    #[serde(default = "one")]
    pub weight: f64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec {
            power: 1.0,
            queue: None,
            constellation: 16,
            weight: 1.0,
        }
    }
}

/// Per-user override of [`ProfileSpec`] fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserOverride {
    pub index: usize,
    pub power: Option<f64>,
    pub queue: Option<f64>,
    pub constellation: Option<u32>,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    /// Shorthand for a single control row covering every element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_scheduled_users: Option<u32>,
    /// Binary control rows over the ground set, row-major.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub control: Vec<Vec<f64>>,
    /// Budget of each control row; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_budgets: Option<Vec<u32>>,
    /// Interference rows with coefficients in [0, 1].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interference: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_column_sparsity: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn default_constellation() -> u32 {
    16
}

fn default_intervals() -> usize {
    1
}

fn default_tau() -> f64 {
    100.0
}

fn default_true() -> bool {
    true
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Greedy]
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub users: usize,
    pub rbs: usize,
    pub rx_antennas: usize,
    pub tx_antennas: usize,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_intervals")]
    pub intervals: usize,
    #[serde(default)]
    pub seed: u64,
    /// The first algorithm drives the fairness weights; the others are run
    /// on the same channels and weights for comparison.
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub alphabet: Alphabet,
    #[serde(default = "default_tau")]
    pub pf_tau: f64,
    #[serde(default = "default_true")]
    pub upper_bound: bool,
    #[serde(default)]
    pub codebook: CodebookSpec,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default, rename = "user", skip_serializing_if = "Vec::is_empty")]
    pub users_override: Vec<UserOverride>,
    #[serde(default)]
    pub constraints: ConstraintSpec,
}

impl Scenario {
    pub fn from_toml(text: &str) -> HarnessResult<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> HarnessResult<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.users == 0 || self.rbs == 0 || self.rx_antennas == 0 || self.tx_antennas == 0 {
            return bad("users, rbs, rx_antennas and tx_antennas must be positive".into());
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|x| !x.is_finite()) {
            return bad("snr_db must list at least one finite value".into());
        }
        if self.intervals == 0 {
            return bad("intervals must be positive".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if !(self.pf_tau > 1.0) {
            return bad(format!("pf_tau must exceed 1, got {}", self.pf_tau));
        }
        for o in &self.users_override {
            if o.index >= self.users {
                return bad(format!("user override index {} out of range", o.index));
            }
        }
        if self.constraints.max_scheduled_users.is_some() && !self.constraints.control.is_empty() {
            return bad("give either max_scheduled_users or explicit control rows".into());
        }
        Ok(())
    }

    pub fn codebook(&self) -> HarnessResult<Codebook> {
        let cb = match &self.codebook {
            CodebookSpec::AntennaSelection => Codebook::antenna_selection(self.tx_antennas)?,
            CodebookSpec::Identity => Codebook::new(vec![CMat::identity(self.tx_antennas)])?,
            CodebookSpec::Explicit { matrices } => Codebook::new(
                matrices
                    .iter()
                    .map(MatrixSpec::to_matrix)
                    .collect::<HarnessResult<_>>()?,
            )?,
        };
        if cb.n_t() != self.tx_antennas {
            return Err(HarnessError::Config(format!(
                "codebook matrices have {} rows but tx_antennas = {}",
                cb.n_t(),
                self.tx_antennas
            )));
        }
        Ok(cb)
    }

    fn user_field<T: Copy>(
        &self,
        u: usize,
        pick: impl Fn(&UserOverride) -> Option<T>,
    ) -> Option<T> {
        self.users_override
            .iter()
            .rev()
            .find(|o| o.index == u)
            .and_then(pick)
    }

    pub fn profiles(&self) -> Vec<UserProfile> {
        (0..self.users)
            .map(|u| UserProfile {
                queue: self
                    .user_field(u, |o| o.queue)
                    .or(self.profile.queue)
                    .unwrap_or(f64::INFINITY),
                power: self
                    .user_field(u, |o| o.power)
                    .unwrap_or(self.profile.power),
                constellation_size: self
                    .user_field(u, |o| o.constellation)
                    .unwrap_or(self.profile.constellation),
                n_t: self.tx_antennas,
            })
            .collect()
    }

    pub fn initial_weights(&self) -> Vec<f64> {
        (0..self.users)
            .map(|u| {
                self.user_field(u, |o| o.weight)
                    .unwrap_or(self.profile.weight)
            })
            .collect()
    }

    /// Builds the interval-independent part: ground set and knapsacks.
    pub fn instance(&self) -> HarnessResult<Instance> {
        let ground = GroundSet::build(self.codebook()?, self.rbs, self.profiles())?;
        let n = ground.len();
        let c = &self.constraints;
        let mut knapsacks = if let Some(m) = c.max_scheduled_users {
            if !c.interference.is_empty() {
                let mut k = KnapsackSystem::from_dense(n, &[], &[], &c.interference)?;
                let shorthand = KnapsackSystem::max_scheduled(n, m)?;
                k = KnapsackSystem::new(
                    n,
                    shorthand.control_rows().to_vec(),
                    k.interference_rows().to_vec(),
                )?;
                k
            } else {
                KnapsackSystem::max_scheduled(n, m)?
            }
        } else {
            let budgets = c
                .control_budgets
                .clone()
                .unwrap_or_else(|| vec![1; c.control.len()]);
            KnapsackSystem::from_dense(n, &c.control, &budgets, &c.interference)?
        };
        if let Some(delta) = c.max_column_sparsity {
            knapsacks = knapsacks.require_column_sparsity(delta)?;
        }
        Ok(Instance { ground, knapsacks })
    }
}

/// Ground set and knapsacks shared by every interval of a scenario.
#[derive(Debug, Clone)]
pub struct Instance {
    pub ground: GroundSet,
    pub knapsacks: KnapsackSystem,
}

impl Instance {
    pub fn constraints(&self) -> ConstraintSystem {
        ConstraintSystem::new(&self.ground, self.knapsacks.clone())
            .expect("knapsacks are built for this ground set")
    }

    pub fn stats(&self) -> GroundStats {
        let allocs = self.ground.allocations();
        let two = allocs.iter().filter(|a| a.is_two_chunk()).count();
        GroundStats {
            users: self.ground.n_users(),
            rbs: self.ground.n_rbs(),
            codebook_size: self.ground.codebook().len(),
            allocations: allocs.len(),
            one_chunk_allocations: allocs.len() - two,
            two_chunk_allocations: two,
            elements: self.ground.len(),
            control_rows: self.knapsacks.control_rows().len(),
            interference_rows: self.knapsacks.interference_rows().len(),
            column_sparsity: self.knapsacks.column_sparsity(),
            max_feasible_size: self.constraints().max_feasible_size(),
            assumptions: self.knapsacks.assumptions_hold(&self.ground),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStats {
    pub users: usize,
    pub rbs: usize,
    pub codebook_size: usize,
    pub allocations: usize,
    pub one_chunk_allocations: usize,
    pub two_chunk_allocations: usize,
    pub elements: usize,
    pub control_rows: usize,
    pub interference_rows: usize,
    pub column_sparsity: usize,
    pub max_feasible_size: usize,
    pub assumptions: AssumptionCheck,
}
