//! Partition matroid plus packing (knapsack) constraints.
//!
//! Control-channel rows are binary with an integer budget `C` (the normalized
//! row has coefficient `1/C`, so `C = 1` is the plain binary row with unit
//! right-hand side). Interference rows carry coefficients in `[0, 1]` against a
//! unit right-hand side.

use crate::error::{Error, Result};
use crate::ground_set::{ElementId, GroundSet};
use crate::rank::Subset;

/// Slack allowed on fractional row sums.
pub const FRACTIONAL_TOLERANCE: f64 = 1e-12;

/// True iff no two elements of `subset` share a user.
pub fn is_independent(ground: &GroundSet, subset: &Subset) -> bool {
    let mut seen = vec![false; ground.n_users()];
    subset.iter().all(|id| {
        let u = ground.element(id).user;
        !std::mem::replace(&mut seen[u], true)
    })
}

/// True iff every strictly positive coefficient of `row` is the same.
pub fn is_matroid_row(row: &[f64]) -> bool {
    let mut positive = row.iter().copied().filter(|&x| x > 0.0);
    let Some(first) = positive.next() else {
        return true;
    };
    let binary = row.iter().all(|&x| x == 0.0 || x == 1.0);
    if binary {
        return true;
    }
    positive.all(|x| (x - first).abs() <= FRACTIONAL_TOLERANCE)
}

/// At most `budget` of `members` may be selected.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRow {
    pub members: Subset,
    pub budget: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceRow {
    /// Nonzero coefficients, sorted by element.
    pub coefficients: Vec<(ElementId, f64)>,
}

impl InterferenceRow {
    pub fn dense(&self, n_elements: usize) -> Vec<f64> {
        let mut row = vec![0.0; n_elements];
        for &(id, a) in &self.coefficients {
            row[id.index()] = a;
        }
        row
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSystem {
    n_elements: usize,
    control: Vec<ControlRow>,
    interference: Vec<InterferenceRow>,
    control_of: Vec<Vec<u32>>,
    interference_of: Vec<Vec<(u32, f64)>>,
    column_sparsity: usize,
}

impl KnapsackSystem {
    pub fn unconstrained(n_elements: usize) -> Self {
        Self::new(n_elements, Vec::new(), Vec::new()).expect("empty system is valid")
    }

    pub fn new(
        n_elements: usize,
        control: Vec<ControlRow>,
        interference: Vec<InterferenceRow>,
    ) -> Result<Self> {
        let mut control_of = vec![Vec::new(); n_elements];
        let mut interference_of = vec![Vec::new(); n_elements];
        let out_of_range = |id: ElementId| {
            Error::invalid(format!(
                "{id} outside a ground set of {n_elements} elements"
            ))
        };
        for (r, row) in control.iter().enumerate() {
            if row.budget == 0 {
                return Err(Error::invalid(format!("control row {r} has a zero budget")));
            }
            for id in row.members.iter() {
                control_of
                    .get_mut(id.index())
                    .ok_or_else(|| out_of_range(id))?
                    .push(r as u32);
            }
        }
        for (r, row) in interference.iter().enumerate() {
            let mut prev: Option<ElementId> = None;
            for &(id, a) in &row.coefficients {
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::invalid(format!(
                        "interference row {r}: coefficient {a} of {id} outside [0, 1]"
                    )));
                }
                if prev.is_some_and(|p| p >= id) {
                    return Err(Error::invalid(format!(
                        "interference row {r}: coefficients not sorted by element"
                    )));
                }
                prev = Some(id);
                if a > 0.0 {
                    interference_of
                        .get_mut(id.index())
                        .ok_or_else(|| out_of_range(id))?
                        .push((r as u32, a));
                }
            }
        }
        let column_sparsity = control_of.iter().map(Vec::len).max().unwrap_or(0);
        Ok(KnapsackSystem {
            n_elements,
            control,
            interference,
            control_of,
            interference_of,
            column_sparsity,
        })
    }

    /// Builds from dense rows: `control` entries must be 0/1, `interference`
    /// entries in `[0, 1]`.
    pub fn from_dense(
        n_elements: usize,
        control: &[Vec<f64>],
        control_budgets: &[u32],
        interference: &[Vec<f64>],
    ) -> Result<Self> {
        if control.len() != control_budgets.len() {
            return Err(Error::invalid("one budget per control row required"));
        }
        let check_len = |row: &Vec<f64>, kind: &str| {
            if row.len() == n_elements {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{kind} row has {} entries for {n_elements} elements",
                    row.len()
                )))
            }
        };
        let mut rows = Vec::with_capacity(control.len());
        for (row, &budget) in control.iter().zip(control_budgets) {
            check_len(row, "control")?;
            if row.iter().any(|&x| x != 0.0 && x != 1.0) {
                return Err(Error::invalid("control rows must be binary"));
            }
            rows.push(ControlRow {
                members: Subset::from_indices(
                    row.iter()
                        .enumerate()
                        .filter(|(_, &x)| x == 1.0)
                        .map(|(i, _)| i),
                ),
                budget,
            });
        }
        let mut irows = Vec::with_capacity(interference.len());
        for row in interference {
            check_len(row, "interference")?;
            irows.push(InterferenceRow {
                coefficients: row
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != 0.0)
                    .map(|(i, &a)| (ElementId(i as u32), a))
                    .collect(),
            });
        }
        Self::new(n_elements, rows, irows)
    }

    /// One control row over every element: at most `m` selections.
    pub fn max_scheduled(n_elements: usize, m: u32) -> Result<Self> {
        Self::new(
            n_elements,
            vec![ControlRow {
                members: Subset::from_indices(0..n_elements),
                budget: m,
            }],
            Vec::new(),
        )
    }

    /// Rejects the system if some element sits in more than `delta` control rows.
    pub fn require_column_sparsity(self, delta: usize) -> Result<Self> {
        if self.column_sparsity > delta {
            return Err(Error::invalid(format!(
                "control column sparsity {} exceeds {delta}",
                self.column_sparsity
            )));
        }
        Ok(self)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn control_rows(&self) -> &[ControlRow] {
        &self.control
    }

    pub fn interference_rows(&self) -> &[InterferenceRow] {
        &self.interference
    }

    pub fn column_sparsity(&self) -> usize {
        self.column_sparsity
    }

    pub fn knapsack_feasible(&self, subset: &Subset) -> Result<bool> {
        if let Some(id) = subset.iter().find(|id| id.index() >= self.n_elements) {
            return Err(Error::invalid(format!(
                "{id} outside a ground set of {} elements",
                self.n_elements
            )));
        }
        let mut counts = vec![0u32; self.control.len()];
        let mut sums = vec![0.0; self.interference.len()];
        for id in subset.iter() {
            for &r in &self.control_of[id.index()] {
                counts[r as usize] += 1;
            }
            for &(r, a) in &self.interference_of[id.index()] {
                sums[r as usize] += a;
            }
        }
        Ok(counts
            .iter()
            .zip(&self.control)
            .all(|(&c, row)| c <= row.budget)
            && sums.iter().all(|&s| s <= 1.0 + FRACTIONAL_TOLERANCE))
    }

    /// Whether the rows have the structure under which the greedy guarantee
    /// improves to `1/(2+M)`: control rows partition the elements along user
    /// boundaries, and every interference row is a cardinality row.
    pub fn assumptions_hold(&self, ground: &GroundSet) -> AssumptionCheck {
        if ground.len() != self.n_elements {
            return AssumptionCheck::fail(format!(
                "system has {} columns, ground set has {} elements",
                self.n_elements,
                ground.len()
            ));
        }
        if !self.control.is_empty() {
            for (i, rows) in self.control_of.iter().enumerate() {
                match rows.len() {
                    0 => {
                        return AssumptionCheck::fail(format!("control regions do not cover e{i}"))
                    }
                    1 => {}
                    _ => return AssumptionCheck::fail("control regions overlap".into()),
                }
            }
            for u in 0..ground.n_users() {
                let range = ground.user_elements(u);
                let region = self.control_of[range.start][0];
                if range.clone().any(|i| self.control_of[i][0] != region) {
                    return AssumptionCheck::fail(format!(
                        "user {u} spans more than one control region"
                    ));
                }
            }
        }
        for (r, row) in self.interference.iter().enumerate() {
            let coeffs: Vec<f64> = row.coefficients.iter().map(|&(_, a)| a).collect();
            if !is_matroid_row(&coeffs) {
                return AssumptionCheck::fail(format!(
                    "interference row {r} has unequal positive coefficients"
                ));
            }
        }
        AssumptionCheck {
            holds: true,
            diagnostic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub holds: bool,
    pub diagnostic: Option<String>,
}

impl AssumptionCheck {
    fn fail(msg: String) -> Self {
        AssumptionCheck {
            holds: false,
            diagnostic: Some(msg),
        }
    }
}

/// Partition matroid (one element per user) together with the knapsacks.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    user_of: Vec<usize>,
    n_users: usize,
    knapsacks: KnapsackSystem,
}

impl ConstraintSystem {
    pub fn new(ground: &GroundSet, knapsacks: KnapsackSystem) -> Result<Self> {
        if knapsacks.n_elements != ground.len() {
            return Err(Error::invalid(format!(
                "knapsack system has {} columns, ground set has {} elements",
                knapsacks.n_elements,
                ground.len()
            )));
        }
        Ok(ConstraintSystem {
            user_of: ground.elements().iter().map(|e| e.user).collect(),
            n_users: ground.n_users(),
            knapsacks,
        })
    }

    pub fn matroid_only(ground: &GroundSet) -> Self {
        Self::new(ground, KnapsackSystem::unconstrained(ground.len())).expect("sizes agree")
    }

    pub fn knapsacks(&self) -> &KnapsackSystem {
        &self.knapsacks
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn user_of(&self, id: ElementId) -> usize {
        self.user_of[id.index()]
    }

    pub fn is_feasible(&self, subset: &Subset) -> Result<bool> {
        let mut state = self.state();
        for id in subset.iter() {
            if id.index() >= self.user_of.len() {
                return Err(Error::invalid(format!("{id} outside the ground set")));
            }
            if !state.can_add(id) {
                return Ok(false);
            }
            state.add(id);
        }
        Ok(true)
    }

    /// Empty running state for incremental checks.
    pub fn state(&self) -> FeasibilityState<'_> {
        FeasibilityState {
            system: self,
            user_taken: vec![false; self.n_users],
            control_counts: vec![0; self.knapsacks.control.len()],
            interference_sums: vec![0.0; self.knapsacks.interference.len()],
            size: 0,
        }
    }

    /// Upper bound on the size of any feasible set: one per user, and no
    /// more than the control budgets allow when the control rows cover
    /// every element.
    pub fn max_feasible_size(&self) -> usize {
        let mut bound = self.n_users;
        let k = &self.knapsacks;
        if !k.control.is_empty() && k.control_of.iter().all(|rows| !rows.is_empty()) {
            let budget: usize = k.control.iter().map(|r| r.budget as usize).sum();
            bound = bound.min(budget);
        }
        bound
    }
}

/// Row sums of a growing selection, checked one candidate at a time.
#[derive(Debug, Clone)]
pub struct FeasibilityState<'a> {
    system: &'a ConstraintSystem,
    user_taken: Vec<bool>,
    control_counts: Vec<u32>,
    interference_sums: Vec<f64>,
    size: usize,
}

impl FeasibilityState<'_> {
    /// Whether the current selection plus `id` is feasible. Does not check
    /// that `id` is new to the selection.
    pub fn can_add(&self, id: ElementId) -> bool {
        let sys = self.system;
        let k = &sys.knapsacks;
        !self.user_taken[sys.user_of[id.index()]]
            && k.control_of[id.index()]
                .iter()
                .all(|&r| self.control_counts[r as usize] < k.control[r as usize].budget)
            && k.interference_of[id.index()]
                .iter()
                .all(|&(r, a)| self.interference_sums[r as usize] + a <= 1.0 + FRACTIONAL_TOLERANCE)
    }

    pub fn add(&mut self, id: ElementId) {
        let sys = self.system;
        self.user_taken[sys.user_of[id.index()]] = true;
        for &r in &sys.knapsacks.control_of[id.index()] {
            self.control_counts[r as usize] += 1;
        }
        for &(r, a) in &sys.knapsacks.interference_of[id.index()] {
            self.interference_sums[r as usize] += a;
        }
        self.size += 1;
    }

    pub fn size(&self) -> usize {
        self.size
    }
}
