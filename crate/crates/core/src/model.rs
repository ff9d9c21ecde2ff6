//! Core problem model: propositions with ownership, actions, truth-assignment
//! states, public projection, and plan validation.
//!
//! States are fixed-width bit assignments ordered index-first (bit 0 is the
//! most significant), so the derived byte ordering is the lexicographic state
//! order used everywhere else. Public propositions always occupy the low
//! indices, private propositions follow grouped by agent.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense proposition index into [`PlanningInstance::props`].
pub type PropId = usize;

/// Agent index, `0..n_agents`.
pub type AgentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Owner {
    Public,
    PrivateTo(AgentId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposition {
    pub index: PropId,
    pub name: String,
    pub owner: Owner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Visibility {
    Public,
    Private,
}

/// A STRIPS action with positive preconditions and literal effects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub name: String,
    pub owner: AgentId,
    pub visibility: Visibility,
    /// Sorted proposition ids that must hold.
    pub pre: Vec<PropId>,
    /// Sorted by proposition id; `true` adds, `false` deletes.
    pub eff: Vec<(PropId, bool)>,
}

impl Action {
    pub fn is_public(&self) -> bool {
        self.visibility == Visibility::Public
    }
}

/// Fixed-width truth assignment. Bit `i` lives at byte `i / 8`, mask
/// `0x80 >> (i % 8)`, so comparing the byte vectors compares assignments in
/// index order with earlier indices more significant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bits {
    width: usize,
    bytes: Vec<u8>,
}

impl Bits {
    pub fn zeros(width: usize) -> Self {
        Bits {
            width,
            bytes: vec![0; width.div_ceil(8)],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.width);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.width);
        let mask = 0x80 >> (i % 8);
        if value {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Index-order rendering, e.g. `0110`.
    pub fn to_bitstring(&self) -> String {
        (0..self.width)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bitstring(s: &str) -> Option<Self> {
        let mut bits = Bits::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => bits.set(i, true),
                '0' => {}
                _ => return None,
            }
        }
        Some(bits)
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_bitstring())
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_bitstring())
    }
}

/// Assignment over all propositions of an instance.
pub type WorldState = Bits;
/// Assignment restricted to the public propositions.
pub type PublicState = Bits;
/// Assignment restricted to one agent's private propositions.
pub type PrivateState = Bits;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("precondition of action `{action}` violated")]
    PreconditionViolated { action: String },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
}

/// A fully validated problem instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanningInstance {
    pub name: String,
    pub agents: Vec<String>,
    /// Public props first (sorted by name), then each agent's private props
    /// (sorted by agent, then name). Indices are contiguous from 0.
    pub props: Vec<Proposition>,
    pub n_public: usize,
    /// Per agent: (first private index, count).
    pub private_ranges: Vec<(usize, usize)>,
    /// Sorted by (owner, name).
    pub actions: Vec<Action>,
    pub initial: WorldState,
    /// Sorted public proposition ids.
    pub goal: Vec<PropId>,
}

impl PlanningInstance {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_props(&self) -> usize {
        self.props.len()
    }

    pub fn action(&self, name: &str) -> Option<&Action> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn actions_of(&self, agent: AgentId) -> impl Iterator<Item = &Action> {
        self.actions.iter().filter(move |a| a.owner == agent)
    }

    pub fn private_actions_of(&self, agent: AgentId) -> impl Iterator<Item = &Action> {
        self.actions_of(agent).filter(|a| !a.is_public())
    }

    pub fn public_actions_of(&self, agent: AgentId) -> impl Iterator<Item = &Action> {
        self.actions_of(agent).filter(|a| a.is_public())
    }

    pub fn satisfies(&self, state: &WorldState, pre: &[PropId]) -> bool {
        pre.iter().all(|&p| state.get(p))
    }

    pub fn applicable(&self, action: &Action, state: &WorldState) -> bool {
        self.satisfies(state, &action.pre)
    }

    /// STRIPS application: effects override, untouched propositions persist.
    pub fn apply(&self, action: &Action, state: &WorldState) -> Result<WorldState, ModelError> {
        if !self.applicable(action, state) {
            return Err(ModelError::PreconditionViolated {
                action: action.name.clone(),
            });
        }
        let mut next = state.clone();
        for &(p, sign) in &action.eff {
            next.set(p, sign);
        }
        Ok(next)
    }

    pub fn goal_satisfied(&self, state: &WorldState) -> bool {
        self.goal.iter().all(|&p| state.get(p))
    }

    pub fn goal_satisfied_public(&self, public: &PublicState) -> bool {
        self.goal.iter().all(|&p| public.get(p))
    }

    /// Splits a world state into its public part and the per-agent private parts.
    pub fn split(&self, state: &WorldState) -> (PublicState, Vec<PrivateState>) {
        let mut public = Bits::zeros(self.n_public);
        for i in 0..self.n_public {
            public.set(i, state.get(i));
        }
        let privates = (0..self.n_agents())
            .map(|agent| {
                let (start, len) = self.private_ranges[agent];
                let mut ps = Bits::zeros(len);
                for i in 0..len {
                    ps.set(i, state.get(start + i));
                }
                ps
            })
            .collect();
        (public, privates)
    }

    /// Inverse of [`split`](Self::split).
    pub fn join(&self, public: &PublicState, privates: &[PrivateState]) -> WorldState {
        let mut state = Bits::zeros(self.n_props());
        for i in 0..self.n_public {
            state.set(i, public.get(i));
        }
        for (agent, ps) in privates.iter().enumerate() {
            let (start, len) = self.private_ranges[agent];
            debug_assert_eq!(ps.width(), len);
            for i in 0..len {
                state.set(start + i, ps.get(i));
            }
        }
        state
    }

    pub fn public_part(&self, state: &WorldState) -> PublicState {
        let mut public = Bits::zeros(self.n_public);
        for i in 0..self.n_public {
            public.set(i, state.get(i));
        }
        public
    }

    pub fn private_part(&self, state: &WorldState, agent: AgentId) -> PrivateState {
        let (start, len) = self.private_ranges[agent];
        let mut ps = Bits::zeros(len);
        for i in 0..len {
            ps.set(i, state.get(start + i));
        }
        ps
    }

    pub fn initial_public(&self) -> PublicState {
        self.public_part(&self.initial)
    }

    pub fn initial_private(&self, agent: AgentId) -> PrivateState {
        self.private_part(&self.initial, agent)
    }

    /// Tests `pre` against an agent-local view `(public, own private part)`.
    /// Only valid for actions of `agent`: their preconditions never mention
    /// other agents' propositions.
    pub fn satisfies_split(
        &self,
        agent: AgentId,
        public: &PublicState,
        private: &PrivateState,
        pre: &[PropId],
    ) -> bool {
        let (start, len) = self.private_ranges[agent];
        pre.iter().all(|&p| {
            if p < self.n_public {
                public.get(p)
            } else {
                debug_assert!(p >= start && p < start + len);
                private.get(p - start)
            }
        })
    }

    /// Applies an action of `agent` to an agent-local view.
    pub fn apply_split(
        &self,
        agent: AgentId,
        action: &Action,
        public: &PublicState,
        private: &PrivateState,
    ) -> Result<(PublicState, PrivateState), ModelError> {
        debug_assert_eq!(action.owner, agent);
        if !self.satisfies_split(agent, public, private, &action.pre) {
            return Err(ModelError::PreconditionViolated {
                action: action.name.clone(),
            });
        }
        let (start, _) = self.private_ranges[agent];
        let mut pub_next = public.clone();
        let mut prv_next = private.clone();
        for &(p, sign) in &action.eff {
            if p < self.n_public {
                pub_next.set(p, sign);
            } else {
                prv_next.set(p - start, sign);
            }
        }
        Ok((pub_next, prv_next))
    }
}

/// An action with its private propositions removed. A private action projects
/// to the empty action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProjectedAction {
    pub name: String,
    pub owner: AgentId,
    pub pre: Vec<PropId>,
    pub eff: Vec<(PropId, bool)>,
}

pub fn project_action(instance: &PlanningInstance, action: &Action) -> ProjectedAction {
    ProjectedAction {
        name: action.name.clone(),
        owner: action.owner,
        pre: action
            .pre
            .iter()
            .copied()
            .filter(|&p| p < instance.n_public)
            .collect(),
        eff: action
            .eff
            .iter()
            .copied()
            .filter(|&(p, _)| p < instance.n_public)
            .collect(),
    }
}

/// The single-agent problem over public propositions only: the public half of
/// the leakage object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedInstance {
    pub n_agents: usize,
    pub public_props: Vec<String>,
    /// Projections of the public actions, ordered by (owner, name).
    pub actions: Vec<ProjectedAction>,
    pub initial: PublicState,
    pub goal: Vec<PropId>,
}

impl ProjectedInstance {
    pub fn action(&self, name: &str) -> Option<&ProjectedAction> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// Owner of a public action, looked up by name.
    pub fn owner_of(&self, name: &str) -> Option<AgentId> {
        self.action(name).map(|a| a.owner)
    }

    pub fn goal_satisfied(&self, public: &PublicState) -> bool {
        self.goal.iter().all(|&p| public.get(p))
    }

    /// Canonical text form; equality of projections is byte equality of this.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(&format!("agents {}\n", self.n_agents));
        out.push_str(&format!("props {}\n", self.public_props.join(",")));
        out.push_str(&format!("init {}\n", self.initial.to_bitstring()));
        let goal: Vec<String> = self.goal.iter().map(|p| p.to_string()).collect();
        out.push_str(&format!("goal {}\n", goal.join(",")));
        for a in &self.actions {
            let pre: Vec<String> = a.pre.iter().map(|p| p.to_string()).collect();
            let eff: Vec<String> = a
                .eff
                .iter()
                .map(|&(p, s)| format!("{}{}", if s { "+" } else { "-" }, p))
                .collect();
            out.push_str(&format!(
                "action {} owner {} pre {} eff {}\n",
                a.name,
                a.owner,
                pre.join(","),
                eff.join(",")
            ));
        }
        out.into_bytes()
    }
}

pub fn project_instance(instance: &PlanningInstance) -> ProjectedInstance {
    let mut actions: Vec<ProjectedAction> = instance
        .actions
        .iter()
        .filter(|a| a.is_public())
        .map(|a| project_action(instance, a))
        .collect();
    actions.sort_by(|a, b| (a.owner, &a.name).cmp(&(b.owner, &b.name)));
    ProjectedInstance {
        n_agents: instance.n_agents(),
        public_props: instance.props[..instance.n_public]
            .iter()
            .map(|p| p.name.clone())
            .collect(),
        actions,
        initial: instance.initial_public(),
        goal: instance.goal.clone(),
    }
}

/// An ordered list of public action names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Plan(pub Vec<String>);

impl Plan {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "(empty)")
        } else {
            write!(f, "{}", self.0.join(","))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    /// Index of the first public action that cannot be enabled by any
    /// interleaving of private actions.
    Reject {
        at_index: usize,
    },
}

/// Checks whether some interleaving of private actions around the given public
/// sequence executes from the initial state and reaches the goal. Works on
/// sets of world states closed under all agents' private actions.
pub fn validate_plan(instance: &PlanningInstance, plan: &Plan) -> Result<Verdict, ModelError> {
    use std::collections::BTreeSet;

    let private_closure_all = |states: &BTreeSet<WorldState>| -> BTreeSet<WorldState> {
        let mut seen = states.clone();
        let mut frontier: Vec<WorldState> = states.iter().cloned().collect();
        while let Some(s) = frontier.pop() {
            for a in instance.actions.iter().filter(|a| !a.is_public()) {
                if instance.applicable(a, &s) {
                    let next = instance.apply(a, &s).expect("checked applicable");
                    if seen.insert(next.clone()) {
                        frontier.push(next);
                    }
                }
            }
        }
        seen
    };

    let mut current: BTreeSet<WorldState> = BTreeSet::new();
    current.insert(instance.initial.clone());
    current = private_closure_all(&current);

    for (idx, name) in plan.0.iter().enumerate() {
        let action = instance
            .action(name)
            .ok_or_else(|| ModelError::UnknownAction(name.clone()))?;
        let mut next = BTreeSet::new();
        for s in &current {
            if instance.applicable(action, s) {
                next.insert(instance.apply(action, s).expect("checked applicable"));
            }
        }
        if next.is_empty() {
            return Ok(Verdict::Reject { at_index: idx });
        }
        current = private_closure_all(&next);
    }

    if current.iter().any(|s| instance.goal_satisfied(s)) {
        Ok(Verdict::Accept)
    } else {
        Ok(Verdict::Reject {
            at_index: plan.0.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn toy() -> PlanningInstance {
        corpus::load_named("toy-2ag").unwrap()
    }

    #[test]
    fn apply_empty_action_is_identity() {
        let inst = toy();
        let noop = Action {
            name: "noop".into(),
            owner: 0,
            visibility: Visibility::Private,
            pre: vec![],
            eff: vec![],
        };
        let s = inst.initial.clone();
        assert_eq!(inst.apply(&noop, &s).unwrap(), s);
    }

    #[test]
    fn apply_private_effect() {
        let inst = toy();
        let priv1 = inst.action("priv1").unwrap().clone();
        let s = inst.apply(&priv1, &inst.initial).unwrap();
        let h1 = inst.props.iter().find(|p| p.name == "h1").unwrap().index;
        for p in 0..inst.n_props() {
            assert_eq!(s.get(p), p == h1);
        }
    }

    #[test]
    fn apply_rejects_unmet_precondition() {
        let inst = toy();
        let pub1 = inst.action("pub1").unwrap().clone();
        assert!(matches!(
            inst.apply(&pub1, &inst.initial),
            Err(ModelError::PreconditionViolated { .. })
        ));
    }

    #[test]
    fn projection_drops_private_propositions() {
        let inst = toy();
        let pub1 = inst.action("pub1").unwrap();
        let proj = project_action(&inst, pub1);
        assert!(proj.pre.is_empty(), "h1 is private and must be dropped");
        assert_eq!(proj.eff.len(), 1);

        let priv1 = inst.action("priv1").unwrap();
        let proj = project_action(&inst, priv1);
        assert!(proj.pre.is_empty() && proj.eff.is_empty());
    }

    #[test]
    fn projection_fixes_public_only_action() {
        let inst = toy();
        let pub2 = inst.action("pub2").unwrap();
        let proj = project_action(&inst, pub2);
        assert_eq!(proj.pre, pub2.pre);
        assert_eq!(proj.eff, pub2.eff);
    }

    #[test]
    fn project_instance_toy() {
        let inst = toy();
        let proj = project_instance(&inst);
        assert_eq!(proj.public_props, vec!["g".to_string(), "p".to_string()]);
        assert_eq!(proj.actions.len(), 2);
        assert_eq!(proj.initial.to_bitstring(), "00");
        assert_eq!(proj.goal.len(), 1);
    }

    #[test]
    fn project_instance_without_privates_is_isomorphic() {
        let inst = corpus::load_named("alt-agents").unwrap();
        assert_eq!(inst.n_public, inst.n_props());
        let proj = project_instance(&inst);
        assert_eq!(proj.actions.len(), inst.actions.len());
        for a in &inst.actions {
            let p = proj.action(&a.name).unwrap();
            assert_eq!(p.pre, a.pre);
            assert_eq!(p.eff, a.eff);
        }
    }

    #[test]
    fn validate_plan_examples() {
        let inst = toy();
        let ok = Plan(vec!["pub1".into(), "pub2".into()]);
        assert_eq!(validate_plan(&inst, &ok).unwrap(), Verdict::Accept);

        let bad = Plan(vec!["pub2".into()]);
        assert_eq!(
            validate_plan(&inst, &bad).unwrap(),
            Verdict::Reject { at_index: 0 }
        );

        let unknown = Plan(vec!["nope".into()]);
        assert!(matches!(
            validate_plan(&inst, &unknown),
            Err(ModelError::UnknownAction(_))
        ));
    }

    #[test]
    fn validate_empty_plan_on_satisfied_goal() {
        let inst = corpus::load_named("goal-at-init").unwrap();
        assert_eq!(
            validate_plan(&inst, &Plan(vec![])).unwrap(),
            Verdict::Accept
        );
    }

    #[test]
    fn split_join_roundtrip_random() {
        use rand::{Rng, SeedableRng};
        let inst = corpus::load_named("logistics-3ag").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let mut s = Bits::zeros(inst.n_props());
            for i in 0..inst.n_props() {
                s.set(i, rng.gen_bool(0.5));
            }
            let (public, privates) = inst.split(&s);
            assert_eq!(inst.join(&public, &privates), s);
        }
    }

    #[test]
    fn frame_property_random() {
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let inst = corpus::load_named("logistics-3ag").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        for _ in 0..20_000 {
            let mut s = Bits::zeros(inst.n_props());
            for i in 0..inst.n_props() {
                s.set(i, rng.gen_bool(0.5));
            }
            let a = inst.actions.choose(&mut rng).unwrap();
            if !inst.applicable(a, &s) {
                continue;
            }
            checked += 1;
            let next = inst.apply(a, &s).unwrap();
            for p in 0..inst.n_props() {
                if !a.eff.iter().any(|&(q, _)| q == p) {
                    assert_eq!(next.get(p), s.get(p), "frame violated at prop {p}");
                }
            }
        }
        assert!(checked > 100, "too few applicable samples: {checked}");
    }

    #[test]
    fn public_projection_commutes_for_public_only_instances() {
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let inst = corpus::load_named("alt-agents").unwrap();
        let proj = project_instance(&inst);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..2_000 {
            let mut s = Bits::zeros(inst.n_props());
            for i in 0..inst.n_props() {
                s.set(i, rng.gen_bool(0.5));
            }
            let a = inst.actions.choose(&mut rng).unwrap();
            if !inst.applicable(a, &s) {
                continue;
            }
            let next = inst.apply(a, &s).unwrap();
            let pa = proj.action(&a.name).unwrap();
            let mut proj_next = inst.public_part(&s);
            for &(p, sign) in &pa.eff {
                proj_next.set(p, sign);
            }
            assert_eq!(inst.public_part(&next), proj_next);
        }
    }

    #[test]
    fn bits_ordering_is_index_first() {
        let a = Bits::from_bitstring("0100").unwrap();
        let b = Bits::from_bitstring("1000").unwrap();
        let c = Bits::from_bitstring("0011").unwrap();
        assert!(a < b);
        assert!(c < a);
    }
}
