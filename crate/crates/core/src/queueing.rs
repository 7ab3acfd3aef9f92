//! Skill-matched FIFO service queues with reneging, plus the refund
//! authorization path that depends on cashier empowerment.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::agents::{EventKind, ServiceKind, StaffAgent, StaffRole};
use crate::error::ModelFault;
use crate::kernel::{AgentId, EventHandle, Kernel, Minutes, UniformSource};
use crate::model::StaffingPlan;
use crate::stochastic::{sample_bernoulli, sample_triangular, DecisionProb, TriangularParams};

/// Whether `role` may serve a `kind` request (with the given skill requirement).
pub fn serves(role: StaffRole, kind: ServiceKind, expert_only: bool) -> bool {
    match kind {
        ServiceKind::Help => {
            role == StaffRole::ExpertSeller || (!expert_only && role == StaffRole::NormalSeller)
        }
        ServiceKind::Pay | ServiceKind::Refund => role == StaffRole::Cashier,
    }
}

pub fn compatible_roles(kind: ServiceKind) -> Vec<StaffRole> {
    match kind {
        ServiceKind::Help => vec![StaffRole::NormalSeller, StaffRole::ExpertSeller],
        ServiceKind::Pay | ServiceKind::Refund => vec![StaffRole::Cashier],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEntry {
    pub customer: AgentId,
    pub enqueued_at: Minutes,
    pub expert_only: bool,
    pub renege: EventHandle<EventKind>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("queue {0:?} has no compatible staff roles")]
pub struct EmptyRoleSet(pub ServiceKind);

#[derive(Debug, Clone)]
pub struct ServiceQueue {
    kind: ServiceKind,
    entries: VecDeque<QueueEntry>,
    compatible_roles: Vec<StaffRole>,
}

impl ServiceQueue {
    pub fn new(kind: ServiceKind, compatible_roles: Vec<StaffRole>) -> Result<Self, EmptyRoleSet> {
        if compatible_roles.is_empty() {
            return Err(EmptyRoleSet(kind));
        }
        Ok(Self {
            kind,
            entries: VecDeque::new(),
            compatible_roles,
        })
    }

    pub fn for_kind(kind: ServiceKind) -> Self {
        Self::new(kind, compatible_roles(kind)).expect("built-in role sets are non-empty")
    }

    pub fn kind(&self) -> ServiceKind {
        self.kind
    }

    pub fn compatible_roles(&self) -> &[StaffRole] {
        &self.compatible_roles
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &QueueEntry> {
        self.entries.iter()
    }

    pub fn contains(&self, customer: AgentId) -> bool {
        self.entries.iter().any(|e| e.customer == customer)
    }

    pub fn push(&mut self, entry: QueueEntry) {
        self.entries.push_back(entry);
    }

    pub fn remove(&mut self, customer: AgentId) -> Option<QueueEntry> {
        let idx = self.entries.iter().position(|e| e.customer == customer)?;
        self.entries.remove(idx)
    }

    fn accepts(&self, role: StaffRole, entry: &QueueEntry) -> bool {
        self.compatible_roles.contains(&role) && serves(role, self.kind, entry.expert_only)
    }

    /// Earliest entry `role` is able to serve.
    pub fn first_servable(&self, role: StaffRole) -> Option<usize> {
        self.entries.iter().position(|e| self.accepts(role, e))
    }

    fn take(&mut self, idx: usize) -> Option<QueueEntry> {
        self.entries.remove(idx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaffPool {
    staff: Vec<StaffAgent>,
}

impl StaffPool {
    /// Ids are assigned cashiers first, then normal sellers, experts and managers,
    /// so "lowest idle id" prefers normal sellers over experts for help.
    pub fn from_plan(plan: &StaffingPlan) -> Self {
        let mut staff = Vec::new();
        let groups = [
            (StaffRole::Cashier, plan.cashiers),
            (StaffRole::NormalSeller, plan.normal_sellers),
            (StaffRole::ExpertSeller, plan.expert_sellers),
            (StaffRole::SectionManager, plan.section_managers),
        ];
        for (role, count) in groups {
            for _ in 0..count {
                staff.push(StaffAgent::new(staff.len(), role));
            }
        }
        Self { staff }
    }

    pub fn get(&self, id: usize) -> &StaffAgent {
        &self.staff[id]
    }

    pub fn get_mut(&mut self, id: usize) -> &mut StaffAgent {
        &mut self.staff[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &StaffAgent> {
        self.staff.iter()
    }

    pub fn headcount(&self, role: StaffRole) -> usize {
        self.staff.iter().filter(|s| s.role == role).count()
    }

    pub fn idle_for(&self, kind: ServiceKind, expert_only: bool) -> Option<usize> {
        self.staff
            .iter()
            .find(|s| !s.is_busy() && serves(s.role, kind, expert_only))
            .map(|s| s.id)
    }

    pub fn idle_manager(&self) -> Option<usize> {
        self.staff
            .iter()
            .find(|s| !s.is_busy() && s.role == StaffRole::SectionManager)
            .map(|s| s.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Assignment {
    Assigned(usize),
    Queued { renege_at: Minutes },
}

/// Assigns the lowest-id idle compatible staff member, or prices the wait:
/// the renege time is `now` plus a patience draw.
pub fn request_or_enqueue(
    queue: &ServiceQueue,
    pool: &StaffPool,
    expert_only: bool,
    patience: &TriangularParams,
    now: Minutes,
    patience_draws: &mut impl UniformSource,
) -> Assignment {
    let idle = pool.iter().find(|s| {
        !s.is_busy()
            && queue.compatible_roles.contains(&s.role)
            && serves(s.role, queue.kind, expert_only)
    });
    match idle {
        Some(s) => Assignment::Assigned(s.id),
        None => Assignment::Queued {
            renege_at: now + sample_triangular(patience, patience_draws.next_uniform()),
        },
    }
}

/// Refund authorization policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpowermentPolicy {
    pub p_empowered: DecisionProb,
    pub authorization_overhead: TriangularParams,
    /// Scales the refund service time when the cashier decides autonomously.
    pub empowered_duration_multiplier: f64,
    /// Non-empowered refunds keep the cashier seized while the manager authorizes.
    pub hold_cashier_during_referral: bool,
}

impl Default for EmpowermentPolicy {
    fn default() -> Self {
        Self {
            p_empowered: DecisionProb::NEVER,
            authorization_overhead: TriangularParams::new(1.0, 3.0, 6.0).expect("valid"),
            empowered_duration_multiplier: 1.0,
            hold_cashier_during_referral: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefundPath {
    Autonomous { duration: Minutes },
    ManagerAuthorized { service: Minutes, overhead: Minutes },
}

pub fn resolve_refund_path(
    policy: &EmpowermentPolicy,
    refund_service: &TriangularParams,
    decisions: &mut impl UniformSource,
    durations: &mut impl UniformSource,
) -> RefundPath {
    let empowered = sample_bernoulli(policy.p_empowered, decisions.next_uniform());
    let service = sample_triangular(refund_service, durations.next_uniform());
    if empowered {
        RefundPath::Autonomous {
            duration: service * policy.empowered_duration_multiplier,
        }
    } else {
        RefundPath::ManagerAuthorized {
            service,
            overhead: sample_triangular(&policy.authorization_overhead, durations.next_uniform()),
        }
    }
}

/// All queues and staff of one department during a run.
#[derive(Debug, Clone)]
pub struct ServiceDesk {
    pool: StaffPool,
    help: ServiceQueue,
    pay: ServiceQueue,
    refund: ServiceQueue,
    cashier_priority: Vec<ServiceKind>,
    /// Refund customers waiting for a section manager, with the overhead owed.
    authorizations: VecDeque<(AgentId, Minutes)>,
}

impl ServiceDesk {
    pub fn new(plan: &StaffingPlan, cashier_priority: &[ServiceKind]) -> Self {
        Self {
            pool: StaffPool::from_plan(plan),
            help: ServiceQueue::for_kind(ServiceKind::Help),
            pay: ServiceQueue::for_kind(ServiceKind::Pay),
            refund: ServiceQueue::for_kind(ServiceKind::Refund),
            cashier_priority: cashier_priority.to_vec(),
            authorizations: VecDeque::new(),
        }
    }

    pub fn pool(&self) -> &StaffPool {
        &self.pool
    }

    pub fn pool_mut(&mut self) -> &mut StaffPool {
        &mut self.pool
    }

    pub fn queue(&self, kind: ServiceKind) -> &ServiceQueue {
        match kind {
            ServiceKind::Help => &self.help,
            ServiceKind::Pay => &self.pay,
            ServiceKind::Refund => &self.refund,
        }
    }

    fn queue_mut(&mut self, kind: ServiceKind) -> &mut ServiceQueue {
        match kind {
            ServiceKind::Help => &mut self.help,
            ServiceKind::Pay => &mut self.pay,
            ServiceKind::Refund => &mut self.refund,
        }
    }

    pub fn occupancy(&self) -> usize {
        self.help.len() + self.pay.len() + self.refund.len()
    }

    pub fn pending_authorizations(&self) -> usize {
        self.authorizations.len()
    }

    fn queued_anywhere(&self, customer: AgentId) -> bool {
        [&self.help, &self.pay, &self.refund]
            .iter()
            .any(|q| q.contains(customer))
    }

    /// Serves the customer immediately or queues them with a renege timer.
    #[allow(clippy::too_many_arguments)]
    pub fn request(
        &mut self,
        customer: AgentId,
        kind: ServiceKind,
        expert_only: bool,
        patience: &TriangularParams,
        kernel: &mut Kernel<EventKind>,
        patience_draws: &mut impl UniformSource,
    ) -> Result<Assignment, ModelFault> {
        if self.queued_anywhere(customer) {
            return Err(ModelFault::AlreadyQueued(customer));
        }
        let now = kernel.now();
        let outcome = request_or_enqueue(
            self.queue(kind),
            &self.pool,
            expert_only,
            patience,
            now,
            patience_draws,
        );
        if let Assignment::Queued { renege_at } = outcome {
            let renege = kernel.schedule(renege_at, EventKind::Renege, customer)?;
            self.queue_mut(kind).push(QueueEntry {
                customer,
                enqueued_at: now,
                expert_only,
                renege,
            });
        }
        Ok(outcome)
    }

    /// Removes a customer whose renege timer fired.
    pub fn renege(&mut self, customer: AgentId, kind: ServiceKind) -> Option<QueueEntry> {
        self.queue_mut(kind).remove(customer)
    }

    /// Removes a queued customer and cancels their renege timer.
    pub fn withdraw(
        &mut self,
        customer: AgentId,
        kind: ServiceKind,
        kernel: &mut Kernel<EventKind>,
    ) -> Option<QueueEntry> {
        let entry = self.queue_mut(kind).remove(customer)?;
        kernel.cancel(&entry.renege);
        Some(entry)
    }

    /// Queue scan order for a freed staff member of `role`.
    pub fn scan_order(&self, role: StaffRole) -> Vec<ServiceKind> {
        match role {
            StaffRole::Cashier => self.cashier_priority.clone(),
            StaffRole::NormalSeller | StaffRole::ExpertSeller => vec![ServiceKind::Help],
            StaffRole::SectionManager => vec![],
        }
    }

    /// Picks the next customer for an idle staff member: head of the first
    /// non-empty compatible queue in priority order. The renege timer of the
    /// chosen customer is cancelled.
    pub fn on_staff_freed(
        &mut self,
        staff: usize,
        kernel: &mut Kernel<EventKind>,
    ) -> Option<(ServiceKind, QueueEntry)> {
        let role = self.pool.get(staff).role;
        debug_assert!(!self.pool.get(staff).is_busy());
        for kind in self.scan_order(role) {
            let queue = self.queue_mut(kind);
            if let Some(idx) = queue.first_servable(role) {
                let entry = queue.take(idx).expect("index from position");
                kernel.cancel(&entry.renege);
                return Some((kind, entry));
            }
        }
        None
    }

    /// Starts an authorization if a manager is idle, otherwise queues it.
    pub fn request_authorization(
        &mut self,
        customer: AgentId,
        overhead: Minutes,
        kernel: &mut Kernel<EventKind>,
    ) -> Result<Option<usize>, ModelFault> {
        match self.pool.idle_manager() {
            Some(m) => {
                self.start_authorization(m, customer, overhead, kernel)?;
                Ok(Some(m))
            }
            None => {
                self.authorizations.push_back((customer, overhead));
                Ok(None)
            }
        }
    }

    fn start_authorization(
        &mut self,
        manager: usize,
        customer: AgentId,
        overhead: Minutes,
        kernel: &mut Kernel<EventKind>,
    ) -> Result<(), ModelFault> {
        if !(overhead.is_finite() && overhead > 0.0) {
            return Err(ModelFault::BadDuration(overhead));
        }
        self.pool.get_mut(manager).seize(customer, kernel.now())?;
        kernel.schedule_in(overhead, EventKind::AuthorizationDone, customer)?;
        Ok(())
    }

    /// Hands a freed manager the next waiting authorization.
    pub fn on_manager_freed(
        &mut self,
        manager: usize,
        kernel: &mut Kernel<EventKind>,
    ) -> Result<Option<AgentId>, ModelFault> {
        match self.authorizations.pop_front() {
            Some((customer, overhead)) => {
                self.start_authorization(manager, customer, overhead, kernel)?;
                Ok(Some(customer))
            }
            None => Ok(None),
        }
    }

    /// Checks the queueing invariants; returns a description of the first breach.
    pub fn check(&self, kernel: &Kernel<EventKind>) -> Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for q in [&self.help, &self.pay, &self.refund] {
            let mut last = f64::NEG_INFINITY;
            for e in q.entries() {
                if !seen.insert(e.customer) {
                    return Err(format!("customer {} queued twice", e.customer));
                }
                if !kernel.is_pending(&e.renege) {
                    return Err(format!(
                        "customer {} queued without live renege timer",
                        e.customer
                    ));
                }
                if e.enqueued_at < last {
                    return Err(format!("{:?} queue out of FIFO order", q.kind));
                }
                last = e.enqueued_at;
                if self.pool.iter().any(|s| s.serving() == Some(e.customer)) {
                    return Err(format!("customer {} queued while being served", e.customer));
                }
            }
        }
        for s in self.pool.iter().filter(|s| !s.is_busy()) {
            for kind in self.scan_order(s.role) {
                if self.queue(kind).first_servable(s.role).is_some() {
                    return Err(format!(
                        "idle {:?} {} while {:?} queue holds a servable customer",
                        s.role, s.id, kind
                    ));
                }
            }
            if s.role == StaffRole::SectionManager && !self.authorizations.is_empty() {
                return Err(format!("idle manager {} with pending authorizations", s.id));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rng_stream;

    struct Fixed(f64);

    impl UniformSource for Fixed {
        fn next_uniform(&mut self) -> f64 {
            self.0
        }
    }

    fn plan(cashiers: u32, normal: u32, expert: u32, managers: u32) -> StaffingPlan {
        StaffingPlan {
            cashiers,
            normal_sellers: normal,
            expert_sellers: expert,
            section_managers: managers,
        }
    }

    fn patience() -> TriangularParams {
        TriangularParams::new(5.0, 12.0, 20.0).unwrap()
    }

    const PRIORITY: [ServiceKind; 2] = [ServiceKind::Refund, ServiceKind::Pay];

    #[test]
    fn idle_cashier_is_assigned_immediately() {
        let desk = ServiceDesk::new(&plan(1, 0, 0, 0), &PRIORITY);
        let out = request_or_enqueue(
            desk.queue(ServiceKind::Pay),
            desk.pool(),
            false,
            &patience(),
            0.0,
            &mut Fixed(0.0),
        );
        assert_eq!(out, Assignment::Assigned(0));
        assert!(desk.queue(ServiceKind::Pay).is_empty());
    }

    #[test]
    fn no_cashier_means_queue_with_minimum_patience() {
        let mut desk = ServiceDesk::new(&plan(0, 3, 0, 0), &PRIORITY);
        let mut kernel = Kernel::new();
        let out = desk
            .request(
                7,
                ServiceKind::Pay,
                false,
                &patience(),
                &mut kernel,
                &mut Fixed(0.0),
            )
            .unwrap();
        assert_eq!(out, Assignment::Queued { renege_at: 5.0 });
        assert_eq!(desk.occupancy(), 1);
        assert_eq!(kernel.pending(), 1);
        assert!(desk.check(&kernel).is_ok());
    }

    #[test]
    fn empty_role_set_is_rejected() {
        assert_eq!(
            ServiceQueue::new(ServiceKind::Pay, vec![]).unwrap_err(),
            EmptyRoleSet(ServiceKind::Pay)
        );
    }

    #[test]
    fn double_enqueue_is_a_fault() {
        let mut desk = ServiceDesk::new(&plan(0, 0, 0, 0), &PRIORITY);
        let mut kernel = Kernel::new();
        let mut p = Fixed(0.5);
        desk.request(1, ServiceKind::Pay, false, &patience(), &mut kernel, &mut p)
            .unwrap();
        assert_eq!(
            desk.request(
                1,
                ServiceKind::Refund,
                false,
                &patience(),
                &mut kernel,
                &mut p
            ),
            Err(ModelFault::AlreadyQueued(1))
        );
    }

    fn occupy(desk: &mut ServiceDesk, staff: usize, customer: AgentId) {
        desk.pool_mut().get_mut(staff).seize(customer, 0.0).unwrap();
    }

    #[test]
    fn freed_cashier_takes_pay_head_fifo() {
        let mut desk = ServiceDesk::new(&plan(1, 0, 0, 0), &PRIORITY);
        let mut kernel = Kernel::new();
        occupy(&mut desk, 0, 100);
        let mut p = rng_stream(1, "patience");
        for c in 1..=3 {
            desk.request(c, ServiceKind::Pay, false, &patience(), &mut kernel, &mut p)
                .unwrap();
        }
        let horizon = crate::model::Horizon::new(1, 600.0).unwrap();
        desk.pool_mut().get_mut(0).release(1.0, &horizon).unwrap();
        let (kind, entry) = desk.on_staff_freed(0, &mut kernel).unwrap();
        assert_eq!((kind, entry.customer), (ServiceKind::Pay, 1));
        assert!(!kernel.is_pending(&entry.renege));
        let rest: Vec<_> = desk
            .queue(ServiceKind::Pay)
            .entries()
            .map(|e| e.customer)
            .collect();
        assert_eq!(rest, vec![2, 3]);
        assert_eq!(kernel.pending(), 2);
    }

    #[test]
    fn freed_cashier_with_empty_queues_stays_idle() {
        let mut desk = ServiceDesk::new(&plan(1, 0, 0, 0), &PRIORITY);
        let mut kernel = Kernel::new();
        assert!(desk.on_staff_freed(0, &mut kernel).is_none());
    }

    #[test]
    fn refund_queue_served_before_pay() {
        let mut desk = ServiceDesk::new(&plan(1, 0, 0, 0), &PRIORITY);
        let mut kernel = Kernel::new();
        occupy(&mut desk, 0, 100);
        let mut p = Fixed(0.5);
        desk.request(1, ServiceKind::Pay, false, &patience(), &mut kernel, &mut p)
            .unwrap();
        desk.request(
            2,
            ServiceKind::Refund,
            false,
            &patience(),
            &mut kernel,
            &mut p,
        )
        .unwrap();
        let horizon = crate::model::Horizon::new(1, 600.0).unwrap();
        desk.pool_mut().get_mut(0).release(1.0, &horizon).unwrap();
        let (kind, entry) = desk.on_staff_freed(0, &mut kernel).unwrap();
        assert_eq!((kind, entry.customer), (ServiceKind::Refund, 2));

        // and the order is configurable
        let mut desk =
            ServiceDesk::new(&plan(1, 0, 0, 0), &[ServiceKind::Pay, ServiceKind::Refund]);
        occupy(&mut desk, 0, 100);
        desk.request(1, ServiceKind::Pay, false, &patience(), &mut kernel, &mut p)
            .unwrap();
        desk.request(
            2,
            ServiceKind::Refund,
            false,
            &patience(),
            &mut kernel,
            &mut p,
        )
        .unwrap();
        desk.pool_mut().get_mut(0).release(1.0, &horizon).unwrap();
        assert_eq!(
            desk.on_staff_freed(0, &mut kernel).unwrap().0,
            ServiceKind::Pay
        );
    }

    #[test]
    fn help_prefers_normal_seller_and_respects_expertise() {
        let mut desk = ServiceDesk::new(&plan(1, 2, 1, 0), &PRIORITY);
        let mut kernel = Kernel::new();
        let mut p = Fixed(0.5);
        // ids: cashier 0, normal 1-2, expert 3
        assert_eq!(
            desk.request(
                1,
                ServiceKind::Help,
                false,
                &patience(),
                &mut kernel,
                &mut p
            )
            .unwrap(),
            Assignment::Assigned(1)
        );
        assert_eq!(
            desk.request(2, ServiceKind::Help, true, &patience(), &mut kernel, &mut p)
                .unwrap(),
            Assignment::Assigned(3)
        );
        occupy(&mut desk, 3, 2);
        assert!(matches!(
            desk.request(4, ServiceKind::Help, true, &patience(), &mut kernel, &mut p)
                .unwrap(),
            Assignment::Queued { .. }
        ));
        // an idle normal seller cannot take the expert-only customer
        assert!(desk.on_staff_freed(2, &mut kernel).is_none());
        assert!(desk.check(&kernel).is_ok());
    }

    #[test]
    fn refund_path_extremes_and_share() {
        let svc = TriangularParams::new(3.0, 6.0, 12.0).unwrap();
        let mut policy = EmpowermentPolicy {
            p_empowered: DecisionProb::ALWAYS,
            ..Default::default()
        };
        let mut d = rng_stream(3, "decisions");
        let mut s = rng_stream(3, "service");
        for _ in 0..1000 {
            assert!(matches!(
                resolve_refund_path(&policy, &svc, &mut d, &mut s),
                RefundPath::Autonomous { .. }
            ));
        }
        policy.p_empowered = DecisionProb::NEVER;
        for _ in 0..1000 {
            match resolve_refund_path(&policy, &svc, &mut d, &mut s) {
                RefundPath::ManagerAuthorized { overhead, .. } => {
                    assert!((1.0..=6.0).contains(&overhead))
                }
                other => panic!("{other:?}"),
            }
        }
        policy.p_empowered = DecisionProb::new(0.5).unwrap();
        let n = 100_000;
        let autonomous = (0..n)
            .filter(|_| {
                matches!(
                    resolve_refund_path(&policy, &svc, &mut d, &mut s),
                    RefundPath::Autonomous { .. }
                )
            })
            .count();
        let share = autonomous as f64 / n as f64;
        assert!((share - 0.5).abs() < 0.01, "{share}");
    }

    #[test]
    fn empowered_multiplier_scales_service() {
        let svc = TriangularParams::new(3.0, 6.0, 12.0).unwrap();
        let policy = EmpowermentPolicy {
            p_empowered: DecisionProb::ALWAYS,
            empowered_duration_multiplier: 2.0,
            ..Default::default()
        };
        let out = resolve_refund_path(&policy, &svc, &mut Fixed(0.0), &mut Fixed(0.0));
        assert_eq!(out, RefundPath::Autonomous { duration: 6.0 });
    }

    #[test]
    fn authorizations_queue_for_busy_manager() {
        let mut desk = ServiceDesk::new(&plan(2, 0, 0, 1), &PRIORITY);
        let mut kernel = Kernel::new();
        assert_eq!(
            desk.request_authorization(1, 3.0, &mut kernel).unwrap(),
            Some(2)
        );
        assert_eq!(
            desk.request_authorization(5, 2.0, &mut kernel).unwrap(),
            None
        );
        assert_eq!(desk.pending_authorizations(), 1);
        let horizon = crate::model::Horizon::new(1, 600.0).unwrap();
        desk.pool_mut().get_mut(2).release(3.0, &horizon).unwrap();
        assert_eq!(desk.on_manager_freed(2, &mut kernel).unwrap(), Some(5));
        assert_eq!(desk.pending_authorizations(), 0);
    }
}
