//! One replication of a department: arrivals, customer statecharts, service
//! desk and day boundaries wired onto a single kernel.

use std::collections::BTreeMap;

use crate::agents::{
    advance_customer, apply_satisfaction_event, begin_service, spawn_customer, Action,
    CustomerAgent, CustomerRules, CustomerState, EventKind, RefundStage, SatisfactionEvent,
    SatisfactionLedger, ServiceKind, StaffRole, Trigger,
};
use crate::error::{ModelFault, RunFailure};
use crate::kernel::{AgentId, Fired, Kernel, Minutes, RngStream, RunError};
use crate::model::metrics::utilization;
use crate::model::{DepartmentConfig, RunMetrics, StaffingPlan};
use crate::queueing::{resolve_refund_path, Assignment, RefundPath, ServiceDesk};
use crate::stochastic::{sample_interarrival, sample_triangular};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Verify conservation and queueing invariants after every event.
    pub check_invariants: bool,
    /// Keep the full dispatch trace.
    pub trace: bool,
    /// Fixed arrival instants replacing the Poisson stream; each must fall
    /// inside trading hours.
    pub scripted_arrivals: Option<Vec<Minutes>>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub ledger: SatisfactionLedger,
    pub trace: Option<Vec<Fired<EventKind>>>,
    pub events_dispatched: u64,
}

/// Runs one replication and returns its metrics.
pub fn run_replication(
    config: &DepartmentConfig,
    staffing: &StaffingPlan,
    seed: u64,
) -> Result<RunMetrics, RunFailure> {
    run_replication_with(config, staffing, seed, RunOptions::default()).map(|o| o.metrics)
}

pub fn run_replication_with(
    config: &DepartmentConfig,
    staffing: &StaffingPlan,
    seed: u64,
    options: RunOptions,
) -> Result<RunOutput, RunFailure> {
    if config.empowerment.p_empowered.value() < 1.0 && staffing.section_managers == 0 {
        return Err(RunFailure::Setup(
            "refunds need manager authorization but staffing has no section manager".into(),
        ));
    }
    let mut kernel = Kernel::new();
    if options.trace {
        kernel = kernel.with_trace();
    }
    let mut rep = Replication::new(config, staffing, seed, options.check_invariants);
    let horizon = config.horizon;
    for day in 0..horizon.days() {
        kernel.schedule(horizon.open_at(day), EventKind::DayOpen, day as AgentId)?;
    }
    if let Some(times) = &options.scripted_arrivals {
        for &t in times {
            if !horizon.is_trading(t) {
                return Err(RunFailure::Setup(format!(
                    "scripted arrival at {t} is outside trading hours"
                )));
            }
            kernel.schedule(t, EventKind::Arrival, 0)?;
        }
        rep.scripted = true;
    }

    let lift = |e: RunError<ModelFault>| match e {
        RunError::Kernel(k) => RunFailure::Kernel(k),
        RunError::Dispatch(d) => RunFailure::Fault(d),
    };
    kernel
        .run_until(horizon.end(), |k, ev| rep.dispatch(k, ev))
        .map_err(lift)?;
    // services that straddle the last close
    while let Some(t) = kernel.next_time() {
        kernel
            .run_until(t, |k, ev| rep.dispatch(k, ev))
            .map_err(lift)?;
    }

    let metrics = rep.finish(&kernel)?;
    Ok(RunOutput {
        metrics,
        events_dispatched: kernel.dispatched(),
        trace: kernel.take_trace(),
        ledger: rep.ledger,
    })
}

struct Streams {
    arrivals: RngStream,
    decisions: RngStream,
    service: RngStream,
    patience: RngStream,
}

struct Replication<'a> {
    config: &'a DepartmentConfig,
    rules: CustomerRules,
    desk: ServiceDesk,
    customers: BTreeMap<AgentId, CustomerAgent>,
    streams: Streams,
    ledger: SatisfactionLedger,
    metrics: RunMetrics,
    next_customer: AgentId,
    open: bool,
    closes_at: f64,
    check: bool,
    scripted: bool,
}

impl<'a> Replication<'a> {
    fn new(config: &'a DepartmentConfig, staffing: &StaffingPlan, seed: u64, check: bool) -> Self {
        Self {
            config,
            rules: config.customer_rules(),
            desk: ServiceDesk::new(staffing, &config.cashier_priority),
            customers: BTreeMap::new(),
            streams: Streams {
                arrivals: RngStream::new(seed, "arrivals"),
                decisions: RngStream::new(seed, "decisions"),
                service: RngStream::new(seed, "service"),
                patience: RngStream::new(seed, "patience"),
            },
            ledger: SatisfactionLedger::default(),
            metrics: RunMetrics::default(),
            next_customer: 0,
            open: false,
            closes_at: 0.0,
            check,
            scripted: false,
        }
    }

    fn dispatch(
        &mut self,
        k: &mut Kernel<EventKind>,
        ev: Fired<EventKind>,
    ) -> Result<(), ModelFault> {
        match ev.kind {
            EventKind::DayOpen => self.open_day(k, ev.target as u32)?,
            EventKind::DayClose => self.close_day(k)?,
            EventKind::Arrival => self.arrival(k)?,
            EventKind::BrowseExit => {
                self.customer(ev.target)?.browse_timer = None;
                self.fire(k, ev.target, Trigger::BrowseExit)?;
            }
            EventKind::ServiceDone => self.service_done(k, ev.target)?,
            EventKind::AuthorizationDone => self.authorization_done(k, ev.target)?,
            EventKind::Renege => self.renege(k, ev.target)?,
        }
        if self.check {
            self.check_invariants(k)?;
        }
        Ok(())
    }

    fn customer(&mut self, id: AgentId) -> Result<&mut CustomerAgent, ModelFault> {
        self.customers
            .get_mut(&id)
            .ok_or(ModelFault::UnknownCustomer(id))
    }

    fn open_day(&mut self, k: &mut Kernel<EventKind>, day: u32) -> Result<(), ModelFault> {
        self.open = true;
        self.closes_at = self.config.horizon.close_at(day);
        k.schedule(self.closes_at, EventKind::DayClose, day as AgentId)?;
        if self.scripted {
            return Ok(());
        }
        self.schedule_next_arrival(k)
    }

    fn schedule_next_arrival(&mut self, k: &mut Kernel<EventKind>) -> Result<(), ModelFault> {
        let u = self.streams.arrivals.uniform();
        if let Some(gap) = sample_interarrival(&self.config.arrivals, u) {
            let at = k.now() + gap;
            if at < self.closes_at {
                k.schedule(at, EventKind::Arrival, 0)?;
            }
        }
        Ok(())
    }

    fn arrival(&mut self, k: &mut Kernel<EventKind>) -> Result<(), ModelFault> {
        let id = self.next_customer;
        self.next_customer += 1;
        let c = spawn_customer(id, k.now(), &self.rules, &mut self.streams.decisions);
        self.customers.insert(id, c);
        self.metrics.customers_entered += 1;
        self.fire(k, id, Trigger::Enter)?;
        if self.scripted {
            return Ok(());
        }
        self.schedule_next_arrival(k)
    }

    fn close_day(&mut self, k: &mut Kernel<EventKind>) -> Result<(), ModelFault> {
        self.open = false;
        let ids: Vec<AgentId> = self.customers.keys().copied().collect();
        for id in ids {
            let c = self.customer(id)?;
            match c.state {
                CustomerState::Browsing => {
                    if let Some(h) = c.browse_timer.take() {
                        k.cancel(&h);
                    }
                }
                state => {
                    if let Some(kind) = state.queue() {
                        self.desk.withdraw(id, kind, k);
                    } else {
                        continue;
                    }
                }
            }
            self.fire(k, id, Trigger::StoreClosed)?;
        }
        Ok(())
    }

    /// Applies a trigger and carries out the resulting actions.
    fn fire(
        &mut self,
        k: &mut Kernel<EventKind>,
        id: AgentId,
        trigger: Trigger,
    ) -> Result<(), ModelFault> {
        let open = self.open;
        let c = self
            .customers
            .get_mut(&id)
            .ok_or(ModelFault::UnknownCustomer(id))?;
        let actions = advance_customer(
            c,
            trigger,
            &self.rules,
            open,
            &mut self.streams.decisions,
            &mut self.streams.service,
        )?;
        for action in actions {
            self.perform(k, id, action)?;
        }
        Ok(())
    }

    fn perform(
        &mut self,
        k: &mut Kernel<EventKind>,
        id: AgentId,
        action: Action,
    ) -> Result<(), ModelFault> {
        match action {
            Action::ScheduleBrowseExit(after) => {
                let h = k.schedule_in(after, EventKind::BrowseExit, id)?;
                self.customer(id)?.browse_timer = Some(h);
            }
            Action::Request(kind) => {
                let expert_only = kind == ServiceKind::Help && self.customer(id)?.needs_expert;
                let patience = *self.config.patience.for_queue(kind);
                match self.desk.request(
                    id,
                    kind,
                    expert_only,
                    &patience,
                    k,
                    &mut self.streams.patience,
                )? {
                    Assignment::Assigned(staff) => {
                        self.fire(k, id, Trigger::Assigned)?;
                        self.start_service(k, id, kind, staff)?;
                    }
                    Assignment::Queued { renege_at } => {
                        self.customer(id)?.patience_deadline = Some(renege_at);
                        self.fire(k, id, Trigger::Queued)?;
                    }
                }
            }
            Action::Satisfaction(event) => {
                let weights = self.config.satisfaction_weights;
                let c = self
                    .customers
                    .get_mut(&id)
                    .ok_or(ModelFault::UnknownCustomer(id))?;
                apply_satisfaction_event(c, event, &weights, &mut self.ledger);
                let m = &mut self.metrics;
                if event.is_refund_related() {
                    m.refund_satisfaction += weights.weight(event);
                }
                match event {
                    SatisfactionEvent::PurchaseCompleted => m.transactions += 1,
                    SatisfactionEvent::RefundGranted => m.refunds_granted += 1,
                    SatisfactionEvent::HelpQueueAbandoned => m.help_abandoned += 1,
                    SatisfactionEvent::PayQueueAbandoned => m.pay_abandoned += 1,
                    SatisfactionEvent::RefundQueueAbandoned => m.refund_abandoned += 1,
                    SatisfactionEvent::HelpReceived | SatisfactionEvent::LeftWithoutPurchase => {}
                }
            }
            Action::Depart => {
                let c = self
                    .customers
                    .remove(&id)
                    .ok_or(ModelFault::UnknownCustomer(id))?;
                let m = &mut self.metrics;
                m.customers_left += 1;
                if c.purchased {
                    m.purchasing_departures += 1;
                } else {
                    m.non_purchase_departures += 1;
                }
                if c.satisfaction() > 0 {
                    m.satisfied_customers += 1;
                }
                m.overall_satisfaction += c.satisfaction();
            }
        }
        Ok(())
    }

    fn start_service(
        &mut self,
        k: &mut Kernel<EventKind>,
        id: AgentId,
        kind: ServiceKind,
        staff: usize,
    ) -> Result<(), ModelFault> {
        let durations = &self.config.durations;
        let (duration, stage) = match kind {
            ServiceKind::Help => (
                sample_triangular(&durations.help, self.streams.service.uniform()),
                None,
            ),
            ServiceKind::Pay => (
                sample_triangular(&durations.pay_service, self.streams.service.uniform()),
                None,
            ),
            ServiceKind::Refund => {
                let path = resolve_refund_path(
                    &self.config.empowerment,
                    &durations.refund_service,
                    &mut self.streams.decisions,
                    &mut self.streams.service,
                );
                match path {
                    RefundPath::Autonomous { duration } => (
                        duration,
                        Some(RefundStage::Processing {
                            then_authorize: None,
                        }),
                    ),
                    RefundPath::ManagerAuthorized { service, overhead } => {
                        if self.config.empowerment.hold_cashier_during_referral {
                            let now = k.now();
                            self.desk.pool_mut().get_mut(staff).seize(id, now)?;
                            let c = self.customer(id)?;
                            c.server = Some(staff);
                            c.refund_stage = Some(RefundStage::Authorizing {
                                then_service: Some(service),
                            });
                            self.desk.request_authorization(id, overhead, k)?;
                            return Ok(());
                        }
                        (
                            service,
                            Some(RefundStage::Processing {
                                then_authorize: Some(overhead),
                            }),
                        )
                    }
                }
            }
        };
        let c = self
            .customers
            .get_mut(&id)
            .ok_or(ModelFault::UnknownCustomer(id))?;
        begin_service(
            self.desk.pool_mut().get_mut(staff),
            c,
            duration,
            EventKind::ServiceDone,
            k,
        )?;
        c.server = Some(staff);
        c.refund_stage = stage;
        Ok(())
    }

    /// Releases `staff` and hands them the next compatible waiting customer.
    fn free_staff(&mut self, k: &mut Kernel<EventKind>, staff: usize) -> Result<(), ModelFault> {
        let horizon = self.config.horizon;
        self.desk
            .pool_mut()
            .get_mut(staff)
            .release(k.now(), &horizon)?;
        if self.desk.pool().get(staff).role == StaffRole::SectionManager {
            self.desk.on_manager_freed(staff, k)?;
        } else if let Some((kind, entry)) = self.desk.on_staff_freed(staff, k) {
            self.fire(k, entry.customer, Trigger::Assigned)?;
            self.start_service(k, entry.customer, kind, staff)?;
        }
        Ok(())
    }

    fn service_done(&mut self, k: &mut Kernel<EventKind>, id: AgentId) -> Result<(), ModelFault> {
        let c = self.customer(id)?;
        let staff = c.server.take().ok_or(ModelFault::Invariant {
            clock: k.now(),
            message: format!("customer {id} finished service without a server"),
        })?;
        if let Some(RefundStage::Processing {
            then_authorize: Some(overhead),
        }) = c.refund_stage
        {
            // cashier released; the customer still needs a manager sign-off
            c.refund_stage = Some(RefundStage::Authorizing { then_service: None });
            self.free_staff(k, staff)?;
            self.desk.request_authorization(id, overhead, k)?;
            return Ok(());
        }
        self.free_staff(k, staff)?;
        self.fire(k, id, Trigger::ServiceDone)
    }

    fn authorization_done(
        &mut self,
        k: &mut Kernel<EventKind>,
        id: AgentId,
    ) -> Result<(), ModelFault> {
        let manager = self
            .desk
            .pool()
            .iter()
            .find(|s| s.role == StaffRole::SectionManager && s.serving() == Some(id))
            .map(|s| s.id)
            .ok_or(ModelFault::Invariant {
                clock: k.now(),
                message: format!("authorization for customer {id} without a manager"),
            })?;
        self.metrics.manager_authorizations += 1;
        self.free_staff(k, manager)?;
        let c = self.customer(id)?;
        match c.refund_stage {
            Some(RefundStage::Authorizing {
                then_service: Some(service),
            }) => {
                c.refund_stage = Some(RefundStage::Processing {
                    then_authorize: None,
                });
                k.schedule_in(service, EventKind::ServiceDone, id)?;
                Ok(())
            }
            Some(RefundStage::Authorizing { then_service: None }) => {
                c.refund_stage = None;
                self.fire(k, id, Trigger::ServiceDone)
            }
            other => Err(ModelFault::Invariant {
                clock: k.now(),
                message: format!(
                    "authorization finished for customer {id} in refund stage {other:?}"
                ),
            }),
        }
    }

    fn renege(&mut self, k: &mut Kernel<EventKind>, id: AgentId) -> Result<(), ModelFault> {
        let state = self.customer(id)?.state;
        let kind = state.queue().ok_or(ModelFault::IllegalTransition {
            customer: id,
            state,
            trigger: Trigger::Renege,
        })?;
        self.desk.renege(id, kind);
        self.fire(k, id, Trigger::Renege)
    }

    fn check_invariants(&self, k: &Kernel<EventKind>) -> Result<(), ModelFault> {
        let fail = |message: String| ModelFault::Invariant {
            clock: k.now(),
            message,
        };
        let m = &self.metrics;
        if m.customers_entered != m.customers_left + self.customers.len() as u64 {
            return Err(fail(format!(
                "conservation: entered {} != left {} + in system {}",
                m.customers_entered,
                m.customers_left,
                self.customers.len()
            )));
        }
        self.desk.check(k).map_err(fail)?;
        let listed: std::collections::HashSet<(ServiceKind, AgentId)> =
            [ServiceKind::Help, ServiceKind::Pay, ServiceKind::Refund]
                .into_iter()
                .flat_map(|kind| {
                    self.desk
                        .queue(kind)
                        .entries()
                        .map(move |e| (kind, e.customer))
                })
                .collect();
        let mut queued = 0;
        for c in self.customers.values() {
            if let Some(kind) = c.state.queue() {
                queued += 1;
                if !listed.contains(&(kind, c.id)) {
                    return Err(fail(format!(
                        "customer {} in {:?} but not queued",
                        c.id, c.state
                    )));
                }
            }
            if c.state == CustomerState::Leaving || c.state == CustomerState::Entering {
                return Err(fail(format!(
                    "customer {} lingering in {:?}",
                    c.id, c.state
                )));
            }
        }
        if queued != self.desk.occupancy() {
            return Err(fail(format!(
                "renege timers {} != queue occupancy {}",
                self.desk.occupancy(),
                queued
            )));
        }
        let elapsed = self.config.horizon.trading_elapsed(k.now());
        for s in self.desk.pool().iter() {
            if s.busy_minutes() > elapsed + 1e-6 {
                return Err(fail(format!(
                    "staff {} busy beyond elapsed trading time",
                    s.id
                )));
            }
        }
        let in_system: i64 = self.customers.values().map(|c| c.satisfaction()).sum();
        if self.ledger.running_total() != m.overall_satisfaction + in_system {
            return Err(fail("satisfaction ledger out of balance".into()));
        }
        Ok(())
    }

    fn finish(&self, k: &Kernel<EventKind>) -> Result<RunMetrics, RunFailure> {
        let fail = |message: String| {
            RunFailure::Fault(crate::kernel::DispatchError {
                clock: k.now(),
                kind: "EndOfRun".into(),
                target: 0,
                source: ModelFault::Invariant {
                    clock: k.now(),
                    message,
                },
            })
        };
        if !self.customers.is_empty() {
            return Err(fail(format!(
                "{} customers never left",
                self.customers.len()
            )));
        }
        if let Some(s) = self.desk.pool().iter().find(|s| s.is_busy()) {
            return Err(fail(format!("staff {} still busy at end of run", s.id)));
        }
        let horizon = self.config.horizon;
        let staff = || self.desk.pool().iter();
        let mut metrics = self.metrics.clone();
        metrics.cashier_utilization = utilization(staff(), &[StaffRole::Cashier], &horizon);
        metrics.seller_utilization = utilization(
            staff(),
            &[StaffRole::NormalSeller, StaffRole::ExpertSeller],
            &horizon,
        );
        metrics.manager_utilization = utilization(staff(), &[StaffRole::SectionManager], &horizon);
        if metrics.overall_satisfaction != self.ledger.total()
            || self.ledger.total() != self.ledger.running_total()
        {
            return Err(fail("overall satisfaction differs from ledger".into()));
        }
        Ok(metrics)
    }
}
