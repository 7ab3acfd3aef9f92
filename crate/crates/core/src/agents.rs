//! Customer statechart and passive staff agents.
//!
//! Customers are the active component: [`advance_customer`] moves a customer
//! along the transition table and returns the [`Action`]s the surrounding
//! model must carry out (schedule a timer, request service, record a
//! satisfaction event, depart). Staff only react to service requests.

use serde::{Deserialize, Serialize};

use crate::error::ModelFault;
use crate::kernel::{AgentId, EventHandle, Kernel, Minutes, UniformSource};
use crate::model::Horizon;
use crate::stochastic::{sample_bernoulli, sample_triangular, DecisionProb, TriangularParams};

/// Kinds of events on the run's calendar. The target is always a customer id,
/// except for the day-boundary events which target the day index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    DayOpen,
    DayClose,
    Arrival,
    BrowseExit,
    ServiceDone,
    AuthorizationDone,
    Renege,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceKind {
    Help,
    Pay,
    Refund,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CustomerState {
    Entering,
    Browsing,
    SeekingHelp,
    InHelpQueue,
    BeingHelped,
    SeekingPay,
    InPayQueue,
    Paying,
    SeekingRefund,
    InRefundQueue,
    RefundProcessing,
    Leaving,
}

impl CustomerState {
    pub fn queue(self) -> Option<ServiceKind> {
        match self {
            CustomerState::InHelpQueue => Some(ServiceKind::Help),
            CustomerState::InPayQueue => Some(ServiceKind::Pay),
            CustomerState::InRefundQueue => Some(ServiceKind::Refund),
            _ => None,
        }
    }

    pub fn in_service(self) -> Option<ServiceKind> {
        match self {
            CustomerState::BeingHelped => Some(ServiceKind::Help),
            CustomerState::Paying => Some(ServiceKind::Pay),
            CustomerState::RefundProcessing => Some(ServiceKind::Refund),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trigger {
    Enter,
    BrowseExit,
    Assigned,
    Queued,
    ServiceDone,
    Renege,
    StoreClosed,
}

/// Triggers accepted in each state; everything else is a model fault.
pub fn legal_triggers(state: CustomerState) -> &'static [Trigger] {
    use CustomerState::*;
    use Trigger::*;
    match state {
        Entering => &[Enter],
        Browsing => &[BrowseExit, StoreClosed],
        SeekingHelp | SeekingPay | SeekingRefund => &[Assigned, Queued],
        InHelpQueue | InPayQueue | InRefundQueue => &[Assigned, Renege, StoreClosed],
        BeingHelped | Paying | RefundProcessing => &[ServiceDone, StoreClosed],
        Leaving => &[],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Goal {
    Purchase,
    Refund,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SatisfactionEvent {
    PurchaseCompleted,
    HelpReceived,
    HelpQueueAbandoned,
    PayQueueAbandoned,
    RefundGranted,
    RefundQueueAbandoned,
    LeftWithoutPurchase,
}

impl SatisfactionEvent {
    pub const ALL: [SatisfactionEvent; 7] = [
        SatisfactionEvent::PurchaseCompleted,
        SatisfactionEvent::HelpReceived,
        SatisfactionEvent::HelpQueueAbandoned,
        SatisfactionEvent::PayQueueAbandoned,
        SatisfactionEvent::RefundGranted,
        SatisfactionEvent::RefundQueueAbandoned,
        SatisfactionEvent::LeftWithoutPurchase,
    ];

    pub fn is_refund_related(self) -> bool {
        matches!(
            self,
            SatisfactionEvent::RefundGranted | SatisfactionEvent::RefundQueueAbandoned
        )
    }

    pub fn key(self) -> &'static str {
        match self {
            SatisfactionEvent::PurchaseCompleted => "purchase_completed",
            SatisfactionEvent::HelpReceived => "help_received",
            SatisfactionEvent::HelpQueueAbandoned => "help_queue_abandoned",
            SatisfactionEvent::PayQueueAbandoned => "pay_queue_abandoned",
            SatisfactionEvent::RefundGranted => "refund_granted",
            SatisfactionEvent::RefundQueueAbandoned => "refund_queue_abandoned",
            SatisfactionEvent::LeftWithoutPurchase => "left_without_purchase",
        }
    }
}

/// Integer weight per satisfaction event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatisfactionWeights {
    pub purchase_completed: i64,
    pub help_received: i64,
    pub help_queue_abandoned: i64,
    pub pay_queue_abandoned: i64,
    pub refund_granted: i64,
    pub refund_queue_abandoned: i64,
    pub left_without_purchase: i64,
}

impl Default for SatisfactionWeights {
    fn default() -> Self {
        Self {
            purchase_completed: 2,
            help_received: 1,
            help_queue_abandoned: -2,
            pay_queue_abandoned: -3,
            refund_granted: 2,
            refund_queue_abandoned: -4,
            left_without_purchase: 0,
        }
    }
}

impl SatisfactionWeights {
    pub fn weight(&self, kind: SatisfactionEvent) -> i64 {
        match kind {
            SatisfactionEvent::PurchaseCompleted => self.purchase_completed,
            SatisfactionEvent::HelpReceived => self.help_received,
            SatisfactionEvent::HelpQueueAbandoned => self.help_queue_abandoned,
            SatisfactionEvent::PayQueueAbandoned => self.pay_queue_abandoned,
            SatisfactionEvent::RefundGranted => self.refund_granted,
            SatisfactionEvent::RefundQueueAbandoned => self.refund_queue_abandoned,
            SatisfactionEvent::LeftWithoutPurchase => self.left_without_purchase,
        }
    }

    pub fn set(&mut self, kind: SatisfactionEvent, weight: i64) {
        let slot = match kind {
            SatisfactionEvent::PurchaseCompleted => &mut self.purchase_completed,
            SatisfactionEvent::HelpReceived => &mut self.help_received,
            SatisfactionEvent::HelpQueueAbandoned => &mut self.help_queue_abandoned,
            SatisfactionEvent::PayQueueAbandoned => &mut self.pay_queue_abandoned,
            SatisfactionEvent::RefundGranted => &mut self.refund_granted,
            SatisfactionEvent::RefundQueueAbandoned => &mut self.refund_queue_abandoned,
            SatisfactionEvent::LeftWithoutPurchase => &mut self.left_without_purchase,
        };
        *slot = weight;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerEntry {
    pub customer: AgentId,
    pub kind: SatisfactionEvent,
    pub weight: i64,
}

/// Every satisfaction event applied during a run, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SatisfactionLedger {
    entries: Vec<LedgerEntry>,
    running: i64,
}

impl SatisfactionLedger {
    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Sum of every entry, recomputed.
    pub fn total(&self) -> i64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// Sum kept as entries are appended; cheap enough to check per event.
    pub fn running_total(&self) -> i64 {
        self.running
    }

    pub fn count(&self, kind: SatisfactionEvent) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }
}

/// Where a refund currently stands while the customer is at the till.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefundStage {
    /// Cashier is processing; `then_authorize` is the manager overhead owed
    /// afterwards, if the cashier is released before authorization.
    Processing { then_authorize: Option<Minutes> },
    /// Waiting for (or receiving) manager authorization; `then_service` is the
    /// cashier time still owed afterwards, if any.
    Authorizing { then_service: Option<Minutes> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomerAgent {
    pub id: AgentId,
    pub goal: Goal,
    pub state: CustomerState,
    satisfaction: i64,
    pub patience_deadline: Option<Minutes>,
    pub entry_time: Minutes,
    pub needs_expert: bool,
    pub purchased: bool,
    pub repurchased: bool,
    pub server: Option<usize>,
    pub refund_stage: Option<RefundStage>,
    pub browse_timer: Option<EventHandle<EventKind>>,
}

impl CustomerAgent {
    pub fn new(id: AgentId, goal: Goal, entry_time: Minutes) -> Self {
        Self {
            id,
            goal,
            state: CustomerState::Entering,
            satisfaction: 0,
            patience_deadline: None,
            entry_time,
            needs_expert: false,
            purchased: false,
            repurchased: false,
            server: None,
            refund_stage: None,
            browse_timer: None,
        }
    }

    pub fn satisfaction(&self) -> i64 {
        self.satisfaction
    }
}

/// Behavioural parameters a customer consults at decision points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomerRules {
    pub browse: TriangularParams,
    pub p_need_help: DecisionProb,
    /// Probability of buying unassisted, conditional on not seeking help.
    pub p_buy_unassisted: DecisionProb,
    pub p_buy_after_help: DecisionProb,
    pub p_refund_goal: DecisionProb,
    pub p_repurchase_after_refund: DecisionProb,
    pub p_needs_expert: DecisionProb,
}

pub fn spawn_customer(
    id: AgentId,
    now: Minutes,
    rules: &CustomerRules,
    decisions: &mut impl UniformSource,
) -> CustomerAgent {
    let goal = if sample_bernoulli(rules.p_refund_goal, decisions.next_uniform()) {
        Goal::Refund
    } else {
        Goal::Purchase
    };
    CustomerAgent::new(id, goal, now)
}

/// Work the model must perform after a transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    ScheduleBrowseExit(Minutes),
    Request(ServiceKind),
    Satisfaction(SatisfactionEvent),
    Depart,
}

fn leave(c: &mut CustomerAgent, event: Option<SatisfactionEvent>) -> Vec<Action> {
    c.state = CustomerState::Leaving;
    match event {
        Some(e) => vec![Action::Satisfaction(e), Action::Depart],
        None => vec![Action::Depart],
    }
}

/// Applies `trigger` to the customer's statechart.
///
/// `store_open` is false once the trading day has closed: customers finishing
/// a service then leave instead of continuing their visit.
pub fn advance_customer(
    c: &mut CustomerAgent,
    trigger: Trigger,
    rules: &CustomerRules,
    store_open: bool,
    decisions: &mut impl UniformSource,
    durations: &mut impl UniformSource,
) -> Result<Vec<Action>, ModelFault> {
    use CustomerState as S;
    let illegal = |c: &CustomerAgent| ModelFault::IllegalTransition {
        customer: c.id,
        state: c.state,
        trigger,
    };
    let actions = match (c.state, trigger) {
        (S::Entering, Trigger::Enter) => match c.goal {
            Goal::Purchase => {
                c.state = S::Browsing;
                vec![Action::ScheduleBrowseExit(sample_triangular(
                    &rules.browse,
                    durations.next_uniform(),
                ))]
            }
            Goal::Refund => {
                c.state = S::SeekingRefund;
                vec![Action::Request(ServiceKind::Refund)]
            }
        },
        (S::Browsing, Trigger::BrowseExit) => {
            if sample_bernoulli(rules.p_need_help, decisions.next_uniform()) {
                c.needs_expert = sample_bernoulli(rules.p_needs_expert, decisions.next_uniform());
                c.state = S::SeekingHelp;
                vec![Action::Request(ServiceKind::Help)]
            } else if sample_bernoulli(rules.p_buy_unassisted, decisions.next_uniform()) {
                c.state = S::SeekingPay;
                vec![Action::Request(ServiceKind::Pay)]
            } else {
                leave(c, Some(SatisfactionEvent::LeftWithoutPurchase))
            }
        }
        (S::SeekingHelp, Trigger::Assigned) | (S::InHelpQueue, Trigger::Assigned) => {
            c.state = S::BeingHelped;
            c.patience_deadline = None;
            vec![]
        }
        (S::SeekingPay, Trigger::Assigned) | (S::InPayQueue, Trigger::Assigned) => {
            c.state = S::Paying;
            c.patience_deadline = None;
            vec![]
        }
        (S::SeekingRefund, Trigger::Assigned) | (S::InRefundQueue, Trigger::Assigned) => {
            c.state = S::RefundProcessing;
            c.patience_deadline = None;
            vec![]
        }
        (S::SeekingHelp, Trigger::Queued) => {
            c.state = S::InHelpQueue;
            vec![]
        }
        (S::SeekingPay, Trigger::Queued) => {
            c.state = S::InPayQueue;
            vec![]
        }
        (S::SeekingRefund, Trigger::Queued) => {
            c.state = S::InRefundQueue;
            vec![]
        }
        (S::BeingHelped, Trigger::ServiceDone) => {
            c.server = None;
            let mut out = vec![Action::Satisfaction(SatisfactionEvent::HelpReceived)];
            if !store_open {
                out.extend(leave(c, None));
            } else if sample_bernoulli(rules.p_buy_after_help, decisions.next_uniform()) {
                c.state = S::SeekingPay;
                out.push(Action::Request(ServiceKind::Pay));
            } else {
                out.extend(leave(c, Some(SatisfactionEvent::LeftWithoutPurchase)));
            }
            out
        }
        (S::Paying, Trigger::ServiceDone) => {
            c.server = None;
            c.purchased = true;
            leave(c, Some(SatisfactionEvent::PurchaseCompleted))
        }
        (S::RefundProcessing, Trigger::ServiceDone) => {
            c.server = None;
            c.refund_stage = None;
            let mut out = vec![Action::Satisfaction(SatisfactionEvent::RefundGranted)];
            if store_open
                && sample_bernoulli(rules.p_repurchase_after_refund, decisions.next_uniform())
            {
                c.goal = Goal::Purchase;
                c.repurchased = true;
                c.state = S::Browsing;
                out.push(Action::ScheduleBrowseExit(sample_triangular(
                    &rules.browse,
                    durations.next_uniform(),
                )));
            } else {
                out.extend(leave(c, None));
            }
            out
        }
        (S::InHelpQueue, Trigger::Renege) => leave(c, Some(SatisfactionEvent::HelpQueueAbandoned)),
        (S::InPayQueue, Trigger::Renege) => leave(c, Some(SatisfactionEvent::PayQueueAbandoned)),
        (S::InRefundQueue, Trigger::Renege) => {
            leave(c, Some(SatisfactionEvent::RefundQueueAbandoned))
        }
        (S::Browsing, Trigger::StoreClosed)
        | (S::InHelpQueue, Trigger::StoreClosed)
        | (S::InPayQueue, Trigger::StoreClosed)
        | (S::InRefundQueue, Trigger::StoreClosed) => {
            c.patience_deadline = None;
            leave(c, None)
        }
        // In-progress services run to completion after closing.
        (S::BeingHelped, Trigger::StoreClosed)
        | (S::Paying, Trigger::StoreClosed)
        | (S::RefundProcessing, Trigger::StoreClosed) => vec![],
        _ => return Err(illegal(c)),
    };
    Ok(actions)
}

/// Adds the event's weight to the customer's index and records it.
pub fn apply_satisfaction_event(
    c: &mut CustomerAgent,
    kind: SatisfactionEvent,
    weights: &SatisfactionWeights,
    ledger: &mut SatisfactionLedger,
) -> i64 {
    let weight = weights.weight(kind);
    c.satisfaction += weight;
    ledger.running += weight;
    ledger.entries.push(LedgerEntry {
        customer: c.id,
        kind,
        weight,
    });
    c.satisfaction
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaffRole {
    Cashier,
    NormalSeller,
    ExpertSeller,
    SectionManager,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaffAgent {
    pub id: usize,
    pub role: StaffRole,
    busy_since: Option<Minutes>,
    serving: Option<AgentId>,
    busy_minutes: Minutes,
}

impl StaffAgent {
    pub fn new(id: usize, role: StaffRole) -> Self {
        Self {
            id,
            role,
            busy_since: None,
            serving: None,
            busy_minutes: 0.0,
        }
    }

    pub fn is_busy(&self) -> bool {
        self.serving.is_some()
    }

    pub fn serving(&self) -> Option<AgentId> {
        self.serving
    }

    /// Busy time accrued so far, counting trading hours only.
    pub fn busy_minutes(&self) -> Minutes {
        self.busy_minutes
    }

    /// Marks the staff member busy with `customer` without scheduling a completion.
    pub fn seize(&mut self, customer: AgentId, now: Minutes) -> Result<(), ModelFault> {
        if self.serving.is_some() {
            return Err(ModelFault::StaffBusy {
                staff: self.id,
                role: self.role,
                customer,
            });
        }
        self.serving = Some(customer);
        self.busy_since = Some(now);
        Ok(())
    }

    /// Frees the staff member and accrues the busy interval, clipped to trading hours.
    pub fn release(&mut self, now: Minutes, horizon: &Horizon) -> Result<AgentId, ModelFault> {
        let customer = self.serving.take().ok_or(ModelFault::StaffIdle(self.id))?;
        let since = self.busy_since.take().unwrap_or(now);
        self.busy_minutes += horizon.trading_overlap(since, now);
        Ok(customer)
    }
}

/// Seizes `staff` for `customer` and schedules the completion `duration` from now.
pub fn begin_service(
    staff: &mut StaffAgent,
    customer: &CustomerAgent,
    duration: Minutes,
    completion: EventKind,
    kernel: &mut Kernel<EventKind>,
) -> Result<EventHandle<EventKind>, ModelFault> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(ModelFault::BadDuration(duration));
    }
    staff.seize(customer.id, kernel.now())?;
    Ok(kernel.schedule_in(duration, completion, customer.id)?)
}
