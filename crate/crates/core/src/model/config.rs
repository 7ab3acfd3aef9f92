//! Department configuration: TOML loading, defaults and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{CustomerRules, SatisfactionEvent, SatisfactionWeights, ServiceKind};
use crate::error::ConfigError;
use crate::kernel::Minutes;
use crate::queueing::EmpowermentPolicy;
use crate::stochastic::{ArrivalProfile, DecisionProb, ParamError, TriangularParams};

/// Minutes in a calendar day. Trading hours occupy the start of each day.
pub const DAY_CYCLE_MINUTES: Minutes = 1440.0;

pub const SHIPPED_ATV: &str = include_str!("../../../../configs/dept_atv.toml");
pub const SHIPPED_WW: &str = include_str!("../../../../configs/dept_ww.toml");

/// Run length: `days` trading days of `trading_day_minutes` each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    days: u32,
    trading_day_minutes: Minutes,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HorizonError {
    #[error("horizon must be ≥ 1 day")]
    NoDays,
    #[error("trading day must be in (0, 1440) minutes, got {0}")]
    DayLength(f64),
}

impl Horizon {
    pub fn new(days: u32, trading_day_minutes: Minutes) -> Result<Self, HorizonError> {
        if days == 0 {
            return Err(HorizonError::NoDays);
        }
        if !(trading_day_minutes > 0.0 && trading_day_minutes < DAY_CYCLE_MINUTES) {
            return Err(HorizonError::DayLength(trading_day_minutes));
        }
        Ok(Self {
            days,
            trading_day_minutes,
        })
    }

    pub fn weeks(weeks: u32, trading_day_minutes: Minutes) -> Result<Self, HorizonError> {
        Self::new(weeks * 7, trading_day_minutes)
    }

    pub fn days(&self) -> u32 {
        self.days
    }

    pub fn trading_day_minutes(&self) -> Minutes {
        self.trading_day_minutes
    }

    pub fn open_at(&self, day: u32) -> Minutes {
        day as f64 * DAY_CYCLE_MINUTES
    }

    pub fn close_at(&self, day: u32) -> Minutes {
        self.open_at(day) + self.trading_day_minutes
    }

    /// End of the last calendar day.
    pub fn end(&self) -> Minutes {
        self.days as f64 * DAY_CYCLE_MINUTES
    }

    /// Total trading minutes over the run.
    pub fn trading_minutes(&self) -> Minutes {
        self.days as f64 * self.trading_day_minutes
    }

    /// Trading minutes elapsed by time `t`.
    pub fn trading_elapsed(&self, t: Minutes) -> Minutes {
        self.trading_overlap(0.0, t)
    }

    /// Whether `t` falls inside a trading day of the horizon.
    pub fn is_trading(&self, t: Minutes) -> bool {
        if t.is_nan() || t < 0.0 {
            return false;
        }
        let day = (t / DAY_CYCLE_MINUTES).floor();
        day < self.days as f64 && t - day * DAY_CYCLE_MINUTES < self.trading_day_minutes
    }

    /// Length of `[start, end]` that falls inside trading hours.
    pub fn trading_overlap(&self, start: Minutes, end: Minutes) -> Minutes {
        if end <= start {
            return 0.0;
        }
        let first = (start / DAY_CYCLE_MINUTES).floor().max(0.0) as u64;
        let last = (end / DAY_CYCLE_MINUTES).floor() as u64;
        (first..=last.min(self.days as u64 - 1))
            .map(|d| {
                let open = d as f64 * DAY_CYCLE_MINUTES;
                let close = open + self.trading_day_minutes;
                (end.min(close) - start.max(open)).max(0.0)
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaffingPlan {
    pub cashiers: u32,
    pub normal_sellers: u32,
    pub expert_sellers: u32,
    pub section_managers: u32,
}

impl StaffingPlan {
    pub fn total(&self) -> u32 {
        self.cashiers + self.normal_sellers + self.expert_sellers + self.section_managers
    }

    /// Fill rule for the cashier sweep: one expert, one manager, the rest of
    /// `headcount` as normal sellers.
    pub fn with_cashiers(cashiers: u32, headcount: u32) -> Option<Self> {
        let normal = headcount.checked_sub(cashiers)?.checked_sub(2)?;
        Some(Self {
            cashiers,
            normal_sellers: normal,
            expert_sellers: 1,
            section_managers: 1,
        })
    }

    /// 3 cashiers, 5 normal sellers, 1 expert, 1 section manager.
    pub fn empowerment_baseline() -> Self {
        Self {
            cashiers: 3,
            normal_sellers: 5,
            expert_sellers: 1,
            section_managers: 1,
        }
    }
}

/// How the purchase probabilities at the browse exit are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityInterpretation {
    /// `buy_after_browse` is the share of all browsers who buy unassisted.
    #[default]
    Marginal,
    /// `buy_after_browse` applies to browsers who did not seek help.
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Durations {
    pub browse: TriangularParams,
    pub help: TriangularParams,
    pub pay_service: TriangularParams,
    pub refund_service: TriangularParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patience {
    pub help: TriangularParams,
    pub pay: TriangularParams,
    pub refund: TriangularParams,
}

impl Patience {
    pub fn for_queue(&self, kind: ServiceKind) -> &TriangularParams {
        match kind {
            ServiceKind::Help => &self.help,
            ServiceKind::Pay => &self.pay,
            ServiceKind::Refund => &self.refund,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probabilities {
    pub need_help: DecisionProb,
    pub buy_after_browse: DecisionProb,
    pub buy_after_help: DecisionProb,
    pub refund_goal: DecisionProb,
    pub repurchase_after_refund: DecisionProb,
    pub needs_expert: DecisionProb,
    pub interpretation: ProbabilityInterpretation,
}

impl Probabilities {
    /// Probability of an unassisted purchase given the customer did not seek help.
    pub fn buy_unassisted_conditional(&self) -> Result<DecisionProb, ParamError> {
        match self.interpretation {
            ProbabilityInterpretation::Conditional => Ok(self.buy_after_browse),
            ProbabilityInterpretation::Marginal => {
                let rest = 1.0 - self.need_help.value();
                if rest <= 0.0 {
                    // nobody reaches the branch
                    return Ok(DecisionProb::NEVER);
                }
                DecisionProb::new(self.buy_after_browse.value() / rest)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepartmentConfig {
    pub department: String,
    pub arrivals: ArrivalProfile,
    pub durations: Durations,
    pub patience: Patience,
    pub probabilities: Probabilities,
    pub satisfaction_weights: SatisfactionWeights,
    pub staffing: StaffingPlan,
    pub empowerment: EmpowermentPolicy,
    pub horizon: Horizon,
    pub cashier_priority: Vec<ServiceKind>,
    /// Values that were not in the file and fell back to built-in defaults.
    pub defaulted: Vec<String>,
}

impl DepartmentConfig {
    pub fn customer_rules(&self) -> CustomerRules {
        CustomerRules {
            browse: self.durations.browse,
            p_need_help: self.probabilities.need_help,
            p_buy_unassisted: self
                .probabilities
                .buy_unassisted_conditional()
                .expect("validated at load"),
            p_buy_after_help: self.probabilities.buy_after_help,
            p_refund_goal: self.probabilities.refund_goal,
            p_repurchase_after_refund: self.probabilities.repurchase_after_refund,
            p_needs_expert: self.probabilities.needs_expert,
        }
    }

    /// The shipped A&TV department.
    pub fn shipped_atv() -> Self {
        parse_config(SHIPPED_ATV, Path::new("<shipped dept_atv.toml>"))
            .expect("shipped config is valid")
    }

    /// The shipped WW department.
    pub fn shipped_ww() -> Self {
        parse_config(SHIPPED_WW, Path::new("<shipped dept_ww.toml>"))
            .expect("shipped config is valid")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    department: String,
    arrivals: RawArrivals,
    durations: RawDurations,
    patience: RawPatience,
    probabilities: RawProbabilities,
    satisfaction_weights: Option<RawWeights>,
    staffing: StaffingPlan,
    empowerment: Option<RawEmpowerment>,
    horizon: RawHorizon,
    queueing: Option<RawQueueing>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArrivals {
    rate_per_hour: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTri {
    min: f64,
    mode: f64,
    max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDurations {
    browse: RawTri,
    help: RawTri,
    pay_service: RawTri,
    refund_service: RawTri,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPatience {
    pay: RawTri,
    help: Option<RawTri>,
    refund: Option<RawTri>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbabilities {
    need_help: f64,
    buy_after_browse: f64,
    buy_after_help: f64,
    refund_goal: Option<f64>,
    repurchase_after_refund: Option<f64>,
    needs_expert: Option<f64>,
    interpretation: Option<ProbabilityInterpretation>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    purchase_completed: Option<i64>,
    help_received: Option<i64>,
    help_queue_abandoned: Option<i64>,
    pay_queue_abandoned: Option<i64>,
    refund_granted: Option<i64>,
    refund_queue_abandoned: Option<i64>,
    left_without_purchase: Option<i64>,
}

impl RawWeights {
    fn get(&self, kind: SatisfactionEvent) -> Option<i64> {
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
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEmpowerment {
    p_empowered: Option<f64>,
    empowered_duration_multiplier: Option<f64>,
    hold_cashier_during_referral: Option<bool>,
    authorization_overhead: Option<RawTri>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHorizon {
    days: u32,
    trading_day_minutes: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQueueing {
    cashier_priority: Vec<ServiceKind>,
}

/// Reads and validates a department config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<DepartmentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

/// Line (1-based) of `field` in the TOML text, if it can be found.
fn locate(text: &str, field: &str) -> Option<usize> {
    let lines: Vec<&str> = text.lines().collect();
    let header = |name: &str| {
        lines
            .iter()
            .position(|l| l.trim().trim_end_matches(|c: char| c != ']') == format!("[{name}]"))
    };
    if let Some(i) = header(field) {
        return Some(i + 1);
    }
    let (section, key) = field.rsplit_once('.').unwrap_or(("", field));
    let start = if section.is_empty() {
        0
    } else {
        header(section)? + 1
    };
    lines[start..]
        .iter()
        .take_while(|l| section.is_empty() || !l.trim_start().starts_with('['))
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| start + i + 1)
}

struct Validator<'a> {
    text: &'a str,
    path: PathBuf,
}

impl Validator<'_> {
    fn invalid(&self, field: &str, message: impl ToString) -> ConfigError {
        ConfigError::Invalid {
            path: self.path.clone(),
            field: field.to_owned(),
            line: locate(self.text, field),
            message: message.to_string(),
        }
    }

    fn tri(&self, field: &str, raw: &RawTri) -> Result<TriangularParams, ConfigError> {
        let parsed = if raw.min == raw.mode && raw.mode == raw.max {
            TriangularParams::constant(raw.min)
        } else {
            TriangularParams::new(raw.min, raw.mode, raw.max)
        };
        parsed.map_err(|e| self.invalid(field, e))
    }

    fn prob(&self, field: &str, p: f64) -> Result<DecisionProb, ConfigError> {
        DecisionProb::new(p).map_err(|e| self.invalid(field, e))
    }
}

/// Parses config text; `path` is only used for diagnostics.
pub fn parse_config(text: &str, path: &Path) -> Result<DepartmentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let v = Validator {
        text,
        path: path.to_path_buf(),
    };
    let mut defaulted = Vec::new();

    let arrivals = ArrivalProfile::new(raw.arrivals.rate_per_hour)
        .map_err(|e| v.invalid("arrivals.rate_per_hour", e))?;

    let durations = Durations {
        browse: v.tri("durations.browse", &raw.durations.browse)?,
        help: v.tri("durations.help", &raw.durations.help)?,
        pay_service: v.tri("durations.pay_service", &raw.durations.pay_service)?,
        refund_service: v.tri("durations.refund_service", &raw.durations.refund_service)?,
    };
    let pay_patience = v.tri("patience.pay", &raw.patience.pay)?;
    let mut queue_patience = |name: &str, raw: &Option<RawTri>| match raw {
        Some(r) => v.tri(&format!("patience.{name}"), r),
        None => {
            defaulted.push(format!("patience.{name} (reuses patience.pay)"));
            Ok(pay_patience)
        }
    };
    let patience = Patience {
        help: queue_patience("help", &raw.patience.help)?,
        refund: queue_patience("refund", &raw.patience.refund)?,
        pay: pay_patience,
    };

    let rp = &raw.probabilities;
    let mut optional_prob =
        |key: &str, value: Option<f64>, fallback: f64| -> Result<DecisionProb, ConfigError> {
            let field = format!("probabilities.{key}");
            match value {
                Some(p) => v.prob(&field, p),
                None => {
                    defaulted.push(format!("{field} = {fallback}"));
                    Ok(DecisionProb::new(fallback).expect("default in range"))
                }
            }
        };
    let probabilities = Probabilities {
        refund_goal: optional_prob("refund_goal", rp.refund_goal, 0.1)?,
        repurchase_after_refund: optional_prob(
            "repurchase_after_refund",
            rp.repurchase_after_refund,
            0.3,
        )?,
        needs_expert: optional_prob("needs_expert", rp.needs_expert, 0.2)?,
        need_help: v.prob("probabilities.need_help", rp.need_help)?,
        buy_after_browse: v.prob("probabilities.buy_after_browse", rp.buy_after_browse)?,
        buy_after_help: v.prob("probabilities.buy_after_help", rp.buy_after_help)?,
        interpretation: rp.interpretation.unwrap_or_default(),
    };
    probabilities.buy_unassisted_conditional().map_err(|_| {
        v.invalid(
            "probabilities.buy_after_browse",
            format!(
                "marginal unassisted purchase share {} exceeds the non-help share {}",
                probabilities.buy_after_browse.value(),
                1.0 - probabilities.need_help.value()
            ),
        )
    })?;

    let mut satisfaction_weights = SatisfactionWeights::default();
    match &raw.satisfaction_weights {
        None => defaulted.push("satisfaction_weights (all defaults)".to_owned()),
        Some(w) => {
            for kind in SatisfactionEvent::ALL {
                match w.get(kind) {
                    Some(weight) => satisfaction_weights.set(kind, weight),
                    None => defaulted.push(format!(
                        "satisfaction_weights.{} = {}",
                        kind.key(),
                        satisfaction_weights.weight(kind)
                    )),
                }
            }
        }
    }

    let mut empowerment = EmpowermentPolicy::default();
    match &raw.empowerment {
        None => defaulted.push("empowerment (all defaults)".to_owned()),
        Some(e) => {
            if let Some(p) = e.p_empowered {
                empowerment.p_empowered = v.prob("empowerment.p_empowered", p)?;
            }
            if let Some(m) = e.empowered_duration_multiplier {
                if !(m.is_finite() && m > 0.0) {
                    return Err(v.invalid(
                        "empowerment.empowered_duration_multiplier",
                        format!("must be positive, got {m}"),
                    ));
                }
                empowerment.empowered_duration_multiplier = m;
            }
            if let Some(h) = e.hold_cashier_during_referral {
                empowerment.hold_cashier_during_referral = h;
            }
            if let Some(t) = &e.authorization_overhead {
                empowerment.authorization_overhead =
                    v.tri("empowerment.authorization_overhead", t)?;
            }
        }
    }
    if empowerment.p_empowered.value() < 1.0 && raw.staffing.section_managers == 0 {
        return Err(v.invalid(
            "empowerment.p_empowered",
            "refunds need manager authorization but staffing has no section manager",
        ));
    }

    let horizon = Horizon::new(raw.horizon.days, raw.horizon.trading_day_minutes).map_err(|e| {
        let field = match e {
            HorizonError::NoDays => "horizon.days",
            HorizonError::DayLength(_) => "horizon.trading_day_minutes",
        };
        v.invalid(field, e)
    })?;

    let cashier_priority = match raw.queueing {
        None => vec![ServiceKind::Refund, ServiceKind::Pay],
        Some(q) => {
            let mut sorted = q.cashier_priority.clone();
            sorted.sort();
            if sorted != [ServiceKind::Pay, ServiceKind::Refund] {
                return Err(v.invalid(
                    "queueing.cashier_priority",
                    "must list \"refund\" and \"pay\" exactly once each",
                ));
            }
            q.cashier_priority
        }
    };

    Ok(DepartmentConfig {
        department: raw.department,
        arrivals,
        durations,
        patience,
        probabilities,
        satisfaction_weights,
        staffing: raw.staffing,
        empowerment,
        horizon,
        cashier_priority,
        defaulted,
    })
}
