use serde::{Deserialize, Serialize};

use crate::agents::{StaffAgent, StaffRole};
use crate::model::Horizon;

/// Outputs of one replication.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    pub transactions: u64,
    pub customers_entered: u64,
    pub customers_left: u64,
    pub purchasing_departures: u64,
    pub non_purchase_departures: u64,
    pub satisfied_customers: u64,
    pub overall_satisfaction: i64,
    pub refund_satisfaction: i64,
    pub refunds_granted: u64,
    pub manager_authorizations: u64,
    pub help_abandoned: u64,
    pub pay_abandoned: u64,
    pub refund_abandoned: u64,
    pub cashier_utilization: Option<f64>,
    pub seller_utilization: Option<f64>,
    pub manager_utilization: Option<f64>,
}

impl RunMetrics {
    pub fn abandonments(&self) -> u64 {
        self.help_abandoned + self.pay_abandoned + self.refund_abandoned
    }

    /// Names of the numeric metrics, as used in result CSVs.
    pub const FIELDS: [&'static str; 16] = [
        "transactions",
        "satisfied_customers",
        "overall_satisfaction",
        "refund_satisfaction",
        "cashier_utilization",
        "seller_utilization",
        "manager_utilization",
        "customers_entered",
        "customers_left",
        "purchasing_departures",
        "non_purchase_departures",
        "refunds_granted",
        "manager_authorizations",
        "help_abandoned",
        "pay_abandoned",
        "refund_abandoned",
    ];

    /// Value of a metric by name; `None` for unknown names, `Some(None)` for
    /// an absent utilization.
    pub fn get(&self, name: &str) -> Option<Option<f64>> {
        let v = match name {
            "transactions" => self.transactions as f64,
            "customers_entered" => self.customers_entered as f64,
            "customers_left" => self.customers_left as f64,
            "purchasing_departures" => self.purchasing_departures as f64,
            "non_purchase_departures" => self.non_purchase_departures as f64,
            "satisfied_customers" => self.satisfied_customers as f64,
            "overall_satisfaction" => self.overall_satisfaction as f64,
            "refund_satisfaction" => self.refund_satisfaction as f64,
            "refunds_granted" => self.refunds_granted as f64,
            "manager_authorizations" => self.manager_authorizations as f64,
            "help_abandoned" => self.help_abandoned as f64,
            "pay_abandoned" => self.pay_abandoned as f64,
            "refund_abandoned" => self.refund_abandoned as f64,
            "cashier_utilization" => return Some(self.cashier_utilization),
            "seller_utilization" => return Some(self.seller_utilization),
            "manager_utilization" => return Some(self.manager_utilization),
            _ => return None,
        };
        Some(Some(v))
    }
}

/// Busy time of `roles` over their maximum capacity; `None` with no headcount.
pub fn utilization<'a>(
    staff: impl IntoIterator<Item = &'a StaffAgent>,
    roles: &[StaffRole],
    horizon: &Horizon,
) -> Option<f64> {
    let (count, busy) = staff
        .into_iter()
        .filter(|s| roles.contains(&s.role))
        .fold((0usize, 0.0), |(n, b), s| (n + 1, b + s.busy_minutes()));
    utilization_of(busy, count, horizon.trading_minutes())
}

pub fn utilization_of(busy_minutes: f64, headcount: usize, trading_minutes: f64) -> Option<f64> {
    if headcount == 0 || trading_minutes <= 0.0 {
        return None;
    }
    Some(busy_minutes / (headcount as f64 * trading_minutes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utilization_arithmetic() {
        assert_eq!(utilization_of(600.0, 1, 600.0), Some(1.0));
        assert_eq!(utilization_of(0.0, 2, 600.0), Some(0.0));
        assert_eq!(utilization_of(300.0, 1, 600.0), Some(0.5));
        assert_eq!(utilization_of(10.0, 0, 600.0), None);
    }

    #[test]
    fn role_filtering() {
        let h = Horizon::new(1, 600.0).unwrap();
        let mut a = StaffAgent::new(0, StaffRole::Cashier);
        a.seize(1, 0.0).unwrap();
        a.release(300.0, &h).unwrap();
        let b = StaffAgent::new(1, StaffRole::NormalSeller);
        let staff = [a, b];
        assert_eq!(utilization(&staff, &[StaffRole::Cashier], &h), Some(0.5));
        assert_eq!(
            utilization(&staff, &[StaffRole::NormalSeller], &h),
            Some(0.0)
        );
        assert_eq!(utilization(&staff, &[StaffRole::SectionManager], &h), None);
    }

    #[test]
    fn metric_lookup() {
        let m = RunMetrics {
            transactions: 4,
            ..Default::default()
        };
        assert_eq!(m.get("transactions"), Some(Some(4.0)));
        assert_eq!(m.get("cashier_utilization"), Some(None));
        assert_eq!(m.get("nope"), None);
        assert!(RunMetrics::FIELDS.iter().all(|f| m.get(f).is_some()));
    }
}
