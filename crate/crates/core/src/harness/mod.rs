//! Experiment harness: configs, runners and report files.

pub mod checks;
pub mod config;
pub mod counter;
pub mod emit;
pub mod estimates;
mod nonfinite;
pub mod report;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub use config::{ExperimentConfig, ExperimentId};
pub use emit::{emit, Format};
pub use report::{Aggregate, Branch, EstimateReport, MemberRecord, Series, Verdict};

use crate::error::Result;

/// Runs one experiment after validating its config.
pub fn run(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentId::E1 => estimates::run_e1(cfg),
        ExperimentId::E2 => estimates::run_e2(cfg),
        ExperimentId::E3 => estimates::run_e3(cfg),
        ExperimentId::E4 => estimates::run_e4(cfg),
        ExperimentId::E5 => estimates::run_e5(cfg),
        ExperimentId::E6 => estimates::run_e6(cfg),
        ExperimentId::E7 => estimates::run_e7(cfg),
        ExperimentId::E8 => estimates::run_e8(cfg),
        ExperimentId::C1 => counter::run_c1(cfg),
        ExperimentId::C2 => counter::run_c2(cfg),
        ExperimentId::L1 => checks::run_l1(cfg),
        ExperimentId::Q1 => checks::run_q1(cfg),
    }
}

/// Maps `f` over `items` on scoped worker threads; results keep item order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap_or_else(|e| e.into_inner()).into_iter().map(|r| r.expect("every slot filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<u64> = (0..100).collect();
        let out = par_map(&items, |v| v * v);
        assert_eq!(out, items.iter().map(|v| v * v).collect::<Vec<_>>());
        assert!(par_map(&[] as &[u8], |v| *v).is_empty());
    }
}
