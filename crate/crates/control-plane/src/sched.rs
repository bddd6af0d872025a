//! Queue disciplines for stage servers.
//!
//! The weighted discipline runs a 10-slot cycle allocating 6/3/1 slots to
//! HP/MP/LP by default. An empty class's slot falls one level down (HP to
//! MP to LP); an unused LP slot goes to the highest non-empty class, so the
//! server never idles while any queue holds work. Order within a class is
//! FIFO. A plain FIFO discipline serves as the application-agnostic
//! baseline.

use std::collections::VecDeque;

use crate::types::{ControlMessage, SchedulerConfig, UeClass};

pub trait Discipline {
    fn enqueue(&mut self, msg: ControlMessage);
    /// Next message to serve, or None when every queue is empty.
    fn schedule_next(&mut self) -> Option<ControlMessage>;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Three priority queues with a weighted slot cycle.
#[derive(Debug)]
pub struct WeightedScheduler {
    queues: [VecDeque<ControlMessage>; 3],
    /// Class assigned to each slot of the cycle.
    slot_plan: Vec<UeClass>,
    slot: usize,
    fallback: bool,
}

impl WeightedScheduler {
    pub fn new(config: &SchedulerConfig) -> Self {
        config.validate().expect("validated by caller");
        let (hp, mp, lp) = config.weights;
        let mut slot_plan = Vec::with_capacity(10);
        slot_plan.extend(std::iter::repeat_n(UeClass::Hp, hp as usize));
        slot_plan.extend(std::iter::repeat_n(UeClass::Mp, mp as usize));
        slot_plan.extend(std::iter::repeat_n(UeClass::Lp, lp as usize));
        Self {
            queues: Default::default(),
            slot_plan,
            slot: 0,
            fallback: config.fallback,
        }
    }

    fn try_order(&self, nominal: UeClass) -> [UeClass; 3] {
        // Unused slots fall to the next lower class; unused LP slots go to
        // the highest non-empty class.
        match nominal {
            UeClass::Hp => [UeClass::Hp, UeClass::Mp, UeClass::Lp],
            UeClass::Mp => [UeClass::Mp, UeClass::Lp, UeClass::Hp],
            UeClass::Lp => [UeClass::Lp, UeClass::Hp, UeClass::Mp],
        }
    }
}

impl Discipline for WeightedScheduler {
    fn enqueue(&mut self, msg: ControlMessage) {
        self.queues[msg.klass.index()].push_back(msg);
    }

    fn schedule_next(&mut self) -> Option<ControlMessage> {
        let nominal = self.slot_plan[self.slot];
        let msg = if self.fallback {
            self.try_order(nominal)
                .into_iter()
                .find_map(|k| {
                    let idx = k.index();
                    if self.queues[idx].is_empty() {
                        None
                    } else {
                        Some(idx)
                    }
                })
                .and_then(|idx| self.queues[idx].pop_front())
        } else {
            self.queues[nominal.index()].pop_front()
        };
        if msg.is_some() {
            // A slot is consumed only when it serves a message.
            self.slot = (self.slot + 1) % self.slot_plan.len();
        }
        msg
    }

    fn len(&self) -> usize {
        self.queues.iter().map(|q| q.len()).sum()
    }
}

/// Single application-agnostic FIFO queue.
#[derive(Debug, Default)]
pub struct FifoScheduler {
    queue: VecDeque<ControlMessage>,
}

impl FifoScheduler {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Discipline for FifoScheduler {
    fn enqueue(&mut self, msg: ControlMessage) {
        self.queue.push_back(msg);
    }

    fn schedule_next(&mut self) -> Option<ControlMessage> {
        self.queue.pop_front()
    }

    fn len(&self) -> usize {
        self.queue.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Procedure, Stage};

    fn msg(klass: UeClass, ue_id: u64) -> ControlMessage {
        ControlMessage {
            ue_id,
            stage: Stage::RrcAtBs,
            procedure: Procedure::Handover,
            step: 0,
            enqueue_us: 0,
            service_us: 100,
            klass,
            procedure_id: ue_id,
        }
    }

    fn saturated(sched: &mut WeightedScheduler, per_class: usize) {
        for i in 0..per_class {
            sched.enqueue(msg(UeClass::Hp, i as u64));
            sched.enqueue(msg(UeClass::Mp, 1_000_000 + i as u64));
            sched.enqueue(msg(UeClass::Lp, 2_000_000 + i as u64));
        }
    }

    #[test]
    fn saturated_shares_match_weights() {
        let mut sched = WeightedScheduler::new(&SchedulerConfig::default());
        saturated(&mut sched, 8_000);
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            let m = sched.schedule_next().expect("saturated");
            counts[m.klass.index()] += 1;
        }
        let shares: Vec<f64> = counts.iter().map(|c| *c as f64 / 10_000.0).collect();
        assert!((shares[0] - 0.6).abs() <= 0.02, "hp share {}", shares[0]);
        assert!((shares[1] - 0.3).abs() <= 0.02, "mp share {}", shares[1]);
        assert!((shares[2] - 0.1).abs() <= 0.02, "lp share {}", shares[2]);
    }

    #[test]
    fn empty_hp_slots_fall_to_mp() {
        let mut sched = WeightedScheduler::new(&SchedulerConfig::default());
        for i in 0..2_000u64 {
            sched.enqueue(msg(UeClass::Mp, i));
            sched.enqueue(msg(UeClass::Lp, 1_000_000 + i));
        }
        let mut counts = [0usize; 3];
        for _ in 0..1_000 {
            counts[sched.schedule_next().unwrap().klass.index()] += 1;
        }
        assert_eq!(counts[0], 0);
        assert_eq!(counts[1], 900, "MP gets its 3 slots plus HP's 6");
        assert_eq!(counts[2], 100);
    }

    #[test]
    fn only_lp_nonempty_is_served_every_slot() {
        let mut sched = WeightedScheduler::new(&SchedulerConfig::default());
        for i in 0..100u64 {
            sched.enqueue(msg(UeClass::Lp, i));
        }
        for _ in 0..100 {
            assert_eq!(sched.schedule_next().unwrap().klass, UeClass::Lp);
        }
        assert!(sched.schedule_next().is_none());
    }

    #[test]
    fn within_class_order_is_fifo() {
        let mut sched = WeightedScheduler::new(&SchedulerConfig::default());
        for i in 0..50u64 {
            sched.enqueue(msg(UeClass::Hp, i));
        }
        let mut last = None;
        while let Some(m) = sched.schedule_next() {
            if let Some(prev) = last {
                assert!(m.ue_id > prev);
            }
            last = Some(m.ue_id);
        }
    }

    #[test]
    fn empty_scheduler_reports_none_and_holds_slot() {
        let mut sched = WeightedScheduler::new(&SchedulerConfig::default());
        assert!(sched.schedule_next().is_none());
        sched.enqueue(msg(UeClass::Lp, 1));
        assert_eq!(sched.schedule_next().unwrap().klass, UeClass::Lp);
    }
}
