//! Inter-edge link emulation: a serializing bandwidth pipe plus fixed
//! one-way latency. Transmissions queue behind each other per direction, so
//! frame order is preserved.

#[derive(Debug, Clone)]
pub struct Link {
    pub bandwidth_bps: f64,
    pub latency_us: u64,
    busy_until_us: u64,
    pub bytes_carried: u64,
}

impl Link {
    pub fn new(bandwidth_bps: f64, latency_us: u64) -> Self {
        Self {
            bandwidth_bps,
            latency_us,
            busy_until_us: 0,
            bytes_carried: 0,
        }
    }

    /// Schedules `bytes` onto the link at `now_us`, returning the delivery
    /// time at the far end.
    pub fn transmit(&mut self, now_us: u64, bytes: usize) -> u64 {
        let start = now_us.max(self.busy_until_us);
        let tx_us = (bytes as f64 * 8.0 / self.bandwidth_bps * 1e6).ceil() as u64;
        self.busy_until_us = start + tx_us;
        self.bytes_carried += bytes as u64;
        self.busy_until_us + self.latency_us
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmissions_serialize_and_add_latency() {
        let mut link = Link::new(1e9, 1_000);
        // 125000 bytes = 1 ms on a 1 Gb/s pipe.
        let first = link.transmit(0, 125_000);
        assert_eq!(first, 2_000);
        // Second frame queues behind the first.
        let second = link.transmit(0, 125_000);
        assert_eq!(second, 3_000);
        // After the pipe idles, timing restarts from `now`.
        let third = link.transmit(10_000, 125);
        assert_eq!(third, 10_000 + 1 + 1_000);
        assert_eq!(link.bytes_carried, 250_125);
    }
}
