use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Token bucket shared by all fetches of one client.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<BucketState>,
}

#[derive(Debug)]
struct BucketState {
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    /// `rate` tokens per second, bursting up to `capacity`.
    pub fn new(rate: f64, capacity: f64) -> Self {
        assert!(rate > 0.0 && capacity >= 1.0, "rate must be positive and capacity at least one token");
        TokenBucket { rate, capacity, state: Mutex::new(BucketState { tokens: capacity, last: Instant::now() }) }
    }

    pub fn per_second(rate: f64) -> Self {
        TokenBucket::new(rate, rate.max(1.0))
    }

    /// Takes a token if one is available, otherwise reports how long until one is.
    pub fn try_acquire_at(&self, now: Instant) -> Result<(), Duration> {
        let mut s = self.state.lock().expect("token bucket poisoned");
        let elapsed = now.saturating_duration_since(s.last).as_secs_f64();
        s.tokens = (s.tokens + elapsed * self.rate).min(self.capacity);
        s.last = now.max(s.last);
        if s.tokens >= 1.0 {
            s.tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - s.tokens) / self.rate))
        }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            match self.try_acquire_at(Instant::now()) {
                Ok(()) => return,
                Err(wait) => std::thread::sleep(wait),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burst_then_refill() {
        let bucket = TokenBucket::new(5.0, 2.0);
        let t0 = Instant::now();
        assert!(bucket.try_acquire_at(t0).is_ok());
        assert!(bucket.try_acquire_at(t0).is_ok());
        let wait = bucket.try_acquire_at(t0).unwrap_err();
        assert!((wait.as_secs_f64() - 0.2).abs() < 1e-9);
        assert!(bucket.try_acquire_at(t0 + Duration::from_millis(200)).is_ok());
        assert!(bucket.try_acquire_at(t0 + Duration::from_millis(250)).is_err());
    }

    #[test]
    fn never_exceeds_capacity() {
        let bucket = TokenBucket::new(5.0, 5.0);
        let later = Instant::now() + Duration::from_secs(100);
        for _ in 0..5 {
            assert!(bucket.try_acquire_at(later).is_ok());
        }
        assert!(bucket.try_acquire_at(later).is_err());
    }
}
