//! Workload generation: Poisson arrivals, uniform source-destination pairs
//! and exponential or Pareto holding times.

use rand::distr::OpenClosed01;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::rng::{seeded_rng, Stream};
use crate::topology::{NodeId, Topology};

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("mean holding time must be positive, got {0}")]
    NonPositiveMean(f64),
    #[error("Pareto shape must exceed 1 for a finite mean, got {0}")]
    InfiniteMean(f64),
    #[error("Pareto location must be positive, got {0}")]
    NonPositiveLocation(f64),
    #[error("target mean {mean} must exceed the Pareto location {location}")]
    MeanBelowLocation { mean: f64, location: f64 },
    #[error("arrival rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("request count must be at least 1")]
    NoRequests,
}

/// Holding-time distribution of a lightpath.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HoldingModel {
    Exponential { mean: f64 },
    Pareto { shape: f64, location: f64 },
}

impl HoldingModel {
    pub fn exponential(mean: f64) -> Result<Self, TrafficError> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(TrafficError::NonPositiveMean(mean));
        }
        Ok(HoldingModel::Exponential { mean })
    }

    pub fn pareto(shape: f64, location: f64) -> Result<Self, TrafficError> {
        if !(shape > 1.0) || !shape.is_finite() {
            return Err(TrafficError::InfiniteMean(shape));
        }
        if !(location > 0.0) || !location.is_finite() {
            return Err(TrafficError::NonPositiveLocation(location));
        }
        Ok(HoldingModel::Pareto { shape, location })
    }

    /// Pareto with the given location whose mean equals `mean`.
    pub fn pareto_matched(mean: f64, location: f64) -> Result<Self, TrafficError> {
        let shape = solve_pareto_shape_for_mean(mean, location)?;
        Self::pareto(shape, location)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            HoldingModel::Exponential { mean } => mean,
            HoldingModel::Pareto { shape, location } => shape * location / (shape - 1.0),
        }
    }
}

/// Closed-form Pareto mean `shape * location / (shape - 1)`.
pub fn pareto_mean(shape: f64, location: f64) -> Result<f64, TrafficError> {
    HoldingModel::pareto(shape, location).map(|m| m.mean())
}

/// Offered load in Erlang.
pub fn erlang_load(arrival_rate: f64, mean_holding: f64) -> f64 {
    arrival_rate * mean_holding
}

/// Inverts the Pareto mean for the shape: `mean / (mean - location)`.
pub fn solve_pareto_shape_for_mean(target_mean: f64, location: f64) -> Result<f64, TrafficError> {
    if !(location > 0.0) {
        return Err(TrafficError::NonPositiveLocation(location));
    }
    if !(target_mean > location) {
        return Err(TrafficError::MeanBelowLocation {
            mean: target_mean,
            location,
        });
    }
    Ok(target_mean / (target_mean - location))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrafficConfig {
    pub arrival_rate: f64,
    pub holding: HoldingModel,
    pub request_count: u64,
    pub seed: u64,
}

impl TrafficConfig {
    pub fn new(
        arrival_rate: f64,
        holding: HoldingModel,
        request_count: u64,
        seed: u64,
    ) -> Result<Self, TrafficError> {
        if !(arrival_rate > 0.0) || !arrival_rate.is_finite() {
            return Err(TrafficError::NonPositiveRate(arrival_rate));
        }
        if request_count == 0 {
            return Err(TrafficError::NoRequests);
        }
        Ok(TrafficConfig {
            arrival_rate,
            holding,
            request_count,
            seed,
        })
    }

    /// Config hitting `load` Erlang with the given holding model.
    pub fn for_load(
        load: f64,
        holding: HoldingModel,
        request_count: u64,
        seed: u64,
    ) -> Result<Self, TrafficError> {
        Self::new(load / holding.mean(), holding, request_count, seed)
    }

    pub fn offered_load(&self) -> f64 {
        erlang_load(self.arrival_rate, self.holding.mean())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightpathRequest {
    pub id: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub arrival_time: f64,
    pub holding_time: f64,
}

/// Samples one holding time. Pareto draws use the inverse transform
/// `location * U^(-1/shape)` with `U` uniform on (0, 1].
pub fn sample_holding<R: Rng + ?Sized>(model: &HoldingModel, rng: &mut R) -> f64 {
    match *model {
        HoldingModel::Exponential { mean } => {
            let exp = Exp::new(1.0 / mean).expect("validated mean");
            exp.sample(rng)
        }
        HoldingModel::Pareto { shape, location } => {
            let u: f64 = rng.sample(OpenClosed01);
            location * u.powf(-1.0 / shape)
        }
    }
}

/// Seeded, finite stream of lightpath requests.
#[derive(Clone, Debug)]
pub struct RequestGenerator {
    node_count: usize,
    holding: HoldingModel,
    interarrival: Exp<f64>,
    holding_exp: Option<Exp<f64>>,
    remaining: u64,
    next_id: u64,
    clock: f64,
    rng: ChaCha8Rng,
}

impl RequestGenerator {
    fn next_holding(&mut self) -> f64 {
        let t = match (&self.holding_exp, self.holding) {
            (Some(exp), _) => exp.sample(&mut self.rng),
            (None, model) => sample_holding(&model, &mut self.rng),
        };
        // Exp can return exactly 0 with vanishing probability
        t.max(f64::MIN_POSITIVE)
    }
}

impl Iterator for RequestGenerator {
    type Item = LightpathRequest;

    fn next(&mut self) -> Option<LightpathRequest> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        self.clock += self.interarrival.sample(&mut self.rng);
        let n = self.node_count;
        let source = self.rng.random_range(0..n);
        let mut destination = self.rng.random_range(0..n - 1);
        if destination >= source {
            destination += 1;
        }
        let holding_time = self.next_holding();
        let id = self.next_id;
        self.next_id += 1;
        Some(LightpathRequest {
            id,
            source: NodeId(source),
            destination: NodeId(destination),
            arrival_time: self.clock,
            holding_time,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

/// Request stream for `cfg` over the nodes of `topology` (at least 2).
pub fn generate_requests(cfg: &TrafficConfig, topology: &Topology) -> RequestGenerator {
    assert!(topology.node_count() >= 2, "traffic needs at least two nodes");
    let holding_exp = match cfg.holding {
        HoldingModel::Exponential { mean } => Some(Exp::new(1.0 / mean).expect("validated mean")),
        HoldingModel::Pareto { .. } => None,
    };
    RequestGenerator {
        node_count: topology.node_count(),
        holding: cfg.holding,
        interarrival: Exp::new(cfg.arrival_rate).expect("validated rate"),
        holding_exp,
        remaining: cfg.request_count,
        next_id: 0,
        clock: 0.0,
        rng: seeded_rng(cfg.seed, Stream::Traffic),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(xs: impl Iterator<Item = f64>) -> f64 {
        let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        s / n as f64
    }

    #[test]
    fn closed_forms() {
        assert!((pareto_mean(1.2, 1.0).unwrap() - 6.0).abs() < 1e-12);
        assert!((pareto_mean(2.0, 3.0).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(pareto_mean(1.0, 1.0), Err(TrafficError::InfiniteMean(1.0)));
        assert_eq!(erlang_load(6.0, 10.0), 60.0);
        assert_eq!(erlang_load(1.0, 1.0), 1.0);
        assert_eq!(erlang_load(8.0, 10.0), 80.0);
        assert!((solve_pareto_shape_for_mean(6.0, 1.5).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((solve_pareto_shape_for_mean(3.0, 1.5).unwrap() - 2.0).abs() < 1e-12);
        assert!(solve_pareto_shape_for_mean(1.0, 1.5).is_err());
    }

    #[test]
    fn generator_means() {
        let t = Topology::nsf14();
        let cfg = TrafficConfig::new(6.0, HoldingModel::exponential(10.0).unwrap(), 100_000, 7).unwrap();
        let reqs: Vec<_> = generate_requests(&cfg, &t).collect();
        assert_eq!(reqs.len(), 100_000);
        let last = reqs.last().unwrap().arrival_time;
        let gap = last / reqs.len() as f64;
        assert!((gap - 1.0 / 6.0).abs() / (1.0 / 6.0) < 0.02, "gap {gap}");
        let hold = mean(reqs.iter().map(|r| r.holding_time));
        assert!((hold - 10.0).abs() / 10.0 < 0.02, "hold {hold}");
        assert!(reqs.windows(2).all(|w| w[0].arrival_time <= w[1].arrival_time));
        assert!(reqs.iter().all(|r| r.source != r.destination && r.holding_time > 0.0));
    }

    #[test]
    fn pareto_support() {
        let mut rng = seeded_rng(3, Stream::Traffic);
        let model = HoldingModel::pareto(1.2, 1.0).unwrap();
        assert!((0..1_000_000).all(|_| sample_holding(&model, &mut rng) >= 1.0));
    }

    #[test]
    fn two_nodes_only_ordered_pairs() {
        let t = Topology::new(2, &[(0, 1, 1.0)]).unwrap();
        let cfg = TrafficConfig::new(1.0, HoldingModel::exponential(1.0).unwrap(), 1000, 1).unwrap();
        let mut seen = [false; 2];
        for r in generate_requests(&cfg, &t) {
            match (r.source.0, r.destination.0) {
                (0, 1) => seen[0] = true,
                (1, 0) => seen[1] = true,
                other => panic!("unexpected pair {other:?}"),
            }
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn deterministic_per_seed() {
        let t = Topology::nsf14();
        let cfg = TrafficConfig::new(2.0, HoldingModel::pareto(1.5, 2.0).unwrap(), 500, 99).unwrap();
        let a: Vec<_> = generate_requests(&cfg, &t).collect();
        let b: Vec<_> = generate_requests(&cfg, &t).collect();
        assert_eq!(a, b);
        let other = TrafficConfig { seed: 100, ..cfg };
        let c: Vec<_> = generate_requests(&other, &t).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn matched_means_give_equal_load() {
        let pareto = HoldingModel::pareto_matched(10.0, 1.5).unwrap();
        let exp = HoldingModel::exponential(10.0).unwrap();
        assert!((pareto.mean() - 10.0).abs() < 1e-12);
        let a = TrafficConfig::new(6.0, pareto, 1, 0).unwrap();
        let b = TrafficConfig::new(6.0, exp, 1, 0).unwrap();
        assert!((a.offered_load() - b.offered_load()).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        let h = HoldingModel::exponential(1.0).unwrap();
        assert_eq!(TrafficConfig::new(0.0, h, 1, 0), Err(TrafficError::NonPositiveRate(0.0)));
        assert_eq!(TrafficConfig::new(1.0, h, 0, 0), Err(TrafficError::NoRequests));
        assert!(HoldingModel::exponential(0.0).is_err());
        assert!(HoldingModel::pareto(2.0, 0.0).is_err());
    }
}
