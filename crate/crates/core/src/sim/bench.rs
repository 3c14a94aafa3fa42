use std::cell::RefCell;
use std::rc::Rc;

use crate::clock::SimTime;
use crate::error::Result;
use crate::policy::{BulbActuator, LightSensor};
use crate::scene::{apply_bulb_command, read_light_sensor_with, BulbState, EnvironmentState, SENSOR_RELATIVE_NOISE};

use super::seeds::derive_seed;

struct Inner {
    env: EnvironmentState,
    region: String,
    latency_s: f64,
    now: SimTime,
    pending: Option<(SimTime, BulbState)>,
    seed: u64,
    reads: u64,
    relative_noise: f64,
}

impl Inner {
    fn settle(&mut self) -> Result<()> {
        if let Some((due, bulb)) = self.pending {
            if due <= self.now {
                self.env = apply_bulb_command(&bulb, &self.env, &self.region)?;
                self.pending = None;
            }
        }
        Ok(())
    }
}

/// One simulated region with a bulb and a light sensor on a private
/// clock, for running calibration sweeps.
#[derive(Clone)]
pub struct SimulatedBench(Rc<RefCell<Inner>>);

impl SimulatedBench {
    pub fn new(env: EnvironmentState, region: impl Into<String>, bulb_latency_s: f64, seed: u64) -> Result<Self> {
        let region = region.into();
        env.region(&region)?;
        Ok(Self(Rc::new(RefCell::new(Inner {
            env,
            region,
            latency_s: bulb_latency_s,
            now: SimTime::ZERO,
            pending: None,
            seed,
            reads: 0,
            relative_noise: SENSOR_RELATIVE_NOISE,
        }))))
    }

    pub fn with_sensor_noise(self, relative_noise: f64) -> Self {
        self.0.borrow_mut().relative_noise = relative_noise;
        self
    }

    pub fn now(&self) -> SimTime {
        self.0.borrow().now
    }

    pub fn lux(&self) -> f64 {
        let inner = self.0.borrow();
        inner.env.region(&inner.region).map(|r| r.illuminance).unwrap_or(0.0)
    }

    pub fn bulb(&self) -> BenchBulb {
        BenchBulb(self.clone())
    }

    pub fn sensor(&self) -> BenchSensor {
        BenchSensor(self.clone())
    }
}

pub struct BenchBulb(SimulatedBench);

pub struct BenchSensor(SimulatedBench);

impl BulbActuator for BenchBulb {
    fn set_brightness(&mut self, command: f64) -> Result<()> {
        let mut inner = self.0 .0.borrow_mut();
        let bulb = BulbState::new(command, inner.latency_s)?;
        let due = bulb.effective_at(inner.now);
        inner.pending = Some((due, bulb));
        inner.settle()
    }

    fn latency_s(&self) -> f64 {
        self.0 .0.borrow().latency_s
    }

    fn wait(&mut self, seconds: f64) {
        let mut inner = self.0 .0.borrow_mut();
        inner.now = inner.now + SimTime::from_secs_f64(seconds);
    }
}

impl LightSensor for BenchSensor {
    fn read_lux(&mut self) -> Result<f64> {
        let mut inner = self.0 .0.borrow_mut();
        inner.settle()?;
        inner.reads += 1;
        let seed = derive_seed(inner.seed, &["calibration", &inner.region], inner.reads);
        let region = inner.env.region(&inner.region)?;
        Ok(read_light_sensor_with(region, seed, inner.relative_noise))
    }
}
