use serde::{Deserialize, Serialize};

use super::illuminance::select_optimal_lux;
use crate::clock::SimTime;
use crate::scene::{EInkState, MarkerSpec};
use crate::vision::{MatchReport, TextureClass};

pub const DEFAULT_TARGET_PERCENTAGE: f64 = 60.0;
pub const MAX_LIGHT_ATTEMPTS: u32 = 2;

/// Escalation phases in the order they are tried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkerPhase {
    AdjustLight,
    EnlargeMarker,
    SwitchPattern,
    Satisfied,
    Exhausted,
}

/// What the controller wants changed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum MarkerAction {
    /// Bring the region to this illuminance.
    DriveLux {
        lux: f64,
    },
    ShowMarker {
        spec: MarkerSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerControllerState {
    pub target_percentage: f64,
    pub phase: MarkerPhase,
    /// Furthest escalation phase reached; never moves backwards. `phase`
    /// equals this unless the last report met the target.
    pub escalation: MarkerPhase,
    pub light_attempts: u32,
    pub enlarge_attempts: u32,
    pub switch_attempts: u32,
    /// Spec last requested from the display.
    pub marker: MarkerSpec,
    /// Largest size the display may show.
    pub max_size_index: u8,
    pub settle_until: SimTime,
    pub eink_latency_s: f64,
    pub last_percentage: Option<f64>,
}

impl MarkerControllerState {
    pub fn new(marker: MarkerSpec) -> Self {
        Self {
            target_percentage: DEFAULT_TARGET_PERCENTAGE,
            phase: MarkerPhase::AdjustLight,
            escalation: MarkerPhase::AdjustLight,
            light_attempts: 0,
            enlarge_attempts: 0,
            switch_attempts: 0,
            marker,
            max_size_index: MarkerSpec::MAX_SIZE_INDEX,
            settle_until: SimTime::ZERO,
            eink_latency_s: EInkState::DEFAULT_LATENCY_S,
            last_percentage: None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.phase, MarkerPhase::Satisfied | MarkerPhase::Exhausted)
    }

    /// Total display changes requested so far.
    pub fn eink_commands(&self) -> u32 {
        self.enlarge_attempts + self.switch_attempts
    }
}

/// Advance the escalation by one observation. Reports arriving before an
/// earlier display change has had time to show are ignored.
pub fn marker_control_step(
    state: &mut MarkerControllerState,
    report: &MatchReport,
    texture: TextureClass,
    now: SimTime,
) -> Vec<MarkerAction> {
    if now < state.settle_until {
        return Vec::new();
    }
    state.last_percentage = Some(report.percentage);
    if report.percentage >= state.target_percentage {
        state.phase = MarkerPhase::Satisfied;
        return Vec::new();
    }
    loop {
        match state.escalation {
            MarkerPhase::AdjustLight if state.light_attempts < MAX_LIGHT_ATTEMPTS => {
                state.light_attempts += 1;
                state.phase = MarkerPhase::AdjustLight;
                return vec![MarkerAction::DriveLux { lux: select_optimal_lux(texture) }];
            }
            MarkerPhase::AdjustLight => state.escalation = MarkerPhase::EnlargeMarker,
            MarkerPhase::EnlargeMarker if state.marker.size_index < state.max_size_index => {
                state.enlarge_attempts += 1;
                state.marker.size_index += 1;
                return show(state, now, MarkerPhase::EnlargeMarker);
            }
            MarkerPhase::EnlargeMarker => state.escalation = MarkerPhase::SwitchPattern,
            MarkerPhase::SwitchPattern => match state.marker.pattern.next() {
                Some(next) => {
                    state.switch_attempts += 1;
                    state.marker.pattern = next;
                    return show(state, now, MarkerPhase::SwitchPattern);
                }
                None => state.escalation = MarkerPhase::Exhausted,
            },
            MarkerPhase::Exhausted | MarkerPhase::Satisfied => {
                state.escalation = MarkerPhase::Exhausted;
                state.phase = MarkerPhase::Exhausted;
                return Vec::new();
            }
        }
    }
}

fn show(state: &mut MarkerControllerState, now: SimTime, phase: MarkerPhase) -> Vec<MarkerAction> {
    state.phase = phase;
    state.settle_until = now + SimTime::from_secs_f64(state.eink_latency_s);
    vec![MarkerAction::ShowMarker { spec: state.marker }]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::MarkerPattern;

    fn report(p: f64) -> MatchReport {
        MatchReport::new((p * 10.0) as usize, 1000)
    }

    fn small_a() -> MarkerSpec {
        MarkerSpec::new(MarkerPattern::BinaryGridA, 0).unwrap()
    }

    #[test]
    fn above_target_is_satisfied() {
        let mut s = MarkerControllerState::new(small_a());
        let cmds = marker_control_step(&mut s, &report(85.0), TextureClass::Coarse, SimTime(0));
        assert!(cmds.is_empty());
        assert_eq!(s.phase, MarkerPhase::Satisfied);
    }

    #[test]
    fn full_escalation_order() {
        let mut s = MarkerControllerState::new(small_a());
        let mut t = 0;
        let mut trace = Vec::new();
        for _ in 0..20 {
            let cmds = marker_control_step(&mut s, &report(0.0), TextureClass::Coarse, SimTime(t));
            trace.push((s.phase, cmds));
            t += 5000;
            if s.phase == MarkerPhase::Exhausted {
                break;
            }
        }
        let phases: Vec<MarkerPhase> = trace.iter().map(|(p, _)| *p).collect();
        use MarkerPhase::*;
        assert_eq!(
            phases,
            vec![
                AdjustLight,
                AdjustLight,
                EnlargeMarker,
                EnlargeMarker,
                SwitchPattern,
                SwitchPattern,
                SwitchPattern,
                Exhausted
            ]
        );
        assert_eq!(trace[0].1, vec![MarkerAction::DriveLux { lux: 300.0 }]);
        assert_eq!(s.marker, MarkerSpec::new(MarkerPattern::ImageNonuniform, 2).unwrap());
        assert_eq!(s.eink_commands(), 5);
    }

    #[test]
    fn size_cap_skips_enlarging() {
        let mut s = MarkerControllerState::new(small_a());
        s.max_size_index = 0;
        let mut t = 0;
        while !s.is_terminal() {
            marker_control_step(&mut s, &report(0.0), TextureClass::Fine, SimTime(t));
            t += 5000;
        }
        assert_eq!(s.phase, MarkerPhase::Exhausted);
        assert_eq!(s.enlarge_attempts, 0);
        assert_eq!(s.switch_attempts, 3);
    }

    #[test]
    fn reports_during_eink_update_are_ignored() {
        let mut s = MarkerControllerState::new(small_a());
        s.light_attempts = MAX_LIGHT_ATTEMPTS;
        let cmds = marker_control_step(&mut s, &report(0.0), TextureClass::Coarse, SimTime(0));
        assert_eq!(cmds.len(), 1);
        let before = s.clone();
        assert!(marker_control_step(&mut s, &report(0.0), TextureClass::Coarse, SimTime(999)).is_empty());
        assert_eq!(s, before);
        assert_eq!(marker_control_step(&mut s, &report(0.0), TextureClass::Coarse, SimTime(1000)).len(), 1);
    }

    #[test]
    fn dropping_below_target_resumes_escalation() {
        let mut s = MarkerControllerState::new(small_a());
        marker_control_step(&mut s, &report(10.0), TextureClass::Coarse, SimTime(0));
        marker_control_step(&mut s, &report(70.0), TextureClass::Coarse, SimTime(5000));
        assert_eq!(s.phase, MarkerPhase::Satisfied);
        marker_control_step(&mut s, &report(10.0), TextureClass::Coarse, SimTime(10000));
        assert_eq!(s.phase, MarkerPhase::AdjustLight);
        assert_eq!(s.light_attempts, 2);
    }
}
